use num_traits::ToPrimitive;

use super::config::{
    BilapConfig, Experiment, ExperimentConfig, FieldMomentsConfig, FullTheoremConfig, GreenConfig, PairCorrConfig,
    QConfig, UstConfig, Weights,
};
use super::{num, Check, CsvTable, RunContext};
use crate::bilap::{exact_covariance, exact_pairing_variance, membrane_kernel_constant, BilapSampler, TorusTestVector};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_pair_correlation, estimate_same_tree, gaussianity_tests, log_log_slope, moment_suite,
    rescaled_correlation, weighted_log_log_slope, EstimateWithError, MomentAccumulator,
};
use crate::green::{green_convolution, green_quadrature};
use crate::intersection::{estimate_q, predict_pair_correlation, TripleWalkConfig};
use crate::lattice::{BoxGeometry, Site, TorusGeometry};
use crate::oracle::{exact_pair_correlation, fixtures, spanning_tree_count, wilson_uniformity, SmallGraph};
use crate::rng::StreamFamily;
use crate::spin::{sample_pairings, PairingSamples, PairingStencil, SpinLaw, TestFunction};
use crate::walk::green_mc_many;

const STDERR_BAND: f64 = 3.0;
const GREEN_SLOPE_TOL: f64 = 0.1;
const CHI_SQUARE_LEVEL: f64 = 0.01;
const Q_STABILITY_BAND: f64 = 2.0;
const PREDICTION_REL_TOL: f64 = 0.15;
const KURTOSIS_RANGE: (f64, f64) = (0.85, 1.15);
const KS_LEVEL: f64 = 0.01;
const THEOREM_REL_TOL: f64 = 0.15;

pub(super) fn dispatch(exp: Experiment, cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Vec<Check>> {
    match exp {
        Experiment::Green => green(&cfg.green, ctx),
        Experiment::UstCheck => ust_check(&cfg.ust_check, ctx),
        Experiment::PairCorr => pair_corr(&cfg.pair_corr, ctx),
        Experiment::QEstimate => q_estimate(&cfg.q_estimate, ctx),
        Experiment::FieldMoments => field_moments(&cfg.field_moments, ctx),
        Experiment::Bilap => bilap(&cfg.bilap, ctx),
        Experiment::FullTheorem => full_theorem(&cfg.full_theorem, ctx),
    }
}

fn label(coords: &[i32]) -> String {
    coords.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(":")
}

fn est(e: &EstimateWithError) -> String {
    format!("{:.6} +- {:.6}", e.value, e.stderr)
}

fn green(c: &GreenConfig, ctx: &mut RunContext) -> Result<Vec<Check>> {
    let family = StreamFamily::new(ctx.seed, 1);
    let targets: Vec<Site> = c.points.iter().map(|p| Site::new(p.clone())).collect();
    let mc = green_mc_many(&targets, c.walks, c.step_cap, false, &family)?;
    let mut checks = Vec::new();
    let mut table = CsvTable::new(&["site", "norm", "quadrature", "quad_mesh", "mc", "mc_stderr", "z_score"]);
    for (s, e) in targets.iter().zip(&mc.estimates) {
        let q = green_quadrature(s, c.mesh)?;
        let z = (e.visits.value - q.value).abs() / e.visits.stderr;
        table.push(&[
            label(s.coords()),
            num(s.norm()),
            num(q.value),
            q.mesh.to_string(),
            num(e.visits.value),
            num(e.visits.stderr),
            num(z),
        ]);
        checks.push(Check::new(
            format!("green_mc_{}", label(s.coords())),
            z <= STDERR_BAND,
            format!("MC {} vs quadrature {:.6}", est(&e.visits), q.value),
        ));
    }
    ctx.write("green.csv", &table)?;

    let mut slope_table = CsvTable::new(&["radius", "quadrature", "quad_mesh"]);
    let mut values = Vec::new();
    for &r in &c.slope_radii {
        let q = green_quadrature(&Site::on_axis(c.dim, 0, r), c.mesh)?;
        slope_table.push(&[r.to_string(), num(q.value), q.mesh.to_string()]);
        values.push(q.value);
    }
    ctx.write("green_slope.csv", &slope_table)?;
    let radii: Vec<f64> = c.slope_radii.iter().map(|&r| r as f64).collect();
    let fit = log_log_slope(&radii, &values)?;
    let target = 2.0 - c.dim as f64;
    checks.push(Check::new(
        "green_slope",
        (fit.slope - target).abs() <= GREEN_SLOPE_TOL,
        format!("slope {:.4} vs {target} +- {GREEN_SLOPE_TOL}", fit.slope),
    ));
    Ok(checks)
}

fn ust_graphs(c: &UstConfig) -> Result<Vec<(String, SmallGraph)>> {
    let mut graphs: Vec<(String, SmallGraph)> =
        c.fixtures.iter().map(|f| (f.clone(), fixtures::by_name(f).expect("validated fixture"))).collect();
    for path in &c.graph_files {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read graph {}: {e}", path.display())))?;
        graphs.push((path.display().to_string(), SmallGraph::parse(&text)?));
    }
    Ok(graphs)
}

fn ust_check(c: &UstConfig, ctx: &mut RunContext) -> Result<Vec<Check>> {
    let family = StreamFamily::new(ctx.seed, 2);
    let mut checks = Vec::new();
    let mut uni = CsvTable::new(&["graph", "trees", "samples", "statistic", "dof", "p_value"]);
    let mut pairs = CsvTable::new(&["graph", "x", "y", "exact", "estimate", "stderr"]);
    for (gi, (name, g)) in ust_graphs(c)?.iter().enumerate() {
        let fam = family.child(gi as u32);
        let trees = spanning_tree_count(g)?
            .to_u64()
            .ok_or_else(|| Error::Compute("tree count overflows".into()))?;
        if trees >= 2 {
            let u = wilson_uniformity(g, c.samples_per_tree * trees, c.tree_budget, &fam.child(0))?;
            uni.push(&[
                name.clone(),
                trees.to_string(),
                u.samples.to_string(),
                num(u.test.statistic),
                u.test.dof.to_string(),
                num(u.test.p_value),
            ]);
            checks.push(Check::new(
                format!("uniform_{name}"),
                u.test.p_value >= CHI_SQUARE_LEVEL,
                format!("chi2 {:.2} on {} dof, p = {:.4}", u.test.statistic, u.test.dof, u.test.p_value),
            ));
        }
        let mut tag = 1;
        for x in 1..g.vertices() {
            for y in x + 1..g.vertices() {
                let exact = exact_pair_correlation(g, x, y, c.tree_budget)?;
                let exact_f = *exact.numer() as f64 / *exact.denom() as f64;
                let e = estimate_same_tree(g, x - 1, y - 1, c.pair_samples, &fam.child(tag))?;
                tag += 1;
                pairs.push(&[name.clone(), x.to_string(), y.to_string(), num(exact_f), num(e.value), num(e.stderr)]);
                checks.push(Check::new(
                    format!("pair_{name}_{x}_{y}"),
                    e.agrees_with_exact(exact_f, STDERR_BAND),
                    format!("MC {} vs exact {exact}", est(&e)),
                ));
            }
        }
    }
    ctx.write("ust_uniformity.csv", &uni)?;
    ctx.write("ust_pairs.csv", &pairs)?;
    Ok(checks)
}

fn pair_corr(c: &PairCorrConfig, ctx: &mut RunContext) -> Result<Vec<Check>> {
    let family = StreamFamily::new(ctx.seed, 3);
    let geom = BoxGeometry::new(c.dim, c.half_width)?;
    let mut table = CsvTable::new(&["site", "norm", "p", "p_stderr", "rescaled", "rescaled_stderr"]);
    let mut plateau = Vec::new();
    for (i, p) in c.points.iter().enumerate() {
        let z = Site::new(p.clone());
        let e = estimate_pair_correlation(&geom, &z, c.samples, &family.child(i as u32))?;
        let r = rescaled_correlation(&z, &e)?;
        table.push(&[label(p), num(z.norm()), num(e.value), num(e.stderr), num(r.value), num(r.stderr)]);
        plateau.push(r);
    }
    ctx.write("pair_corr.csv", &table)?;
    Ok(c.compare
        .iter()
        .map(|&[a, b]| {
            Check::new(
                format!("plateau_{}_vs_{}", label(&c.points[a]), label(&c.points[b])),
                plateau[a].agrees_with(&plateau[b], STDERR_BAND),
                format!("{} vs {}", est(&plateau[a]), est(&plateau[b])),
            )
        })
        .collect())
}

fn q_estimate(c: &QConfig, ctx: &mut RunContext) -> Result<Vec<Check>> {
    let family = StreamFamily::new(ctx.seed, 4);
    let mut table = CsvTable::new(&["radius", "q", "q_stderr", "q_unerased_third", "q_unerased_stderr", "excluded"]);
    let mut qs = Vec::new();
    for (i, &r) in c.radii.iter().enumerate() {
        let q = estimate_q(&TripleWalkConfig::new(c.dim, r)?, c.samples, &family.child(i as u32))?;
        table.push(&[
            num(r),
            num(q.q.value),
            num(q.q.stderr),
            num(q.q_unerased_third.value),
            num(q.q_unerased_third.stderr),
            q.excluded.to_string(),
        ]);
        qs.push(q.q);
    }
    ctx.write("q.csv", &table)?;
    let (qa, qb) = (qs[qs.len() - 2], qs[qs.len() - 1]);
    let mut checks = vec![Check::new(
        "q_truncation_stable",
        qa.agrees_with(&qb, Q_STABILITY_BAND),
        format!("q {} then {}", est(&qa), est(&qb)),
    )];

    let z = Site::new(c.z.clone());
    let conv = green_convolution(&z, c.mesh)?;
    let predicted = predict_pair_correlation(&qb, conv.value);
    let geom = BoxGeometry::new(c.dim, c.direct_half_width)?;
    let direct = estimate_pair_correlation(&geom, &z, c.direct_samples, &family.child(1000))?;
    let gap = (predicted.value - direct.value).abs() / direct.value;
    let mut pred = CsvTable::new(&[
        "site",
        "convolution",
        "conv_mesh",
        "q",
        "predicted",
        "predicted_stderr",
        "direct",
        "direct_stderr",
        "relative_gap",
    ]);
    pred.push(&[
        label(&c.z),
        num(conv.value),
        conv.mesh.to_string(),
        num(qb.value),
        num(predicted.value),
        num(predicted.stderr),
        num(direct.value),
        num(direct.stderr),
        num(gap),
    ]);
    ctx.write("q_prediction.csv", &pred)?;
    checks.push(Check::new(
        "q_prediction",
        gap <= PREDICTION_REL_TOL,
        format!("predicted {} vs direct {}, gap {:.3}", est(&predicted), est(&direct), gap),
    ));
    Ok(checks)
}

/// `X_eps` samples on the wired box of half-width `box_factor * reach / eps`.
pub(crate) fn sample_x_eps(
    phi: &TestFunction,
    eps: f64,
    box_factor: f64,
    laws: &[SpinLaw],
    n: u64,
    family: &StreamFamily,
) -> Result<PairingSamples> {
    let reach = phi.center.iter().map(|c| c.abs()).fold(0.0, f64::max) + phi.support_half_width();
    let half_width = (box_factor * reach / eps).ceil() as i32;
    let geom = BoxGeometry::new(phi.dim(), half_width)?;
    let stencil = PairingStencil::new(&geom, phi, eps)?;
    sample_pairings(&geom, &stencil, laws, n, family)
}

fn field_moments(c: &FieldMomentsConfig, ctx: &mut RunContext) -> Result<Vec<Check>> {
    let family = StreamFamily::new(ctx.seed, 5);
    let mut checks = Vec::new();
    let mut table = CsvTable::new(&[
        "eps",
        "law",
        "n",
        "m2",
        "m2_stderr",
        "skew_ratio",
        "skew_stderr",
        "kurtosis_ratio",
        "kurtosis_stderr",
        "sixth_ratio",
        "sixth_stderr",
        "ks_p_value",
        "max_ecf_gap",
        "mean_components",
    ]);
    let mut raw = CsvTable::new(&["eps", "law", "sample", "x_point", "x_cell"]);
    for (ei, &eps) in c.epsilons.iter().enumerate() {
        let s = sample_x_eps(&c.test_function, eps, c.box_factor, &c.laws, c.samples, &family.child(ei as u32))?;
        let mut m2s = Vec::new();
        for (li, law) in c.laws.iter().enumerate() {
            let xs = match c.weights {
                Weights::Point => &s.point[li],
                Weights::Cell => &s.cell[li],
            };
            let suite = moment_suite(xs)?;
            let g = gaussianity_tests(xs, suite.m2.value)?;
            table.push(&[
                num(eps),
                law.name().into(),
                suite.n.to_string(),
                num(suite.m2.value),
                num(suite.m2.stderr),
                num(suite.skew_ratio.value),
                num(suite.skew_ratio.stderr),
                num(suite.kurtosis_ratio.value),
                num(suite.kurtosis_ratio.stderr),
                num(suite.sixth_ratio.value),
                num(suite.sixth_ratio.stderr),
                num(g.ks_p_value),
                num(g.max_ecf_gap),
                num(s.mean_components),
            ]);
            for (k, (p, q)) in s.point[li].iter().zip(&s.cell[li]).enumerate() {
                raw.push(&[num(eps), law.name().into(), k.to_string(), num(*p), num(*q)]);
            }
            let tag = format!("eps{eps}_{}", law.name());
            checks.push(Check::new(
                format!("skew_{tag}"),
                suite.skew_ratio.agrees_with_exact(0.0, STDERR_BAND),
                est(&suite.skew_ratio),
            ));
            let k = suite.kurtosis_ratio.value;
            checks.push(Check::new(
                format!("kurtosis_{tag}"),
                (KURTOSIS_RANGE.0..=KURTOSIS_RANGE.1).contains(&k),
                est(&suite.kurtosis_ratio),
            ));
            checks.push(Check::new(format!("ks_{tag}"), g.ks_p_value > KS_LEVEL, format!("p = {:.4}", g.ks_p_value)));
            m2s.push((law.name(), suite.m2));
        }
        for (name, m2) in &m2s[1..] {
            checks.push(Check::new(
                format!("m2_eps{eps}_{}_vs_{name}", m2s[0].0),
                m2s[0].1.agrees_with(m2, STDERR_BAND),
                format!("{} vs {}", est(&m2s[0].1), est(m2)),
            ));
        }
    }
    ctx.write("moments.csv", &table)?;
    ctx.write("x_eps.csv", &raw)?;
    Ok(checks)
}

fn bilap(c: &BilapConfig, ctx: &mut RunContext) -> Result<Vec<Check>> {
    let family = StreamFamily::new(ctx.seed, 6);
    let geom = TorusGeometry::spectral(c.dim, c.side)?;
    let tv = TorusTestVector::new(&geom, &c.test_function, c.eps)?;
    let exact_var = exact_pairing_variance(&c.test_function, c.side, c.eps)?;
    let max_lag = c.fit_window[1];
    let mut sampler = BilapSampler::new(&geom)?;
    let fields = c.samples.max(c.covariance_fields).max(c.laplacian_fields).max(c.dump_fields);
    let mut pairing = MomentAccumulator::new();
    let mut lap = MomentAccumulator::new();
    let mut cov: Vec<MomentAccumulator> = vec![MomentAccumulator::new(); max_lag + 1];
    for pair in 0..fields.div_ceil(2) {
        let (a, b) = sampler.sample_pair(&mut family.rng(pair));
        for (k, f) in [a, b].into_iter().enumerate() {
            let idx = 2 * pair + k as u64;
            if idx < c.samples {
                pairing.push(f.pair(&tv)?.powi(2));
            }
            if idx < c.laplacian_fields {
                f.laplacian().iter().for_each(|v| lap.push(v * v));
            }
            if idx < c.covariance_fields {
                for (acc, v) in cov.iter_mut().zip(f.axis_covariance(max_lag)) {
                    acc.push(v);
                }
            }
            if idx < c.dump_fields {
                let file = std::fs::File::create(ctx.out_dir().join(format!("field_{idx}.bin")))?;
                f.write_binary(std::io::BufWriter::new(file), ctx.seed)?;
            }
        }
    }
    let mut checks = Vec::new();
    let lap_target = 1.0 - 1.0 / geom.site_count() as f64;
    let lap_est = lap.mean_estimate();
    checks.push(Check::new(
        "laplacian_white_noise",
        lap_est.agrees_with_exact(lap_target, STDERR_BAND),
        format!("per-site variance {} vs {lap_target:.8}", est(&lap_est)),
    ));
    let var_est = pairing.mean_estimate();
    checks.push(Check::new(
        "pairing_variance",
        var_est.agrees_with_exact(exact_var, STDERR_BAND),
        format!("sample {} vs spectral {exact_var:.6}", est(&var_est)),
    ));

    let mut cov_table = CsvTable::new(&["distance", "cov", "stderr", "exact"]);
    let mut window = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (r, acc) in cov.iter().enumerate() {
        let e = acc.mean_estimate();
        let mut lag = vec![0i64; c.dim];
        lag[0] = r as i64;
        let exact = exact_covariance(&geom, &lag)?;
        cov_table.push(&[r.to_string(), num(e.value), num(e.stderr), num(exact)]);
        if r >= c.fit_window[0] {
            window.0.push(r as f64);
            window.1.push(e.value);
            window.2.push(e.stderr);
            window.3.push(exact);
        }
    }
    ctx.write("bilap_covariance.csv", &cov_table)?;
    let fit = weighted_log_log_slope(&window.0, &window.1, &window.2)?;
    let exact_fit = log_log_slope(&window.0, &window.3)?;
    let tol = if c.side >= 64 { 0.15 } else { 0.2 };
    let target = 4.0 - c.dim as f64;
    checks.push(Check::new(
        "covariance_power",
        (fit.slope - target).abs() <= tol,
        format!(
            "slope {:.4} +- {:.4} over lags {}..={} vs {target} +- {tol}; exact torus covariance gives {:.4}",
            fit.slope, fit.slope_stderr, c.fit_window[0], c.fit_window[1], exact_fit.slope
        ),
    ));
    let mut summary = CsvTable::new(&["quantity", "estimate", "stderr", "target"]);
    summary.push(&["laplacian_variance".into(), num(lap_est.value), num(lap_est.stderr), num(lap_target)]);
    summary.push(&["pairing_variance".into(), num(var_est.value), num(var_est.stderr), num(exact_var)]);
    summary.push(&["covariance_slope".into(), num(fit.slope), num(fit.slope_stderr), num(target)]);
    summary.push(&["exact_covariance_slope".into(), num(exact_fit.slope), num(0.0), num(target)]);
    ctx.write("bilap_summary.csv", &summary)?;
    Ok(checks)
}

fn full_theorem(c: &FullTheoremConfig, ctx: &mut RunContext) -> Result<Vec<Check>> {
    let family = StreamFamily::new(ctx.seed, 7);
    let dim = c.test_function.dim();
    let w = crate::bilap::whole_space_variance(&c.test_function, c.quad_mesh)?;
    let z = Site::new(c.plateau_point.clone());
    let geom = BoxGeometry::new(dim, c.plateau_half_width)?;
    let p = estimate_pair_correlation(&geom, &z, c.plateau_samples, &family.child(1000))?;
    let plateau = rescaled_correlation(&z, &p)?;
    let mut table = CsvTable::new(&[
        "eps",
        "n",
        "variance",
        "variance_stderr",
        "whole_space",
        "ratio",
        "ratio_stderr",
        "ratio_over_membrane_constant",
        "ks_p_value",
    ]);
    let mut last = None;
    for (ei, &eps) in c.epsilons.iter().enumerate() {
        let s = sample_x_eps(&c.test_function, eps, c.box_factor, &[SpinLaw::Rademacher], c.samples, &family.child(ei as u32))?;
        let suite = moment_suite(&s.point[0])?;
        let g = gaussianity_tests(&s.point[0], suite.m2.value)?;
        let ratio = suite.m2.scaled(1.0 / w.value);
        table.push(&[
            num(eps),
            suite.n.to_string(),
            num(suite.m2.value),
            num(suite.m2.stderr),
            num(w.value),
            num(ratio.value),
            num(ratio.stderr),
            num(ratio.value / membrane_kernel_constant(dim)),
            num(g.ks_p_value),
        ]);
        last = Some((eps, ratio, g.ks_p_value));
    }
    ctx.write("theorem.csv", &table)?;
    let mut pt = CsvTable::new(&["site", "half_width", "p", "p_stderr", "plateau", "plateau_stderr"]);
    pt.push(&[
        label(&c.plateau_point),
        c.plateau_half_width.to_string(),
        num(p.value),
        num(p.stderr),
        num(plateau.value),
        num(plateau.stderr),
    ]);
    ctx.write("plateau.csv", &pt)?;
    let (eps, ratio, ks) = last.expect("validated epsilons");
    let gap = (ratio.value - plateau.value).abs() / plateau.value;
    Ok(vec![
        Check::new(
            "variance_matches_plateau",
            gap <= THEOREM_REL_TOL,
            format!("Var/W at eps {eps}: {} vs plateau {}, gap {gap:.3}", est(&ratio), est(&plateau)),
        ),
        Check::new("gaussian_limit", ks > KS_LEVEL, format!("KS p = {ks:.4} at eps {eps}")),
    ])
}
