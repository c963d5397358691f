//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release --test acceptance`; extra arguments such as
//! `C3 C9` restrict the run to those criteria. Exits non-zero if any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use usf_lab::bilap::{exact_covariance, exact_pairing_variance, BilapSampler, TorusTestVector};
use usf_lab::estimators::{
    estimate_pair_correlation, estimate_same_tree, gaussianity_tests, log_log_slope, moment_suite,
    multi_point_same_tree, rescaled_correlation, weighted_log_log_slope, EstimateWithError, MomentAccumulator,
    MomentSuite,
};
use usf_lab::green::{green_convolution, green_quadrature};
use usf_lab::harness::{self, csv_body, Experiment, ExperimentConfig};
use usf_lab::intersection::{estimate_q, predict_pair_correlation, TripleWalkConfig};
use usf_lab::lattice::{BoxGeometry, Site, TorusGeometry};
use usf_lab::oracle::{exact_pair_correlation, fixtures, spanning_tree_count, wilson_uniformity, DEFAULT_TREE_BUDGET};
use usf_lab::rng::StreamFamily;
use usf_lab::spin::{sample_pairings, PairingSamples, PairingStencil, SpinLaw, TestFunction};
use usf_lab::walk::green_mc_many;

type Outcome = Result<(bool, Vec<String>), String>;

struct Criterion {
    id: &'static str,
    title: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

const MIN: u64 = 60;

fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: "C1", title: "oracle uniformity", budget: Duration::from_secs(MIN), run: c1 },
        Criterion { id: "C2", title: "exact pair correlation", budget: Duration::from_secs(MIN), run: c2 },
        Criterion { id: "C3", title: "Green's function", budget: Duration::from_secs(10 * MIN), run: c3 },
        Criterion { id: "C4", title: "plateau", budget: Duration::from_secs(120 * MIN), run: c4 },
        Criterion { id: "C5", title: "q consistency", budget: Duration::from_secs(120 * MIN), run: c5 },
        Criterion { id: "C6", title: "finite-size control", budget: Duration::from_secs(60 * MIN), run: c6 },
        Criterion { id: "C7", title: "Wick suite", budget: Duration::from_secs(240 * MIN), run: c7 },
        Criterion { id: "C8", title: "higher-moment decay", budget: Duration::from_secs(120 * MIN), run: c8 },
        Criterion { id: "C9", title: "reference field", budget: Duration::from_secs(30 * MIN), run: c9 },
        Criterion { id: "C10", title: "universality", budget: Duration::from_secs(240 * MIN), run: c10 },
        Criterion { id: "C11", title: "reproducibility", budget: Duration::from_secs(60 * MIN), run: c11 },
    ]
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in criteria() {
        if !filter.is_empty() && !filter.iter().any(|f| f == c.id) {
            continue;
        }
        let t = Instant::now();
        let outcome = (c.run)();
        let elapsed = t.elapsed();
        let in_budget = elapsed <= c.budget;
        let (ok, lines) = match outcome {
            Ok((ok, lines)) => (ok, lines),
            Err(e) => (false, vec![format!("error: {e}")]),
        };
        let pass = ok && in_budget;
        failed += !pass as u32;
        println!(
            "{} {} {}: runtime {:.1}s (budget {}s){}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_budget { "" } else { ", over budget" }
        );
        for l in lines {
            println!("    {l}");
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn show(e: &EstimateWithError) -> String {
    format!("{:.6} +- {:.6}", e.value, e.stderr)
}

// C1: chi-square at 0.01 on at least four fixtures, 30 samples per tree.
fn c1() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for (i, name) in ["triangle", "four_cycle", "k4", "wired_2x3", "wired_3x3"].iter().enumerate() {
        let g = fixtures::by_name(name).unwrap();
        let trees = spanning_tree_count(&g).map_err(err)?.to_string().parse::<u64>().map_err(err)?;
        let u = wilson_uniformity(&g, 30 * trees, 200_000, &StreamFamily::new(101, i as u32))
            .map_err(err)?;
        let pass = u.test.p_value >= 0.01;
        ok &= pass;
        lines.push(format!(
            "{name}: {trees} trees, n = {}, chi2 = {:.2} on {} dof, p = {:.4} {}",
            u.samples,
            u.test.statistic,
            u.test.dof,
            u.test.p_value,
            if pass { "ok" } else { "REJECTED" }
        ));
    }
    Ok((ok, lines))
}

// C2: every internal pair of the fixtures within 3 stderr of the exact value, n = 10^5.
fn c2() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for (i, name) in ["triangle", "four_cycle", "k4", "separated_pair", "wired_2x3"].iter().enumerate() {
        let g = fixtures::by_name(name).unwrap();
        let fam = StreamFamily::new(102, i as u32);
        let mut worst = 0.0f64;
        let mut tag = 0;
        for x in 1..g.vertices() {
            for y in x + 1..g.vertices() {
                let exact = exact_pair_correlation(&g, x, y, DEFAULT_TREE_BUDGET).map_err(err)?;
                let ex = *exact.numer() as f64 / *exact.denom() as f64;
                let e = estimate_same_tree(&g, x - 1, y - 1, 100_000, &fam.child(tag)).map_err(err)?;
                tag += 1;
                let pass = e.agrees_with_exact(ex, 3.0);
                ok &= pass;
                if e.stderr > 0.0 {
                    worst = worst.max((e.value - ex).abs() / e.stderr);
                }
                if *name == "triangle" || !pass {
                    lines.push(format!("{name} ({x},{y}): {} vs exact {exact}", show(&e)));
                }
            }
        }
        lines.push(format!("{name}: {tag} pairs, largest |z| = {worst:.2}"));
    }
    Ok((ok, lines))
}

// C3: MC vs quadrature at (1,0,0,0,0), (3,..), (5,..); slope -3 +- 0.1 over [5, 40].
fn c3() -> Outcome {
    let targets: Vec<Site> = [1, 3, 5].iter().map(|&r| Site::on_axis(5, 0, r)).collect();
    let mc = green_mc_many(&targets, 200_000, 100_000, false, &StreamFamily::new(103, 0)).map_err(err)?;
    let mut ok = true;
    let mut lines = Vec::new();
    for (t, e) in targets.iter().zip(&mc.estimates) {
        let q = green_quadrature(t, 64).map_err(err)?;
        let pass = e.visits.agrees_with_exact(q.value, 3.0);
        ok &= pass;
        lines.push(format!("G(0,{t}): MC {} vs quadrature {:.6} (mesh {})", show(&e.visits), q.value, q.mesh));
    }
    let radii = [5.0, 10.0, 20.0, 40.0];
    let values: Vec<f64> = radii
        .iter()
        .map(|&r| green_quadrature(&Site::on_axis(5, 0, r as i32), 64).map(|q| q.value))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let fit = log_log_slope(&radii, &values).map_err(err)?;
    let pass = (fit.slope + 3.0).abs() <= 0.1;
    ok &= pass;
    lines.push(format!("slope over |x| in [5, 40]: {:.4} (target -3 +- 0.1)", fit.slope));
    Ok((ok, lines))
}

fn plateau(l: i32, z: &Site, n: u64, seed: u64) -> Result<EstimateWithError, String> {
    let g = BoxGeometry::new(5, l).map_err(err)?;
    let p = estimate_pair_correlation(&g, z, n, &StreamFamily::new(seed, 0)).map_err(err)?;
    rescaled_correlation(z, &p).map_err(err)
}

const PLATEAU_SAMPLES: u64 = 100_000;

// C4: p(0,z)|z| at L = 40: |z| = 8 vs 16 and axis vs diagonal, within 3 combined stderr.
fn c4() -> Outcome {
    let axis8 = plateau(40, &Site::on_axis(5, 0, 8), PLATEAU_SAMPLES, 1041)?;
    let axis16 = plateau(40, &Site::on_axis(5, 0, 16), PLATEAU_SAMPLES, 1042)?;
    let diag8 = plateau(40, &Site::new(vec![4, 4, 4, 4, 0]), PLATEAU_SAMPLES, 1043)?;
    let diag16 = plateau(40, &Site::new(vec![8, 8, 8, 8, 0]), PLATEAU_SAMPLES, 1044)?;
    let mut ok = true;
    let mut lines = Vec::new();
    for (what, a, b) in [
        ("axis |z| = 8 vs 16", axis8, axis16),
        ("diagonal |z| = 8 vs 16", diag8, diag16),
        ("|z| = 8 axis vs diagonal", axis8, diag8),
        ("|z| = 16 axis vs diagonal", axis16, diag16),
    ] {
        let pass = a.agrees_with(&b, 3.0);
        ok &= pass;
        lines.push(format!("{what}: {} vs {} ({:.2} combined stderr)", show(&a), show(&b), a.z_distance(&b)));
    }
    Ok((ok, lines))
}

// C5: q(R) vs q(2R) within 2 stderr at n = 10^6; q * conv(z) vs direct p(0,z) within 15% at |z| = 12.
fn c5() -> Outcome {
    let fam = StreamFamily::new(105, 0);
    let q50 = estimate_q(&TripleWalkConfig::new(5, 50.0).map_err(err)?, 1_000_000, &fam.child(0)).map_err(err)?;
    let q100 = estimate_q(&TripleWalkConfig::new(5, 100.0).map_err(err)?, 1_000_000, &fam.child(1)).map_err(err)?;
    let stable = q50.q.agrees_with(&q100.q, 2.0);
    let z = Site::on_axis(5, 0, 12);
    let conv = green_convolution(&z, 64).map_err(err)?;
    let predicted = predict_pair_correlation(&q100.q, conv.value);
    let direct = estimate_pair_correlation(&BoxGeometry::new(5, 40).map_err(err)?, &z, PLATEAU_SAMPLES, &fam.child(2))
        .map_err(err)?;
    let gap = (predicted.value - direct.value).abs() / direct.value;
    let lines = vec![
        format!("q(50) = {}, q(100) = {} ({:.2} combined stderr)", show(&q50.q), show(&q100.q), q50.q.z_distance(&q100.q)),
        format!(
            "third walk unerased: q(50) = {}, q(100) = {}",
            show(&q50.q_unerased_third),
            show(&q100.q_unerased_third)
        ),
        format!("sum_w G(0,w)G(w,z) at z = {z}: {:.6} (mesh {})", conv.value, conv.mesh),
        format!("predicted {} vs direct {} at L = 40: relative gap {:.3} (limit 0.15)", show(&predicted), show(&direct), gap),
    ];
    Ok((stable && gap <= 0.15, lines))
}

// C6: plateau at |z| = 8, L = 40 vs L = 20, relative difference below 10%.
fn c6() -> Outcome {
    let z = Site::on_axis(5, 0, 8);
    let big = plateau(40, &z, PLATEAU_SAMPLES, 1041)?;
    let small = plateau(20, &z, PLATEAU_SAMPLES, 1061)?;
    let rel = (big.value - small.value).abs() / big.value;
    let rel_se = (big.stderr.powi(2) + small.stderr.powi(2)).sqrt() / big.value;
    Ok((
        rel < 0.10,
        vec![format!("L = 40: {}, L = 20: {}; relative difference {rel:.4} +- {rel_se:.4}", show(&big), show(&small))],
    ))
}

const FIELD_SAMPLES: u64 = 20_000;

fn field_samples() -> &'static Vec<(f64, PairingSamples)> {
    static CELL: std::sync::OnceLock<Vec<(f64, PairingSamples)>> = std::sync::OnceLock::new();
    CELL.get_or_init(|| {
        let phi = TestFunction::bump(5, 1.0);
        [0.25, 0.125]
            .iter()
            .enumerate()
            .map(|(i, &eps)| {
                let geom = BoxGeometry::new(5, (2.0 / eps) as i32).unwrap();
                let stencil = PairingStencil::new(&geom, &phi, eps).unwrap();
                let laws = [SpinLaw::Rademacher, SpinLaw::UniformScaled];
                let s = sample_pairings(&geom, &stencil, &laws, FIELD_SAMPLES, &StreamFamily::new(107, i as u32)).unwrap();
                (eps, s)
            })
            .collect()
    })
}

fn wick_checks(law: usize, lines: &mut Vec<String>) -> Result<(bool, Vec<MomentSuite>), String> {
    let mut ok = true;
    let mut suites = Vec::new();
    for (eps, s) in field_samples() {
        let xs = &s.point[law];
        let m = moment_suite(xs).map_err(err)?;
        let g = gaussianity_tests(xs, m.m2.value).map_err(err)?;
        let skew = m.skew_ratio.agrees_with_exact(0.0, 3.0);
        let kurt = (0.85..=1.15).contains(&m.kurtosis_ratio.value);
        let ks = g.ks_p_value > 0.01;
        ok &= skew && kurt && ks;
        lines.push(format!(
            "{} eps = {eps}: n = {}, m2 = {}, m3/m2^1.5 = {}{}, m4/(3 m2^2) = {}{}, KS p = {:.4}{}, components met {:.1}",
            s.laws[law].name(),
            m.n,
            show(&m.m2),
            show(&m.skew_ratio),
            if skew { "" } else { " FAIL" },
            show(&m.kurtosis_ratio),
            if kurt { "" } else { " FAIL" },
            g.ks_p_value,
            if ks { "" } else { " FAIL" },
            s.mean_components
        ));
        suites.push(m);
    }
    Ok((ok, suites))
}

// C7: Wick ratios and KS for Rademacher spins at eps = 1/4, 1/8 with n = 2 * 10^4.
fn c7() -> Outcome {
    let mut lines = Vec::new();
    let (ok, _) = wick_checks(0, &mut lines)?;
    Ok((ok, lines))
}

// C8: 4-point same-tree probability at separations n = 4, 8, 16: log-log slope in [-3.5, -2.5].
fn c8() -> Outcome {
    let g = BoxGeometry::new(5, 40).map_err(err)?;
    let mut seps = Vec::new();
    let mut vals = Vec::new();
    let mut ses = Vec::new();
    let mut lines = Vec::new();
    for (i, (n, samples)) in [(4, 1_000_000u64), (8, 2_000_000), (16, 8_000_000)].into_iter().enumerate() {
        let pts: Vec<Site> = (0..4).map(|j| Site::on_axis(5, j, n)).collect();
        let m = multi_point_same_tree(&g, &pts, samples, &StreamFamily::new(108, i as u32)).map_err(err)?;
        lines.push(format!("n = {n}: P(all four) = {} over {samples} forests, P(first pair) = {}", show(&m.all), show(&m.first_pair)));
        if m.all.value == 0.0 {
            return Ok((false, lines));
        }
        seps.push(n as f64);
        vals.push(m.all.value);
        ses.push(m.all.stderr);
    }
    let fit = weighted_log_log_slope(&seps, &vals, &ses).map_err(err)?;
    lines.push(format!("slope {:.3} +- {:.3} (target -3, accepted [-3.5, -2.5])", fit.slope, fit.slope_stderr));
    Ok(((-3.5..=-2.5).contains(&fit.slope), lines))
}

// C9: membrane sampler at N = 32, d = 5 (N = 64 does not fit in memory), tolerance +- 0.2.
fn c9() -> Outcome {
    let (side, dim) = (32usize, 5usize);
    let geom = TorusGeometry::spectral(dim, side).map_err(err)?;
    let phi = TestFunction::truncated_gaussian(dim, 1.0);
    let eps = 0.125;
    let tv = TorusTestVector::new(&geom, &phi, eps).map_err(err)?;
    let exact_var = exact_pairing_variance(&phi, side, eps).map_err(err)?;
    let (fields, lap_fields, cov_fields) = (1000u64, 10u64, 40u64);
    let window = [2usize, 4];
    let mut sampler = BilapSampler::new(&geom).map_err(err)?;
    let fam = StreamFamily::new(109, 0);
    let mut pairing = MomentAccumulator::new();
    let mut lap = MomentAccumulator::new();
    let mut cov = vec![MomentAccumulator::new(); window[1] + 1];
    for pair in 0..fields / 2 {
        let (a, b) = sampler.sample_pair(&mut fam.rng(pair));
        for (k, f) in [a, b].into_iter().enumerate() {
            let idx = 2 * pair + k as u64;
            pairing.push(f.pair(&tv).map_err(err)?.powi(2));
            if idx < lap_fields {
                f.laplacian().iter().for_each(|v| lap.push(v * v));
            }
            if idx < cov_fields {
                for (acc, v) in cov.iter_mut().zip(f.axis_covariance(window[1])) {
                    acc.push(v);
                }
            }
        }
    }
    let mut lines = Vec::new();
    let lap_target = 1.0 - 1.0 / geom.site_count() as f64;
    let lap_est = lap.mean_estimate();
    let lap_ok = lap_est.agrees_with_exact(lap_target, 3.0);
    lines.push(format!("per-site variance of the Laplacian: {} vs {lap_target:.8}", show(&lap_est)));
    let var_est = pairing.mean_estimate();
    let var_ok = var_est.agrees_with_exact(exact_var, 3.0);
    lines.push(format!("Var (h, phi_N) over {fields} fields: {} vs spectral {exact_var:.6}", show(&var_est)));
    let mut r = Vec::new();
    let mut c = Vec::new();
    let mut se = Vec::new();
    let mut exact = Vec::new();
    for lag in window[0]..=window[1] {
        let e = cov[lag].mean_estimate();
        let mut x = vec![0i64; dim];
        x[0] = lag as i64;
        let ex = exact_covariance(&geom, &x).map_err(err)?;
        lines.push(format!("Cov at lag {lag}: {} (exact torus value {ex:.6})", show(&e)));
        r.push(lag as f64);
        c.push(e.value);
        se.push(e.stderr);
        exact.push(ex);
    }
    let fit = weighted_log_log_slope(&r, &c, &se).map_err(err)?;
    let exact_fit = log_log_slope(&r, &exact).map_err(err)?;
    let slope_ok = (fit.slope + 1.0).abs() <= 0.2;
    lines.push(format!(
        "covariance slope over lags {}..={}: {:.3} +- {:.3} (target -1 +- 0.2); exact torus covariance gives {:.3}",
        window[0], window[1], fit.slope, fit.slope_stderr, exact_fit.slope
    ));
    Ok((lap_ok && var_ok && slope_ok, lines))
}

// C10: C7's Wick checks under uniform-scaled spins; second moments agree across laws.
fn c10() -> Outcome {
    let mut lines = Vec::new();
    let (ok_u, uni) = wick_checks(1, &mut lines)?;
    let mut sink = Vec::new();
    let (_, rad) = wick_checks(0, &mut sink)?;
    let mut ok = ok_u;
    for ((eps, _), (a, b)) in field_samples().iter().zip(rad.iter().zip(&uni)) {
        let pass = a.m2.agrees_with(&b.m2, 3.0);
        ok &= pass;
        lines.push(format!("eps = {eps}: m2 rademacher {} vs uniform-scaled {} ({:.2} combined stderr)", show(&a.m2), show(&b.m2), a.m2.z_distance(&b.m2)));
    }
    Ok((ok, lines))
}

fn tiny_config(exp: Experiment, workers: usize, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig { experiment: Some(exp), seed: 11, workers, out: out.to_path_buf(), ..Default::default() };
    cfg.green.walks = 600;
    cfg.green.step_cap = 20_000;
    cfg.green.slope_radii = vec![5, 10];
    cfg.ust_check.fixtures = vec!["triangle".into(), "k4".into()];
    cfg.ust_check.pair_samples = 3000;
    cfg.pair_corr.half_width = 6;
    cfg.pair_corr.points = vec![vec![2, 0, 0, 0, 0], vec![0, 3, 0, 0, 0]];
    cfg.pair_corr.compare = vec![[0, 1]];
    cfg.pair_corr.samples = 3000;
    cfg.q_estimate.radii = vec![10.0, 12.0];
    cfg.q_estimate.samples = 3000;
    cfg.q_estimate.z = vec![3, 0, 0, 0, 0];
    cfg.q_estimate.direct_half_width = 8;
    cfg.q_estimate.direct_samples = 3000;
    cfg.field_moments.epsilons = vec![0.5];
    cfg.field_moments.samples = 10_000;
    cfg.bilap.side = 8;
    cfg.bilap.samples = 40;
    cfg.bilap.covariance_fields = 4;
    cfg.bilap.laplacian_fields = 2;
    cfg.bilap.eps = 0.5;
    cfg.bilap.fit_window = [1, 3];
    cfg.full_theorem.epsilons = vec![0.5];
    cfg.full_theorem.samples = 10_000;
    cfg.full_theorem.plateau_point = vec![2, 0, 0, 0, 0];
    cfg.full_theorem.plateau_half_width = 6;
    cfg.full_theorem.plateau_samples = 3000;
    cfg
}

// C11: every experiment gives byte-identical CSV bodies with 1 and 3 workers.
fn c11() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let mut ok = true;
    let mut lines = Vec::new();
    for exp in Experiment::ALL {
        let mut bodies = Vec::new();
        for workers in [1, 3] {
            let out = dir.path().join(format!("{}_{workers}", exp.name()));
            let report = harness::run(&tiny_config(exp, workers, &out)).map_err(err)?;
            let mut files: Vec<(String, String)> = report
                .files
                .iter()
                .map(|f| {
                    let text = std::fs::read_to_string(f).map_err(err)?;
                    Ok((f.file_name().unwrap().to_string_lossy().into_owned(), csv_body(&text)))
                })
                .collect::<Result<_, String>>()?;
            files.sort();
            bodies.push(files);
        }
        let same = bodies[0] == bodies[1];
        ok &= same;
        lines.push(format!(
            "{}: {} CSV files {}",
            exp.name(),
            bodies[0].len(),
            if same { "identical" } else { "DIFFER" }
        ));
    }
    Ok((ok, lines))
}
