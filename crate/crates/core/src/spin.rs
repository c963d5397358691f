//! Spins on forest components, the rescaled field and its pairing with test functions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::forest::{ComponentLabels, WilsonSampler};
use crate::lattice::{BoxGeometry, Site};
use crate::parallel;
use crate::rng::StreamFamily;

/// Law of the independent per-component spins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpinLaw {
    /// `+1` or `-1` with probability 1/2 each.
    Rademacher,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    UniformScaled,
    /// A finite law given by atoms and their probabilities.
    CustomDiscrete { values: Vec<f64>, probs: Vec<f64> },
}

impl SpinLaw {
    /// Checks mean 0, variance 1 and finite moments up to order 8.
    pub fn validate(&self) -> Result<()> {
        let SpinLaw::CustomDiscrete { values, probs } = self else {
            return Ok(());
        };
        if values.is_empty() || values.len() != probs.len() {
            return config("custom spin law needs matching, non-empty values and probs");
        }
        if probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return config("custom spin law probabilities must be non-negative and sum to 1");
        }
        let moment = |k: i32| values.iter().zip(probs).map(|(v, p)| p * v.powi(k)).sum::<f64>();
        if moment(1).abs() > 1e-9 || (moment(2) - 1.0).abs() > 1e-9 {
            return config(format!("custom spin law has mean {} and variance {}", moment(1), moment(2)));
        }
        if (3..=8).any(|k| !moment(k).is_finite()) {
            return config("custom spin law has an infinite moment");
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SpinLaw::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            SpinLaw::UniformScaled => 3f64.sqrt() * (2.0 * rng.gen::<f64>() - 1.0),
            SpinLaw::CustomDiscrete { values, probs } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated law is non-empty")
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SpinLaw::Rademacher => "rademacher",
            SpinLaw::UniformScaled => "uniform-scaled",
            SpinLaw::CustomDiscrete { .. } => "custom-discrete",
        }
    }
}

/// The spin field `h_1` on a set of box sites.
#[derive(Clone, Debug)]
pub struct FieldSample {
    geom: BoxGeometry,
    labels: ComponentLabels,
    spins: Vec<f64>,
}

/// One independent spin per component; `h_1` is the spin of the site's component.
pub fn assign_spins<R: Rng + ?Sized>(
    geom: &BoxGeometry,
    labels: &ComponentLabels,
    law: &SpinLaw,
    rng: &mut R,
) -> Result<FieldSample> {
    law.validate()?;
    let spins = (0..labels.count()).map(|_| law.sample(rng)).collect();
    Ok(FieldSample { geom: geom.clone(), labels: labels.clone(), spins })
}

impl FieldSample {
    pub fn geometry(&self) -> &BoxGeometry {
        &self.geom
    }

    pub fn labels(&self) -> &ComponentLabels {
        &self.labels
    }

    pub fn spins(&self) -> &[f64] {
        &self.spins
    }

    /// `h_1` at a site index; `None` when the site was not sampled.
    pub fn h1_index(&self, index: u64) -> Option<f64> {
        self.labels.label_of(index).map(|l| self.spins[l as usize])
    }

    pub fn h1(&self, site: &Site) -> Result<f64> {
        let i = self.geom.encode(site)?;
        self.h1_index(i).ok_or_else(|| Error::Domain(format!("site {site} carries no spin")))
    }

    /// `(site_index, h1)` rows.
    pub fn values(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.labels.sites().iter().zip(self.labels.labels()).map(|(&s, &l)| (s, self.spins[l as usize]))
    }

    /// Same forest, all spins negated.
    pub fn flipped(&self) -> FieldSample {
        FieldSample { spins: self.spins.iter().map(|s| -s).collect(), ..self.clone() }
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "site_index,h1_value")?;
        for (s, v) in self.values() {
            writeln!(out, "{s},{v}")?;
        }
        Ok(())
    }
}

/// `1/eps` as an integer, or a domain error.
pub fn inverse_scale(eps: f64) -> Result<i64> {
    let m = (1.0 / eps).round();
    if !(eps > 0.0) || m < 1.0 || (m * eps - 1.0).abs() > 1e-9 {
        return domain(format!("epsilon {eps} is not the reciprocal of a positive integer"));
    }
    Ok(m as i64)
}

fn scaled_site(eps: f64, x: &[f64], exact: bool) -> Result<Site> {
    let m = inverse_scale(eps)? as f64;
    let mut coords = Vec::with_capacity(x.len());
    for &c in x {
        let y = c * m;
        let r = y.round();
        if exact && (y - r).abs() > 1e-9 {
            return domain(format!("point {x:?} is not on the lattice of spacing {eps}"));
        }
        coords.push(r as i32);
    }
    Ok(Site::new(coords))
}

/// `h_eps(x) = eps^{(4-d)/2} h_1(x / eps)` for `x` on `eps Z^d`.
pub fn h_eps(sample: &FieldSample, eps: f64, x: &[f64]) -> Result<f64> {
    let site = scaled_site(eps, x, true)?;
    Ok(eps.powf((4.0 - x.len() as f64) / 2.0) * sample.h1(&site)?)
}

/// The piecewise-constant extension: `h_eps` of the lattice point whose `eps`-cube contains `x`.
pub fn h_eps_extended(sample: &FieldSample, eps: f64, x: &[f64]) -> Result<f64> {
    let site = scaled_site(eps, x, false)?;
    Ok(eps.powf((4.0 - x.len() as f64) / 2.0) * sample.h1(&site)?)
}

/// Kind of test function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunctionKind {
    /// `exp(-1 / (1 - |u|^2))` for `|u| < 1`, with `u = (x - center) / radius`.
    Bump,
    /// `exp(-|x - center|^2 / (2 sigma^2))` with `sigma = radius / 3`, cut off outside the cube of half-side `radius`.
    TruncatedGaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub kind: TestFunctionKind,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl TestFunction {
    pub fn bump(dim: usize, radius: f64) -> TestFunction {
        TestFunction { kind: TestFunctionKind::Bump, center: vec![0.0; dim], radius }
    }

    pub fn truncated_gaussian(dim: usize, radius: f64) -> TestFunction {
        TestFunction { kind: TestFunctionKind::TruncatedGaussian, center: vec![0.0; dim], radius }
    }

    pub fn with_center(mut self, center: Vec<f64>) -> TestFunction {
        self.center = center;
        self
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return config(format!("test function radius must be positive, got {}", self.radius));
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return config("test function center must be finite");
        }
        Ok(())
    }

    /// `phi_lambda(x) = phi(x / lambda)` for a function centred at the origin.
    pub fn dilated(&self, lambda: f64) -> TestFunction {
        TestFunction {
            kind: self.kind,
            center: self.center.iter().map(|c| c * lambda).collect(),
            radius: self.radius * lambda,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.center.len());
        match self.kind {
            TestFunctionKind::Bump => {
                let u2 = x.iter().zip(&self.center).map(|(a, c)| (a - c).powi(2)).sum::<f64>()
                    / (self.radius * self.radius);
                if u2 < 1.0 {
                    (-1.0 / (1.0 - u2)).exp()
                } else {
                    0.0
                }
            }
            TestFunctionKind::TruncatedGaussian => {
                if x.iter().zip(&self.center).any(|(a, c)| (a - c).abs() >= self.radius) {
                    return 0.0;
                }
                let sigma = self.radius / 3.0;
                (-x.iter().zip(&self.center).map(|(a, c)| (a - c).powi(2)).sum::<f64>() / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    /// Largest `|x_j - center_j|` over the support.
    pub fn support_half_width(&self) -> f64 {
        self.radius
    }
}

/// The result of pairing a field sample with a test function.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingValue {
    pub x_eps: f64,
    pub epsilon: f64,
    pub phi: TestFunction,
}

/// Weights of the lattice sum `X_eps = eps^{(4+d)/2} sum_x h_1(x) phi(eps x)`.
///
/// Alongside the pointwise weights `phi(eps x)` the stencil carries cell
/// averages of `phi` over `eps x + [-eps/2, eps/2]^d` (a `3^d` midpoint rule),
/// the weights of the piecewise-constant extension of `h_eps`. Sites are those
/// whose cell meets the support, in increasing index order.
#[derive(Clone, Debug)]
pub struct PairingStencil {
    pub epsilon: f64,
    pub phi: TestFunction,
    pub scale: f64,
    sites: Vec<u64>,
    point_weights: Vec<f64>,
    cell_weights: Vec<f64>,
}

impl PairingStencil {
    pub fn new(geom: &BoxGeometry, phi: &TestFunction, eps: f64) -> Result<PairingStencil> {
        phi.validate()?;
        let m = inverse_scale(eps)?;
        let d = geom.dim();
        if phi.dim() != d {
            return domain("test function and box differ in dimension");
        }
        let reach = eps * geom.half_width() as f64;
        for &c in &phi.center {
            if c.abs() + phi.support_half_width() > reach {
                return Err(Error::Support(format!(
                    "support of phi (center {:?}, radius {}) leaves the box image of half-width {reach}",
                    phi.center, phi.radius
                )));
            }
        }
        let lo: Vec<i32> = phi.center.iter().map(|c| ((c - phi.radius) * m as f64).floor() as i32 - 1).collect();
        let hi: Vec<i32> = phi.center.iter().map(|c| ((c + phi.radius) * m as f64).ceil() as i32 + 1).collect();
        let sub = [-1.0 / 3.0, 0.0, 1.0 / 3.0];
        let n_sub = 3usize.pow(d as u32);
        let mut entries = Vec::new();
        let mut x = lo.clone();
        let mut p = vec![0.0; d];
        loop {
            if x.iter().all(|c| c.abs() <= geom.half_width()) {
                for j in 0..d {
                    p[j] = x[j] as f64 * eps;
                }
                let point = phi.eval(&p);
                let mut cell = 0.0;
                for s in 0..n_sub {
                    let mut r = s;
                    for j in 0..d {
                        p[j] = (x[j] as f64 + sub[r % 3]) * eps;
                        r /= 3;
                    }
                    cell += phi.eval(&p);
                }
                cell /= n_sub as f64;
                if point != 0.0 || cell != 0.0 {
                    let site = Site::new(x.clone());
                    entries.push((geom.encode(&site)?, point, cell));
                }
            }
            let mut j = d;
            loop {
                if j == 0 {
                    entries.sort_by_key(|e| e.0);
                    return Ok(PairingStencil {
                        epsilon: eps,
                        phi: phi.clone(),
                        scale: eps.powf((4.0 + d as f64) / 2.0),
                        sites: entries.iter().map(|e| e.0).collect(),
                        point_weights: entries.iter().map(|e| e.1).collect(),
                        cell_weights: entries.iter().map(|e| e.2).collect(),
                    });
                }
                j -= 1;
                if x[j] < hi[j] {
                    x[j] += 1;
                    break;
                }
                x[j] = lo[j];
            }
        }
    }

    pub fn sites(&self) -> &[u64] {
        &self.sites
    }

    pub fn point_weights(&self) -> &[f64] {
        &self.point_weights
    }

    pub fn cell_weights(&self) -> &[f64] {
        &self.cell_weights
    }

    fn pair_with(&self, sample: &FieldSample, weights: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (&s, &w) in self.sites.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let h = sample
                .h1_index(s)
                .ok_or_else(|| Error::Support(format!("site index {s} in the support carries no spin")))?;
            total += w * h;
        }
        Ok(self.scale * total)
    }

    /// `X_eps` from pointwise values of `phi`.
    pub fn pair(&self, sample: &FieldSample) -> Result<f64> {
        self.pair_with(sample, &self.point_weights)
    }

    /// `(h_eps, phi)` for the piecewise-constant extension, cell integrals by the `3^d` rule.
    pub fn pair_cells(&self, sample: &FieldSample) -> Result<f64> {
        self.pair_with(sample, &self.cell_weights)
    }

    /// Per-component sums of pointwise and cell weights for labels aligned with [`PairingStencil::sites`].
    pub fn component_weights(&self, labels: &ComponentLabels) -> Result<(Vec<f64>, Vec<f64>)> {
        if labels.sites() != self.sites.as_slice() {
            return domain("labels do not cover the stencil sites");
        }
        let mut point = vec![0.0; labels.count()];
        let mut cell = vec![0.0; labels.count()];
        for (i, &l) in labels.labels().iter().enumerate() {
            point[l as usize] += self.point_weights[i];
            cell[l as usize] += self.cell_weights[i];
        }
        Ok((point, cell))
    }
}

/// `X_eps` for one field sample.
pub fn pair_field(sample: &FieldSample, phi: &TestFunction, eps: f64) -> Result<PairingValue> {
    let stencil = PairingStencil::new(sample.geometry(), phi, eps)?;
    Ok(PairingValue { x_eps: stencil.pair(sample)?, epsilon: eps, phi: phi.clone() })
}

/// Pairings of many independent fields, one row per spin law.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingSamples {
    pub laws: Vec<SpinLaw>,
    /// `point[law][sample]`: `X_eps` with pointwise weights.
    pub point: Vec<Vec<f64>>,
    /// `cell[law][sample]`: the same spins paired with cell-average weights.
    pub cell: Vec<Vec<f64>>,
    /// Mean number of components met by the stencil.
    pub mean_components: f64,
}

/// Samples `X_eps` for `n` independent forests; every law reuses each forest with fresh spins.
///
/// Only the branches from the stencil sites are grown, which by the
/// ordering independence of Wilson's algorithm gives their exact joint
/// component structure in the wired box.
pub fn sample_pairings(
    geom: &BoxGeometry,
    stencil: &PairingStencil,
    laws: &[SpinLaw],
    n_samples: u64,
    family: &StreamFamily,
) -> Result<PairingSamples> {
    for law in laws {
        law.validate()?;
    }
    let sites: Vec<usize> = stencil.sites().iter().map(|&s| s as usize).collect();
    type Shard = (Vec<Vec<f64>>, Vec<Vec<f64>>, u64);
    let shards: Vec<Shard> = parallel::try_map_shards_with(
        n_samples,
        || WilsonSampler::new(geom),
        |sampler, range| {
            let mut point = vec![Vec::with_capacity((range.end - range.start) as usize); laws.len()];
            let mut cell = vec![Vec::with_capacity((range.end - range.start) as usize); laws.len()];
            let mut comps = 0u64;
            for s in range {
                let mut rng = family.rng(s);
                sampler.reset();
                for &v in &sites {
                    sampler.grow(v, &mut rng)?;
                }
                let labels = sampler.labels(&sites)?;
                comps += labels.count() as u64;
                let (pw, cw) = stencil.component_weights(&labels)?;
                for (k, law) in laws.iter().enumerate() {
                    let (mut xp, mut xc) = (0.0, 0.0);
                    for c in 0..labels.count() {
                        let spin = law.sample(&mut rng);
                        xp += spin * pw[c];
                        xc += spin * cw[c];
                    }
                    point[k].push(stencil.scale * xp);
                    cell[k].push(stencil.scale * xc);
                }
            }
            Ok((point, cell, comps))
        },
    )?;
    let mut out = PairingSamples {
        laws: laws.to_vec(),
        point: vec![Vec::new(); laws.len()],
        cell: vec![Vec::new(); laws.len()],
        mean_components: 0.0,
    };
    let mut comps = 0;
    for (p, c, k) in shards {
        for j in 0..laws.len() {
            out.point[j].extend_from_slice(&p[j]);
            out.cell[j].extend_from_slice(&c[j]);
        }
        comps += k;
    }
    out.mean_components = comps as f64 / n_samples.max(1) as f64;
    Ok(out)
}
