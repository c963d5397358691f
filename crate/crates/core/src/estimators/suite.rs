use statrs::distribution::{ContinuousCDF, Normal};

use super::moments::EstimateWithError;
use super::testing::{kolmogorov_p_value, ks_distance};
use crate::error::{config, domain, Result};

/// Smallest sample accepted by [`moment_suite`].
pub const MIN_SUITE_SAMPLES: usize = 10_000;

/// Arguments of the empirical characteristic function check.
pub const ECF_GRID: [f64; 3] = [0.5, 1.0, 2.0];

/// Central moments of a sample and their ratios to the Gaussian values.
///
/// Ratios are `m3 / m2^{3/2}`, `m4 / (3 m2^2)` and `m6 / (15 m2^3)`, so a
/// centered Gaussian gives `0, 1, 1`. Standard errors come from the delta
/// method applied to the empirical influence functions, including the
/// effect of centering at the sample mean.
#[derive(Clone, Debug)]
pub struct MomentSuite {
    pub n: u64,
    pub mean: EstimateWithError,
    pub m2: EstimateWithError,
    pub m3: EstimateWithError,
    pub m4: EstimateWithError,
    pub m6: EstimateWithError,
    pub skew_ratio: EstimateWithError,
    pub kurtosis_ratio: EstimateWithError,
    pub sixth_ratio: EstimateWithError,
}

pub fn moment_suite(samples: &[f64]) -> Result<MomentSuite> {
    let n = samples.len();
    if n < MIN_SUITE_SAMPLES {
        return config(format!("moment suite needs at least {MIN_SUITE_SAMPLES} samples, got {n}"));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let mut m = [0.0f64; 7];
    for &x in samples {
        let d = x - mean;
        let mut p = 1.0;
        for mk in m.iter_mut() {
            *mk += p;
            p *= d;
        }
    }
    m.iter_mut().for_each(|v| *v /= nf);
    if m[2] <= 0.0 || !m[2].is_finite() {
        return domain("degenerate sample: zero variance");
    }
    let m2 = m[2];
    let r3 = m[3] / m2.powf(1.5);
    let r4 = m[4] / (3.0 * m2 * m2);
    let r6 = m[6] / (15.0 * m2.powi(3));

    // influence of each statistic, accumulated as sums of squares
    let psi = |k: usize, d: f64| d.powi(k as i32) - m[k] - k as f64 * m[k - 1] * d;
    let mut ss = [0.0f64; 8];
    for &x in samples {
        let d = x - mean;
        let p2 = psi(2, d);
        let p3 = psi(3, d);
        let p4 = psi(4, d);
        let p6 = psi(6, d);
        let q3 = p3 / m2.powf(1.5) - 1.5 * r3 * p2 / m2;
        let q4 = p4 / (3.0 * m2 * m2) - 2.0 * r4 * p2 / m2;
        let q6 = p6 / (15.0 * m2.powi(3)) - 3.0 * r6 * p2 / m2;
        for (s, v) in ss.iter_mut().zip([d, p2, p3, p4, p6, q3, q4, q6]) {
            *s += v * v;
        }
    }
    let se = |s: f64| (s / nf / nf).sqrt();
    let e = |v: f64, s: f64| EstimateWithError::new(v, se(s), n as u64);
    Ok(MomentSuite {
        n: n as u64,
        mean: e(mean, ss[0]),
        m2: e(m2, ss[1]),
        m3: e(m[3], ss[2]),
        m4: e(m[4], ss[3]),
        m6: e(m[6], ss[4]),
        skew_ratio: e(r3, ss[5]),
        kurtosis_ratio: e(r4, ss[6]),
        sixth_ratio: e(r6, ss[7]),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct EcfPoint {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    /// `exp(-t^2 sigma^2 / 2)`.
    pub target: f64,
}

impl EcfPoint {
    pub fn gap(&self) -> f64 {
        ((self.re - self.target).powi(2) + self.im.powi(2)).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct GaussianityReport {
    pub n: usize,
    pub sigma2: f64,
    pub ks_distance: f64,
    pub ks_p_value: f64,
    pub ecf: Vec<EcfPoint>,
    pub max_ecf_gap: f64,
}

/// Kolmogorov-Smirnov and characteristic-function comparison with `Normal(0, sigma2)`.
pub fn gaussianity_tests(samples: &[f64], sigma2: f64) -> Result<GaussianityReport> {
    if !(sigma2 > 0.0) {
        return config(format!("reference variance must be positive, got {sigma2}"));
    }
    if samples.is_empty() {
        return config("no samples");
    }
    let normal = Normal::new(0.0, sigma2.sqrt()).map_err(|e| crate::Error::Compute(e.to_string()))?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let d = ks_distance(&sorted, |x| normal.cdf(x));
    let nf = samples.len() as f64;
    let ecf: Vec<EcfPoint> = ECF_GRID
        .iter()
        .map(|&t| {
            let (re, im) = samples.iter().fold((0.0, 0.0), |(r, i), &x| (r + (t * x).cos(), i + (t * x).sin()));
            EcfPoint { t, re: re / nf, im: im / nf, target: (-t * t * sigma2 / 2.0).exp() }
        })
        .collect();
    let max_ecf_gap = ecf.iter().map(EcfPoint::gap).fold(0.0, f64::max);
    Ok(GaussianityReport {
        n: samples.len(),
        sigma2,
        ks_distance: d,
        ks_p_value: kolmogorov_p_value(d, samples.len()),
        ecf,
        max_ecf_gap,
    })
}
