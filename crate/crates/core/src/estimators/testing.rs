//! Classical goodness-of-fit machinery used by the estimators and the acceptance checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{config, Result};

#[derive(Clone, Copy, Debug)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of observed counts against category probabilities.
pub fn chi_square_test(observed: &[u64], expected_probs: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != expected_probs.len() || observed.len() < 2 {
        return config("chi-square needs at least two matching categories");
    }
    let total: u64 = observed.iter().sum();
    let norm: f64 = expected_probs.iter().sum();
    let statistic = observed
        .iter()
        .zip(expected_probs)
        .map(|(&o, &p)| {
            let e = total as f64 * p / norm;
            (o as f64 - e).powi(2) / e
        })
        .sum::<f64>();
    let dof = observed.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| crate::Error::Compute(e.to_string()))?;
    Ok(ChiSquareTest { statistic, dof, p_value: dist.sf(statistic) })
}

/// Largest gap between the empirical CDF of `sorted` and `cdf`.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic Kolmogorov p-value with Stephens' finite-`n` correction.
pub fn kolmogorov_p_value(distance: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * distance;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Clone, Copy, Debug)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return config("line fit needs at least two points");
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return config("line fit needs distinct abscissae");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_stderr = if xs.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LineFit { slope, intercept, slope_stderr })
}

/// Log-log slope of `values` against `abscissae`.
pub fn log_log_slope(abscissae: &[f64], values: &[f64]) -> Result<LineFit> {
    if values.iter().chain(abscissae).any(|&v| v <= 0.0) {
        return config("log-log fit needs positive data");
    }
    let lx: Vec<f64> = abscissae.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|y| y.ln()).collect();
    fit_line(&lx, &ly)
}

/// Weighted least squares on `ln y` with weights from relative errors.
pub fn weighted_log_log_slope(abscissae: &[f64], values: &[f64], stderrs: &[f64]) -> Result<LineFit> {
    if values.iter().chain(abscissae).any(|&v| v <= 0.0) {
        return config("log-log fit needs positive data");
    }
    let lx: Vec<f64> = abscissae.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|y| y.ln()).collect();
    let w: Vec<f64> = values.iter().zip(stderrs).map(|(v, s)| (v / s).powi(2)).collect();
    let sw: f64 = w.iter().sum();
    let mx = lx.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ly.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = lx.iter().zip(&w).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).zip(&w).map(|((x, y), w)| w * (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return config("line fit needs distinct abscissae");
    }
    let slope = sxy / sxx;
    Ok(LineFit { slope, intercept: my - slope * mx, slope_stderr: (1.0 / sxx).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_perfect_fit() {
        let t = chi_square_test(&[100, 100, 100], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.dof, 2);
        assert!((t.p_value - 1.0).abs() < 1e-12);
        let bad = chi_square_test(&[300, 0, 0], &[1.0, 1.0, 1.0]).unwrap();
        assert!(bad.p_value < 1e-10);
    }

    #[test]
    fn kolmogorov_reference_points() {
        // lambda = 1.36 and 1.63 are the classical 5% and 1% critical values
        let n = 1_000_000;
        let d = |l: f64| l / ((n as f64).sqrt() + 0.12 + 0.11 / (n as f64).sqrt());
        assert!((kolmogorov_p_value(d(1.358), n) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_p_value(d(1.628), n) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn ks_distance_of_exact_quantiles_is_small() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn line_fit_recovers_power() {
        let xs: Vec<f64> = (1..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x.powf(-3.0)).collect();
        let f = log_log_slope(&xs, &ys).unwrap();
        assert!((f.slope + 3.0).abs() < 1e-12);
        assert!((f.intercept - 2f64.ln()).abs() < 1e-12);
        let w = weighted_log_log_slope(&xs, &ys, &vec![1e-3; xs.len()]).unwrap();
        assert!((w.slope + 3.0).abs() < 1e-12);
    }
}
