/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateWithError {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

impl EstimateWithError {
    pub fn new(value: f64, stderr: f64, n: u64) -> Self {
        EstimateWithError { value, stderr, n }
    }

    /// Mean of `n` indicators with `successes` ones, with the binomial standard error.
    pub fn bernoulli(successes: u64, n: u64) -> Self {
        if n == 0 {
            return EstimateWithError::new(f64::NAN, f64::NAN, 0);
        }
        let p = successes as f64 / n as f64;
        EstimateWithError::new(p, (p * (1.0 - p) / n as f64).sqrt(), n)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        EstimateWithError::new(self.value * factor, self.stderr * factor.abs(), self.n)
    }

    /// `|a - b| / sqrt(se_a^2 + se_b^2)` for independent estimates.
    pub fn z_distance(&self, other: &EstimateWithError) -> f64 {
        let s = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        (self.value - other.value).abs() / s
    }

    /// Agreement of two independent estimates within `k` combined standard errors.
    pub fn agrees_with(&self, other: &EstimateWithError, k: f64) -> bool {
        (self.value - other.value).abs() <= k * (self.stderr.powi(2) + other.stderr.powi(2)).sqrt()
    }

    /// Agreement with an exactly known value within `k` standard errors.
    pub fn agrees_with_exact(&self, exact: f64, k: f64) -> bool {
        (self.value - exact).abs() <= k * self.stderr
    }
}

impl std::fmt::Display for EstimateWithError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.6} ± {:.6} (n={})", self.value, self.stderr, self.n)
    }
}

pub const MAX_MOMENT_ORDER: usize = 8;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Streaming central moments up to order 8.
///
/// Stores the count, the running mean and the central sums
/// `M_p = sum (x - mean)^p` for `p = 2..=8`. Two accumulators combine with
/// the pairwise update of Pébay (2008), so shards can be merged in any
/// grouping with results equal up to round-off.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MomentAccumulator {
    n: u64,
    mean: f64,
    sums: [f64; MAX_MOMENT_ORDER + 1],
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let one = MomentAccumulator { n: 1, mean: x, sums: [0.0; MAX_MOMENT_ORDER + 1] };
        self.merge(&one);
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let (a, b) = (&self.sums, &other.sums);
        let mut out = [0.0; MAX_MOMENT_ORDER + 1];
        for p in 2..=MAX_MOMENT_ORDER {
            let mut s = a[p] + b[p];
            for k in 1..=p - 2 {
                s += binomial(p, k)
                    * ((-nb / n).powi(k as i32) * a[p - k] + (na / n).powi(k as i32) * b[p - k])
                    * delta.powi(k as i32);
            }
            let pf = p as i32;
            s += (na * nb / n * delta).powi(pf) * (1.0 / nb.powi(pf - 1) - (-1.0 / na).powi(pf - 1));
            out[p] = s;
        }
        self.sums = out;
        self.mean += delta * nb / n;
        self.n += other.n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population central moment `M_p / n` for `p` in `2..=8`.
    pub fn central_moment(&self, p: usize) -> f64 {
        assert!((2..=MAX_MOMENT_ORDER).contains(&p), "moment order {p} not tracked");
        self.sums[p] / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        self.sums[2] / (self.n - 1) as f64
    }

    pub fn mean_estimate(&self) -> EstimateWithError {
        EstimateWithError::new(self.mean, (self.variance() / self.n as f64).sqrt(), self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn direct(xs: &[f64], p: usize) -> f64 {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m).powi(p as i32)).sum::<f64>() / xs.len() as f64
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn matches_two_pass_moments() {
        let mut rng = crate::rng::RngStream::new(1, 1).rng();
        let xs: Vec<f64> = (0..5000).map(|_| rng.gen::<f64>().powi(3) * 4.0 + 10.0).collect();
        let mut acc = MomentAccumulator::new();
        xs.iter().for_each(|&x| acc.push(x));
        assert!(rel(acc.mean(), xs.iter().sum::<f64>() / 5000.0) < 1e-12);
        for p in 2..=8 {
            assert!(rel(acc.central_moment(p), direct(&xs, p)) < 1e-9, "order {p}");
        }
    }

    #[test]
    fn merge_equals_concatenation() {
        let mut rng = crate::rng::RngStream::new(2, 1).rng();
        let xs: Vec<f64> = (0..3000).map(|_| rng.gen::<f64>() * 2.0 - 0.3).collect();
        let mut whole = MomentAccumulator::new();
        xs.iter().for_each(|&x| whole.push(x));
        // three uneven shards merged in two different groupings
        let parts: Vec<MomentAccumulator> = [&xs[..17], &xs[17..1900], &xs[1900..]]
            .iter()
            .map(|s| {
                let mut a = MomentAccumulator::new();
                s.iter().for_each(|&x| a.push(x));
                a
            })
            .collect();
        let mut left = parts[0].clone();
        left.merge(&parts[1]);
        left.merge(&parts[2]);
        let mut right = parts[1].clone();
        right.merge(&parts[2]);
        let mut right_total = parts[0].clone();
        right_total.merge(&right);
        for acc in [&left, &right_total] {
            assert_eq!(acc.count(), whole.count());
            assert!(rel(acc.mean(), whole.mean()) < 1e-10);
            for p in 2..=8 {
                assert!(rel(acc.central_moment(p), whole.central_moment(p)) < 1e-10, "order {p}");
            }
        }
    }

    #[test]
    fn bernoulli_standard_error() {
        let e = EstimateWithError::bernoulli(25, 100);
        assert_eq!(e.value, 0.25);
        assert!((e.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(EstimateWithError::bernoulli(0, 10).stderr, 0.0);
    }

    #[test]
    fn binomial_stderr_matches_bootstrap() {
        let mut rng = crate::rng::RngStream::new(3, 1).rng();
        let n = 4000;
        let stream: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < 0.3).collect();
        let k = stream.iter().filter(|&&b| b).count() as u64;
        let analytic = EstimateWithError::bernoulli(k, n as u64).stderr;
        let reps = 400;
        let mut means = MomentAccumulator::new();
        for _ in 0..reps {
            let hits = (0..n).filter(|_| stream[rng.gen_range(0..n)]).count();
            means.push(hits as f64 / n as f64);
        }
        let boot = means.variance().sqrt();
        assert!(rel(boot, analytic) < 0.1, "bootstrap {boot} vs analytic {analytic}");
    }

    #[test]
    fn stderr_shrinks_like_inverse_sqrt_n() {
        let mut rng = crate::rng::RngStream::new(4, 1).rng();
        let se = |n: usize, rng: &mut crate::rng::SampleRng| {
            let mut a = MomentAccumulator::new();
            (0..n).for_each(|_| a.push(rng.gen::<f64>()));
            a.mean_estimate().stderr
        };
        let ratio = se(1000, &mut rng) / se(16000, &mut rng);
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }
}
