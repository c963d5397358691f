//! The discrete bi-Laplacian Gaussian field (membrane model) on a torus, and
//! exact variances of its pairings.
//!
//! Fourier convention on `(Z/NZ)^d`: the forward transform is unnormalized,
//!
//! ```text
//! f^(k) = sum_x f(x) exp(-2 pi i k.x / N),   f(x) = N^{-d} sum_k f^(k) exp(2 pi i k.x / N),
//! ```
//!
//! so the inverse carries the factor `N^{-d}`. The negative lattice Laplacian
//! has symbol `mu(k) = sum_j 2 (1 - cos(2 pi k_j / N))`. A sample solves
//! `-Lap h = xi - mean(xi)` for lattice white noise `xi` of unit variance per
//! site, so its covariance is
//!
//! ```text
//! C(x) = N^{-d} sum_{k != 0} cos(2 pi k.x / N) / mu(k)^2
//! ```
//!
//! and the pairing `(h, f) = sum_x f(x) h(x)` has variance
//! `N^{-d} sum_{k != 0} |f^(k)|^2 / mu(k)^2`. The zero mode is dropped, so
//! every sample has spatial mean zero.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use statrs::function::erf::erf;
use statrs::function::gamma::gamma;

use crate::error::{config, domain, Error, Result};
use crate::green::Quadrature;
use crate::lattice::TorusGeometry;
use crate::spin::{TestFunction, TestFunctionKind};

/// Largest torus handled by the dense transform routes.
pub const MAX_FFT_SITES: usize = 1 << 25;

/// Relative change between mesh doublings accepted by [`whole_space_variance`].
pub const WHOLE_SPACE_REL_TOL: f64 = 5e-3;

const MAX_WHOLE_SPACE_MESH: usize = 512;
const LOG_STEP: f64 = 0.02;

/// Eigenvalues of the negative Laplacian on the discrete torus.
#[derive(Clone, Debug)]
pub struct SpectralSpec {
    geom: TorusGeometry,
    axis: Vec<f64>,
}

impl SpectralSpec {
    pub fn new(geom: &TorusGeometry) -> SpectralSpec {
        let n = geom.side();
        let axis = (0..n).map(|m| 2.0 * (1.0 - (2.0 * PI * m as f64 / n as f64).cos())).collect();
        SpectralSpec { geom: geom.clone(), axis }
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geom
    }

    /// `2 (1 - cos(2 pi m / N))` for one coordinate.
    pub fn axis_eigenvalue(&self, m: usize) -> f64 {
        self.axis[m % self.axis.len()]
    }

    pub fn eigenvalue(&self, k: &[usize]) -> f64 {
        k.iter().map(|&m| self.axis_eigenvalue(m)).sum()
    }

    /// Calls `f(index, mu)` for every mode in row-major order.
    fn for_each_mode(&self, mut f: impl FnMut(usize, f64)) {
        let n = self.geom.side();
        let rows = self.geom.site_count() / n;
        let mut digits = vec![0usize; self.geom.dim() - 1];
        for row in 0..rows {
            let base: f64 = digits.iter().map(|&m| self.axis[m]).sum();
            for (m, &a) in self.axis.iter().enumerate() {
                f(row * n + m, base + a);
            }
            for d in digits.iter_mut().rev() {
                *d += 1;
                if *d < n {
                    break;
                }
                *d = 0;
            }
        }
    }
}

/// d-dimensional transform on a cube, one batched pass per axis.
///
/// Each pass transforms along the contiguous last axis and then moves that
/// axis to the front, so after `d` passes the original layout is restored.
struct NdFft {
    side: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl NdFft {
    fn new(geom: &TorusGeometry) -> NdFft {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(geom.side());
        let inverse = planner.plan_fft_inverse(geom.side());
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        NdFft {
            side: geom.side(),
            dim: geom.dim(),
            forward,
            inverse,
            scratch: vec![Complex64::default(); len],
            tmp: Vec::new(),
        }
    }

    fn run(&mut self, buf: &mut Vec<Complex64>, inverse: bool) {
        let total = buf.len();
        let plan = if inverse { &self.inverse } else { &self.forward };
        self.tmp.resize(total, Complex64::default());
        for _ in 0..self.dim {
            plan.process_with_scratch(buf, &mut self.scratch);
            transpose::transpose(buf, &mut self.tmp, self.side, total / self.side);
            std::mem::swap(buf, &mut self.tmp);
        }
        if inverse {
            let s = 1.0 / total as f64;
            buf.iter_mut().for_each(|z| *z *= s);
        }
    }
}

/// A real field on the discrete torus.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusField {
    geom: TorusGeometry,
    values: Vec<f64>,
}

const BINARY_MAGIC: &[u8; 8] = b"BILAPF64";

impl TorusField {
    pub fn new(geom: &TorusGeometry, values: Vec<f64>) -> Result<TorusField> {
        if values.len() != geom.site_count() {
            return domain(format!("{} values for {} sites", values.len(), geom.site_count()));
        }
        Ok(TorusField { geom: geom.clone(), values })
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geom
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, coords: &[i64]) -> f64 {
        self.values[self.geom.encode(coords)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Calls `f(index, shifted index)` for every site, shifting by `lag` along `axis` with wrap-around.
    fn for_each_shift(&self, axis: usize, lag: usize, mut f: impl FnMut(usize, usize)) {
        let n = self.geom.side();
        let s = n.pow((self.geom.dim() - 1 - axis) as u32);
        let lag = lag % n;
        for block in (0..self.values.len()).step_by(s * n) {
            for xj in 0..n {
                let start = block + xj * s;
                let target = block + ((xj + lag) % n) * s;
                for o in 0..s {
                    f(start + o, target + o);
                }
            }
        }
    }

    /// `sum_j h(x + e_j) + h(x - e_j) - 2 h(x)`.
    pub fn laplacian(&self) -> Vec<f64> {
        let n = self.geom.side();
        let v = &self.values;
        let mut out: Vec<f64> = v.iter().map(|x| -2.0 * self.geom.dim() as f64 * x).collect();
        for j in 0..self.geom.dim() {
            self.for_each_shift(j, 1, |i, t| out[i] += v[t]);
            self.for_each_shift(j, n - 1, |i, t| out[i] += v[t]);
        }
        out
    }

    /// `N^{-d} sum_x h(x) h(x + r e_j)` averaged over axes `j`, for `r = 0..=max_lag`.
    pub fn axis_covariance(&self, max_lag: usize) -> Vec<f64> {
        let v = &self.values;
        let norm = (self.geom.dim() * v.len()) as f64;
        (0..=max_lag)
            .map(|r| {
                let mut acc = 0.0;
                for j in 0..self.geom.dim() {
                    self.for_each_shift(j, r, |i, t| acc += v[i] * v[t]);
                }
                acc / norm
            })
            .collect()
    }

    /// `sum_x f(x) h(x)` for a sparse lattice test vector.
    pub fn pair(&self, f: &TorusTestVector) -> Result<f64> {
        if f.geom != self.geom {
            return domain("test vector built for a different torus");
        }
        Ok(f.entries.iter().map(|&(i, w)| w * self.values[i]).sum())
    }

    /// Flat dump: magic, then `d`, `N`, `seed` as little-endian `u64`, then row-major `f64` values.
    pub fn write_binary<W: Write>(&self, mut out: W, seed: u64) -> std::io::Result<()> {
        out.write_all(BINARY_MAGIC)?;
        for h in [self.geom.dim() as u64, self.geom.side() as u64, seed] {
            out.write_all(&h.to_le_bytes())?;
        }
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()
    }

    /// Reads a dump written by [`write_binary`](Self::write_binary), returning the field and its seed.
    pub fn read_binary<R: Read>(mut input: R) -> Result<(TorusField, u64)> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return domain("not a field dump");
        }
        let mut word = [0u8; 8];
        let mut header = [0u64; 3];
        for h in header.iter_mut() {
            input.read_exact(&mut word)?;
            *h = u64::from_le_bytes(word);
        }
        let geom = TorusGeometry::new(header[0] as usize, header[1] as usize)?;
        let mut values = vec![0.0; geom.site_count()];
        for v in values.iter_mut() {
            input.read_exact(&mut word)?;
            *v = f64::from_le_bytes(word);
        }
        Ok((TorusField { geom, values }, header[2]))
    }
}

/// Spectral sampler holding the transform buffers of one worker.
pub struct BilapSampler {
    spec: SpectralSpec,
    fft: NdFft,
    buf: Vec<Complex64>,
}

impl BilapSampler {
    pub fn new(geom: &TorusGeometry) -> Result<BilapSampler> {
        let geom = TorusGeometry::spectral(geom.dim(), geom.side())?;
        if geom.site_count() > MAX_FFT_SITES {
            return config(format!("torus with {} sites exceeds the limit {MAX_FFT_SITES}", geom.site_count()));
        }
        Ok(BilapSampler { spec: SpectralSpec::new(&geom), fft: NdFft::new(&geom), buf: Vec::new() })
    }

    pub fn geometry(&self) -> &TorusGeometry {
        self.spec.geometry()
    }

    /// Two independent samples from one inverse transform.
    ///
    /// Modes `Z(k) = N^{d/2} (a_k + i b_k) / mu(k)` with independent standard
    /// normals `a_k, b_k` have the law of the transform of complex white noise
    /// `xi_1 + i xi_2`; the real and imaginary parts of the inverse transform
    /// are then independent membrane fields.
    pub fn sample_pair<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (TorusField, TorusField) {
        let geom = self.spec.geometry().clone();
        let total = geom.site_count();
        let amp = (total as f64).sqrt();
        self.buf.resize(total, Complex64::default());
        let buf = &mut self.buf;
        self.spec.for_each_mode(|i, mu| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            buf[i] = if i == 0 { Complex64::default() } else { Complex64::new(a, b) * (amp / mu) };
        });
        self.fft.run(&mut self.buf, true);
        let re = self.buf.iter().map(|z| z.re).collect();
        let im = self.buf.iter().map(|z| z.im).collect();
        (TorusField { geom: geom.clone(), values: re }, TorusField { geom, values: im })
    }
}

/// One membrane field on `(Z/NZ)^d`.
pub fn sample_bilap_torus<R: Rng + ?Sized>(side: usize, dim: usize, rng: &mut R) -> Result<TorusField> {
    let geom = TorusGeometry::spectral(dim, side)?;
    Ok(BilapSampler::new(&geom)?.sample_pair(rng).0)
}

/// The lattice vector `f(x) = phi(eps x)`, `x` in centred torus coordinates, stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusTestVector {
    geom: TorusGeometry,
    entries: Vec<(usize, f64)>,
}

impl TorusTestVector {
    pub fn new(geom: &TorusGeometry, phi: &TestFunction, eps: f64) -> Result<TorusTestVector> {
        let ranges = embedded_ranges(geom, phi, eps)?;
        let mut entries = Vec::new();
        let mut x: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        let mut u = vec![0.0; geom.dim()];
        'outer: loop {
            for (uj, &xj) in u.iter_mut().zip(&x) {
                *uj = eps * xj as f64;
            }
            let w = phi.eval(&u);
            if w != 0.0 {
                entries.push((geom.encode(&x), w));
            }
            for j in (0..x.len()).rev() {
                x[j] += 1;
                if x[j] <= ranges[j].1 {
                    continue 'outer;
                }
                x[j] = ranges[j].0;
            }
            break;
        }
        entries.sort_unstable_by_key(|e| e.0);
        Ok(TorusTestVector { geom: geom.clone(), entries })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn scaled(&self, c: f64) -> TorusTestVector {
        TorusTestVector { geom: self.geom.clone(), entries: self.entries.iter().map(|&(i, w)| (i, c * w)).collect() }
    }
}

/// Lattice coordinate ranges covering the support, checked to fit in `[-N/2, N/2)`.
fn embedded_ranges(geom: &TorusGeometry, phi: &TestFunction, eps: f64) -> Result<Vec<(i64, i64)>> {
    phi.validate()?;
    if phi.dim() != geom.dim() {
        return domain(format!("test function in dimension {} on a {}-dimensional torus", phi.dim(), geom.dim()));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return config(format!("scale must be positive, got {eps}"));
    }
    let half = (geom.side() / 2) as f64;
    let r = phi.support_half_width();
    phi.center
        .iter()
        .map(|&c| {
            let (lo, hi) = ((c - r) / eps, (c + r) / eps);
            if lo <= -half || hi >= half {
                return Err(Error::Support(format!(
                    "support [{:.3}, {:.3}] / eps leaves the torus of side {}",
                    c - r,
                    c + r,
                    geom.side()
                )));
            }
            Ok((lo.ceil() as i64, hi.floor() as i64))
        })
        .collect()
}

/// `sum_{k != 0} prod_j f_j(k_j) / mu(k)^2` for per-axis spectral factors `f_j`.
///
/// Uses `1/mu^2 = int_0^inf tau exp(-tau mu) dtau`, under which the sum
/// factorizes over axes. The `k = 0` term is removed inside the integrand by
/// the recursion `F_j = F_{j-1} A_j + Q_{j-1} D_j`, where `A_j` is the full
/// axis sum, `D_j` the axis sum without `m = 0` and `Q_j` the product of the
/// `m = 0` terms, which avoids cancellation at large `tau`.
fn separable_inverse_square(factors: &[Vec<f64>]) -> f64 {
    let n = factors[0].len();
    let c: Vec<f64> = (0..n).map(|m| 2.0 * (1.0 - (2.0 * PI * m as f64 / n as f64).cos())).collect();
    let u_max = (60.0 / c[1]).ln();
    let mut u: f64 = -30.0;
    let mut acc = 0.0;
    let mut decay = vec![0.0; n];
    while u <= u_max {
        let tau = u.exp();
        for (d, &cm) in decay.iter_mut().zip(&c) {
            *d = (-tau * cm).exp();
        }
        let (mut f, mut q) = (0.0, 1.0);
        for fac in factors {
            let d: f64 = fac[1..].iter().zip(&decay[1..]).map(|(a, b)| a * b).sum();
            f = f * (fac[0] + d) + q * d;
            q *= fac[0];
        }
        acc += tau * tau * f;
        u += LOG_STEP;
    }
    acc * LOG_STEP
}

/// Exact covariance `C(x)` of the membrane field on the torus.
pub fn exact_covariance(geom: &TorusGeometry, x: &[i64]) -> Result<f64> {
    if x.len() != geom.dim() {
        return domain("lag has the wrong dimension");
    }
    let n = geom.side();
    let factors: Vec<Vec<f64>> =
        x.iter().map(|&xj| (0..n).map(|m| (2.0 * PI * (m as i64 * xj) as f64 / n as f64).cos()).collect()).collect();
    Ok(separable_inverse_square(&factors) / geom.site_count() as f64)
}

/// `N^{-d} sum_{k != 0} |f^(k)|^2 / mu(k)^2` by a dense transform of the test vector.
pub fn exact_pairing_variance_fft(f: &TorusTestVector) -> Result<f64> {
    let geom = &f.geom;
    if geom.site_count() > MAX_FFT_SITES {
        return config(format!("torus with {} sites exceeds the limit {MAX_FFT_SITES}", geom.site_count()));
    }
    let mut buf = vec![Complex64::default(); geom.site_count()];
    for &(i, w) in &f.entries {
        buf[i] = Complex64::new(w, 0.0);
    }
    NdFft::new(geom).run(&mut buf, false);
    let mut acc = 0.0;
    SpectralSpec::new(geom).for_each_mode(|i, mu| {
        if i != 0 {
            acc += buf[i].norm_sqr() / (mu * mu);
        }
    });
    Ok(acc / geom.site_count() as f64)
}

/// The same quantity for a truncated Gaussian, whose lattice vector is a product over axes.
///
/// Costs `O(d N^2)` regardless of the torus volume.
pub fn exact_pairing_variance_separable(geom: &TorusGeometry, phi: &TestFunction, eps: f64) -> Result<f64> {
    if phi.kind != TestFunctionKind::TruncatedGaussian {
        return domain("the separable route needs a truncated Gaussian");
    }
    let ranges = embedded_ranges(geom, phi, eps)?;
    let n = geom.side();
    let sigma = phi.radius / 3.0;
    let factors: Vec<Vec<f64>> = ranges
        .iter()
        .zip(&phi.center)
        .map(|(&(lo, hi), &c)| {
            let g: Vec<(i64, f64)> = (lo..=hi)
                .filter(|&x| (eps * x as f64 - c).abs() < phi.radius)
                .map(|x| (x, (-(eps * x as f64 - c).powi(2) / (2.0 * sigma * sigma)).exp()))
                .collect();
            (0..n)
                .map(|m| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for &(x, w) in &g {
                        let a = 2.0 * PI * (m as i64 * x).rem_euclid(n as i64) as f64 / n as f64;
                        re += w * a.cos();
                        im -= w * a.sin();
                    }
                    re * re + im * im
                })
                .collect()
        })
        .collect();
    Ok(separable_inverse_square(&factors) / geom.site_count() as f64)
}

/// Variance of `sum_x phi(eps x) h(x)` for the membrane field on the torus of side `N`.
///
/// Truncated Gaussians use the separable route, other test functions the dense transform.
pub fn exact_pairing_variance(phi: &TestFunction, side: usize, eps: f64) -> Result<f64> {
    let geom = TorusGeometry::new(phi.dim(), side)?;
    match phi.kind {
        TestFunctionKind::TruncatedGaussian => exact_pairing_variance_separable(&geom, phi, eps),
        TestFunctionKind::Bump => exact_pairing_variance_fft(&TorusTestVector::new(&geom, phi, eps)?),
    }
}

/// Area of the unit sphere `S^{n-1}` in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0)
}

/// `Gamma_d` with `Lap^2 (Gamma_d |x|^{4-d}) = delta` on `R^d`, `d >= 5`.
///
/// At mid-range the torus covariance behaves like `Gamma_d |x|^{4-d}`, so
/// `eps^{d+4} exact_pairing_variance` tends to `Gamma_d whole_space_variance`.
pub fn membrane_kernel_constant(dim: usize) -> f64 {
    let d = dim as f64;
    1.0 / (2.0 * (d - 2.0) * (d - 4.0) * sphere_area(dim))
}

/// `int int |x - y|^{4-d} phi(x) phi(y) dx dy`, refined by mesh doubling.
///
/// Bumps are radial, so the integral reduces to
/// `|S^{d-1}| int_0^{2r} rho^3 A(rho) drho` with the autocorrelation `A`
/// written in cylindrical coordinates about the shift axis; all three
/// integrals use the midpoint rule with `mesh` nodes. Truncated Gaussians
/// factor over axes: with `|s|^{4-d} = Gamma(a)^{-1} int tau^{a-1} e^{-tau |s|^2} dtau`,
/// `a = (d-4)/2`, the value is a one-dimensional `tau` integral of the `d`-th
/// power of a one-dimensional Gaussian transform of the axis autocorrelation,
/// which has a closed form; that transform uses Simpson's rule with `mesh` panels.
pub fn whole_space_variance(phi: &TestFunction, quad_mesh: usize) -> Result<Quadrature> {
    phi.validate()?;
    if phi.dim() < 5 {
        return domain(format!("the kernel |x|^(4-d) needs d >= 5, got {}", phi.dim()));
    }
    if quad_mesh < 8 {
        return config("quadrature mesh must be at least 8");
    }
    let eval = |mesh: usize| match phi.kind {
        TestFunctionKind::Bump => radial_bump_variance(phi.dim(), phi.radius, mesh),
        TestFunctionKind::TruncatedGaussian => separable_gaussian_variance(phi.dim(), phi.radius, mesh),
    };
    let mut mesh = quad_mesh;
    let mut prev = eval(mesh);
    while mesh < MAX_WHOLE_SPACE_MESH {
        mesh *= 2;
        let next = eval(mesh);
        let change = (next - prev).abs();
        if change <= WHOLE_SPACE_REL_TOL * next.abs() {
            return Ok(Quadrature { value: next, mesh, change });
        }
        prev = next;
    }
    Err(Error::Accuracy(format!("whole-space variance not converged at mesh {mesh}")))
}

fn radial_bump_variance(dim: usize, r: f64, n: usize) -> f64 {
    let profile = |rho2: f64| {
        let u2 = rho2 / (r * r);
        if u2 < 1.0 {
            (-1.0 / (1.0 - u2)).exp()
        } else {
            0.0
        }
    };
    let tpow = (dim - 2) as i32;
    let hr = 2.0 * r / n as f64;
    let mut outer = 0.0;
    for i in 0..n {
        let rho = (i as f64 + 0.5) * hr;
        let (xlo, xhi) = (-r, r - rho);
        let hx = (xhi - xlo) / n as f64;
        let mut a = 0.0;
        for jx in 0..n {
            let x = xlo + (jx as f64 + 0.5) * hx;
            let x2 = x * x;
            let y2 = (x + rho) * (x + rho);
            let tmax2 = r * r - x2.max(y2);
            if tmax2 <= 0.0 {
                continue;
            }
            let ht = tmax2.sqrt() / n as f64;
            let mut inner = 0.0;
            for jt in 0..n {
                let t = (jt as f64 + 0.5) * ht;
                let t2 = t * t;
                inner += t.powi(tpow) * profile(x2 + t2) * profile(y2 + t2);
            }
            a += inner * ht;
        }
        outer += rho.powi(3) * a * hx;
    }
    sphere_area(dim) * sphere_area(dim - 1) * outer * hr
}

fn separable_gaussian_variance(dim: usize, r: f64, n: usize) -> f64 {
    let sigma = r / 3.0;
    let auto = |s: f64| (-s * s / (4.0 * sigma * sigma)).exp() * sigma * PI.sqrt() * erf((r - s / 2.0) / sigma);
    let n = n + n % 2;
    let alpha = (dim as f64 - 4.0) / 2.0;
    let mut acc = 0.0;
    let mut u: f64 = -40.0;
    while u <= 40.0 {
        let tau = u.exp();
        let b = 2.0 * simpson(|s| auto(s) * (-tau * s * s).exp(), 0.0, (2.0 * r).min(12.0 / tau.sqrt()), n);
        acc += tau.powf(alpha) * b.powi(dim as i32);
        u += LOG_STEP;
    }
    acc * LOG_STEP / gamma(alpha)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}
