//! Lattice Green's function of simple random walk and its self-convolution by Fourier quadrature.
//!
//! Both quantities are integrals over the Brillouin zone,
//!
//! ```text
//! F_p(x) = (2 pi)^{-d} \int cos(k . x) / (1 - lambda(k))^p dk,   lambda(k) = d^{-1} sum_j cos k_j,
//! ```
//!
//! with `p = 1` for `G(0,x)` and `p = 2` for `sum_w G(0,w) G(w,x)`. They are
//! approximated by the midpoint rule on an `M^d` grid shifted by half a cell,
//! which never samples the singular point `k = 0`.
//!
//! The `M^d` grid sum is evaluated exactly, not by visiting `M^d` nodes. With
//! `1/a^p = \int_0^inf t^{p-1} e^{-t a} dt / Gamma(p)` the summand factorizes
//! over coordinates, and the grid sum becomes a one-dimensional integral of a
//! product of one-dimensional grid sums
//!
//! ```text
//! B(x, s) = M^{-1} sum_m cos(k_m x) exp(s (cos k_m - 1)),   s = t / d.
//! ```
//!
//! The `t` integral is done by the trapezoid rule in `ln t`, which converges
//! geometrically for this smooth, doubly decaying integrand.

use crate::error::{domain, Error, Result};
use crate::lattice::Site;

/// Smallest mesh accepted by the quadrature drivers.
pub const MIN_MESH: usize = 64;

/// Largest mesh the drivers will double to before giving up.
pub const MAX_MESH: usize = 16_384;

/// Absolute change allowed between successive mesh doublings.
pub const ABS_TOL: f64 = 1e-6;

/// Relative change allowed between successive mesh doublings.
pub const REL_TOL: f64 = 1e-4;

const LOG_STEP: f64 = 0.02;
const LOG_T_MIN: f64 = -40.0;

/// A converged quadrature value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Finest mesh used.
    pub mesh: usize,
    /// Change produced by the last doubling.
    pub change: f64,
}

/// Nodes `t_i = e^{u_i}` and trapezoid weights `t_i^p h / Gamma(p)` for a given mesh.
struct Schwinger {
    t: Vec<f64>,
    weight: Vec<f64>,
}

impl Schwinger {
    fn new(mesh: usize, power: u32) -> Schwinger {
        let gap = 1.0 - (std::f64::consts::PI / mesh as f64).cos();
        // the slowest factor decays like exp(-t gap); stop at e^{-45}
        let u_max = (45.0 / gap).ln();
        let steps = ((u_max - LOG_T_MIN) / LOG_STEP).ceil() as usize;
        let gamma = (1..power).map(|k| k as f64).product::<f64>();
        let (mut t, mut weight) = (Vec::with_capacity(steps + 1), Vec::with_capacity(steps + 1));
        for i in 0..=steps {
            let u = LOG_T_MIN + i as f64 * LOG_STEP;
            let ti = u.exp();
            let end = if i == 0 || i == steps { 0.5 } else { 1.0 };
            t.push(ti);
            weight.push(end * LOG_STEP * ti.powi(power as i32) / gamma);
        }
        Schwinger { t, weight }
    }
}

fn grid(mesh: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    (0..mesh).map(|m| -pi + (m as f64 + 0.5) * 2.0 * pi / mesh as f64).collect()
}

/// `B(x, s)` for every node and every `x` in `0..=max_x`; rows are nodes.
fn factor_table(mesh: usize, dim: usize, nodes: &[f64], max_x: usize) -> Vec<Vec<f64>> {
    let k = grid(mesh);
    let cosk: Vec<f64> = k.iter().map(|v| v.cos()).collect();
    let cos_kx: Vec<Vec<f64>> = (0..=max_x).map(|x| k.iter().map(|v| (v * x as f64).cos()).collect()).collect();
    let mut e = vec![0.0; mesh];
    nodes
        .iter()
        .map(|&t| {
            let s = t / dim as f64;
            for (em, c) in e.iter_mut().zip(&cosk) {
                *em = (s * (c - 1.0)).exp();
            }
            cos_kx.iter().map(|row| row.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>() / mesh as f64).collect()
        })
        .collect()
}

/// The midpoint sum `M^{-d} sum_k cos(k . x) / (1 - lambda(k))^power` on the shifted `M^d` grid.
pub fn midpoint_sum(x: &[i64], mesh: usize, power: u32) -> f64 {
    let dim = x.len();
    let abs: Vec<usize> = x.iter().map(|c| c.unsigned_abs() as usize).collect();
    let max_x = abs.iter().copied().max().unwrap_or(0);
    let sch = Schwinger::new(mesh, power);
    let table = factor_table(mesh, dim, &sch.t, max_x);
    table
        .iter()
        .zip(&sch.weight)
        .map(|(row, w)| w * abs.iter().map(|&a| row[a]).product::<f64>())
        .sum()
}

fn check_site(x: &Site) -> Result<Vec<i64>> {
    if x.dim() < 5 {
        return domain(format!("Green quadrature needs d >= 5, got {}", x.dim()));
    }
    Ok(x.coords().iter().map(|&c| c as i64).collect())
}

fn converged(a: f64, b: f64) -> bool {
    let change = (a - b).abs();
    change < ABS_TOL && change <= REL_TOL * b.abs()
}

/// `G(0, x)` by mesh doubling from `mesh` until two successive values agree.
pub fn green_quadrature(x: &Site, mesh: usize) -> Result<Quadrature> {
    let xs = check_site(x)?;
    if mesh < MIN_MESH {
        return domain(format!("mesh must be at least {MIN_MESH}"));
    }
    let mut m = mesh;
    let mut prev = midpoint_sum(&xs, m, 1);
    while m < MAX_MESH {
        m *= 2;
        let next = midpoint_sum(&xs, m, 1);
        if converged(prev, next) {
            return Ok(Quadrature { value: next, mesh: m, change: (next - prev).abs() });
        }
        prev = next;
    }
    Err(Error::Accuracy(format!("G(0,{x}) did not converge by mesh {MAX_MESH}")))
}

/// `sum_w G(0,w) G(w,z)` as the `p = 2` Fourier integral.
///
/// The midpoint error of the `|k|^{-4}` singularity in five or more
/// dimensions expands in odd powers `M^{4-d}, M^{2-d}, ...`; two Richardson
/// steps remove the first two terms before the doubling test is applied.
pub fn green_convolution(z: &Site, mesh: usize) -> Result<Quadrature> {
    let zs = check_site(z)?;
    if z.is_origin() {
        return domain("Green convolution is evaluated at z != 0");
    }
    if mesh < MIN_MESH {
        return domain(format!("mesh must be at least {MIN_MESH}"));
    }
    let d = zs.len() as i32;
    let r1 = 2f64.powi(d - 4);
    let r2 = 2f64.powi(d - 2);
    let raw = |m: usize| midpoint_sum(&zs, m, 2);
    let first = |a: f64, b: f64| (r1 * b - a) / (r1 - 1.0);
    let second = |a: f64, b: f64| (r2 * b - a) / (r2 - 1.0);
    let mut m = mesh;
    let (mut s0, mut s1, mut s2) = (raw(m), raw(2 * m), raw(4 * m));
    let mut prev = second(first(s0, s1), first(s1, s2));
    while 8 * m <= MAX_MESH {
        m *= 2;
        (s0, s1, s2) = (s1, s2, raw(4 * m));
        let next = second(first(s0, s1), first(s1, s2));
        if converged(prev, next) {
            return Ok(Quadrature { value: next, mesh: 4 * m, change: (next - prev).abs() });
        }
        prev = next;
    }
    Err(Error::Accuracy(format!("Green convolution at {z} did not converge by mesh {MAX_MESH}")))
}

/// `G(0, w)` for every `w` with `|w_j| <= reach`, from one fixed mesh.
///
/// Values are indexed by the absolute coordinates and shared between all
/// sign and permutation images; used for brute-force convolution sums.
pub struct GreenTable {
    dim: usize,
    reach: usize,
    values: Vec<f64>,
}

impl GreenTable {
    pub fn new(dim: usize, reach: usize, mesh: usize) -> Result<GreenTable> {
        if dim < 5 {
            return domain("Green table needs d >= 5");
        }
        let side = reach + 1;
        let size = side
            .checked_pow(dim as u32)
            .filter(|&s| s <= 1 << 27)
            .ok_or_else(|| Error::Config("Green table too large".into()))?;
        let sch = Schwinger::new(mesh, 1);
        let table = factor_table(mesh, dim, &sch.t, reach);
        let mut values = vec![f64::NAN; size];
        let mut digits = vec![0usize; dim];
        for idx in 0..size {
            let mut r = idx;
            for j in (0..dim).rev() {
                digits[j] = r % side;
                r /= side;
            }
            // sorted representative carries the value for the whole class
            let mut sorted = digits.clone();
            sorted.sort_unstable();
            let rep = sorted.iter().fold(0, |acc, &c| acc * side + c);
            values[idx] = if rep < idx {
                values[rep]
            } else {
                table.iter().zip(&sch.weight).map(|(row, w)| w * sorted.iter().map(|&a| row[a]).product::<f64>()).sum()
            };
        }
        Ok(GreenTable { dim, reach, values })
    }

    pub fn reach(&self) -> usize {
        self.reach
    }

    /// `G(0, w)`; `None` outside the tabulated cube.
    pub fn get(&self, w: &[i64]) -> Option<f64> {
        debug_assert_eq!(w.len(), self.dim);
        let side = self.reach + 1;
        let mut idx = 0;
        for &c in w {
            let a = c.unsigned_abs() as usize;
            if a > self.reach {
                return None;
            }
            idx = idx * side + a;
        }
        Some(self.values[idx])
    }
}

/// `sum_{|w| <= radius} G(0,w) G(w,z)` over the Euclidean ball, with tabulated `G`.
pub fn truncated_convolution(table: &GreenTable, z: &[i64], radius: i64) -> Result<f64> {
    let dim = z.len();
    let zmax = z.iter().map(|c| c.abs()).max().unwrap_or(0);
    if (radius + zmax) as usize > table.reach() {
        return domain("table does not reach the truncated sum");
    }
    let mut w = vec![-radius; dim];
    let mut diff = vec![0i64; dim];
    let r2 = radius * radius;
    let mut total = 0.0;
    loop {
        if w.iter().map(|c| c * c).sum::<i64>() <= r2 {
            for j in 0..dim {
                diff[j] = w[j] - z[j];
            }
            total += table.get(&w).expect("inside table") * table.get(&diff).expect("inside table");
        }
        let mut j = dim;
        loop {
            if j == 0 {
                return Ok(total);
            }
            j -= 1;
            if w[j] < radius {
                w[j] += 1;
                break;
            }
            w[j] = -radius;
        }
    }
}
