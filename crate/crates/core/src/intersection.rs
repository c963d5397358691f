//! The three-walk non-intersection constant `q` and the resulting pair-correlation prediction.

use rand::Rng;
use rustc_hash::FxHashSet;

use crate::error::{config, Result};
use crate::estimators::EstimateWithError;
use crate::parallel;
use crate::rng::StreamFamily;
use crate::walk::{loop_erase_keys, FreeWalker};

/// Truncation of the walks entering `q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripleWalkConfig {
    pub dim: usize,
    /// Walks are followed until they first leave the Euclidean ball of this radius.
    pub trunc_radius: f64,
    /// Safety limit on the steps of any single walk.
    pub step_cap: u64,
}

impl TripleWalkConfig {
    /// Radius `R` with the minimal cap `100 R^2`.
    pub fn new(dim: usize, trunc_radius: f64) -> Result<Self> {
        Self::with_cap(dim, trunc_radius, (100.0 * trunc_radius * trunc_radius).ceil() as u64)
    }

    pub fn with_cap(dim: usize, trunc_radius: f64, step_cap: u64) -> Result<Self> {
        if dim < 5 {
            return config(format!("q is defined for d >= 5, got {dim}"));
        }
        if !(trunc_radius >= 10.0) {
            return config(format!("truncation radius must be at least 10, got {trunc_radius}"));
        }
        if (step_cap as f64) < 100.0 * trunc_radius * trunc_radius {
            return config("step cap must be at least 100 R^2");
        }
        let bits = 64 / dim as u32;
        if trunc_radius + 2.0 >= (1u64 << (bits - 1)) as f64 {
            return config(format!("radius {trunc_radius} too large to pack {dim} coordinates"));
        }
        Ok(TripleWalkConfig { dim, trunc_radius, step_cap })
    }

    fn bits(&self) -> u32 {
        64 / self.dim as u32
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QEstimate {
    pub radius: f64,
    /// Mean of the displayed non-intersection indicator over usable samples.
    pub q: EstimateWithError,
    /// Same event with the third walk's full range instead of its loop erasure.
    pub q_unerased_third: EstimateWithError,
    /// Samples dropped because a walk hit the step cap inside the ball.
    pub excluded: u64,
}

fn pack(coords: &[i32], bits: u32) -> u64 {
    let offset = 1i64 << (bits - 1);
    coords.iter().fold(0u64, |acc, &c| (acc << bits) | (c as i64 + offset) as u64)
}

/// Packed sites of a walk from the origin up to (not including) its first exit from the ball.
///
/// Returns `false` when the step cap is reached first.
pub fn truncated_walk<R: Rng + ?Sized>(cfg: &TripleWalkConfig, rng: &mut R, out: &mut Vec<u64>) -> bool {
    out.clear();
    let bits = cfg.bits();
    let r2 = cfg.trunc_radius * cfg.trunc_radius;
    let mut w = FreeWalker::new(cfg.dim);
    let mut norm2: i64 = 0;
    out.push(pack(&w.coords[..cfg.dim], bits));
    for _ in 0..cfg.step_cap {
        let slot = w.step(rng);
        let c = w.coords[slot >> 1] as i64;
        // |x +- e_j|^2 = |x|^2 +- 2 x_j + 1 in terms of the updated coordinate
        norm2 += if slot & 1 == 0 { 2 * c - 1 } else { -2 * c - 1 };
        if norm2 as f64 > r2 {
            return true;
        }
        out.push(pack(&w.coords[..cfg.dim], bits));
    }
    false
}

#[derive(Default)]
struct Scratch {
    s1: Vec<u64>,
    s2: Vec<u64>,
    s3: Vec<u64>,
    erased1: FxHashSet<u64>,
    erased3: FxHashSet<u64>,
    range3: FxHashSet<u64>,
}

/// Outcome of one triple: (displayed event, event with unerased third walk), `None` if capped.
fn triple<R: Rng + ?Sized>(cfg: &TripleWalkConfig, rng: &mut R, sc: &mut Scratch) -> Option<(bool, bool)> {
    let ok = truncated_walk(cfg, rng, &mut sc.s1) & truncated_walk(cfg, rng, &mut sc.s2) & truncated_walk(cfg, rng, &mut sc.s3);
    if !ok {
        return None;
    }
    sc.erased1.clear();
    sc.erased1.extend(loop_erase_keys(&sc.s1));
    if sc.s3[1..].iter().any(|k| sc.erased1.contains(k)) {
        return Some((false, false));
    }
    sc.erased3.clear();
    sc.erased3.extend(loop_erase_keys(&sc.s3));
    sc.range3.clear();
    sc.range3.extend(sc.s3.iter().copied());
    let mut erased = true;
    let mut unerased = true;
    for k in &sc.s2[1..] {
        if sc.erased1.contains(k) {
            return Some((false, false));
        }
        erased &= !sc.erased3.contains(k);
        unerased &= !sc.range3.contains(k);
        if !erased && !unerased {
            break;
        }
    }
    Some((erased, unerased))
}

/// Monte Carlo estimate of `q` at one truncation radius.
///
/// Three independent walks `S1, S2, S3` start at the origin. A sample counts
/// when the loop erasure of `S1` misses `S3[1, .)` and `S2[1, .)` misses
/// both the loop erasure of `S1` and the loop erasure of `S3`.
pub fn estimate_q(cfg: &TripleWalkConfig, n_samples: u64, family: &StreamFamily) -> Result<QEstimate> {
    if n_samples == 0 {
        return config("sample count must be positive");
    }
    let shards = parallel::map_shards_with(n_samples, Scratch::default, |sc, range| {
        let (mut used, mut hits, mut hits_unerased) = (0u64, 0u64, 0u64);
        for s in range {
            if let Some((a, b)) = triple(cfg, &mut family.rng(s), sc) {
                used += 1;
                hits += a as u64;
                hits_unerased += b as u64;
            }
        }
        (used, hits, hits_unerased)
    });
    let (used, hits, hits_unerased) = shards.into_iter().fold((0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    if used == 0 {
        return Err(crate::Error::Compute("every triple hit the step cap".into()));
    }
    Ok(QEstimate {
        radius: cfg.trunc_radius,
        q: EstimateWithError::bernoulli(hits, used),
        q_unerased_third: EstimateWithError::bernoulli(hits_unerased, used),
        excluded: n_samples - used,
    })
}

/// `q * sum_w G(0,w) G(w,z)`, the predicted same-component probability of `0` and `z`.
pub fn predict_pair_correlation(q_hat: &EstimateWithError, convolution: f64) -> EstimateWithError {
    q_hat.scaled(convolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Site, Vertex};
    use crate::walk::{loop_erase, Terminal, WalkPath};

    fn unpack(k: u64, dim: usize) -> Vec<i32> {
        let bits = 64 / dim as u32;
        let offset = 1i64 << (bits - 1);
        (0..dim).rev().map(|j| (((k >> (j as u32 * bits)) & ((1 << bits) - 1)) as i64 - offset) as i32).collect()
    }

    #[test]
    fn config_validation() {
        assert!(TripleWalkConfig::new(5, 9.0).is_err());
        assert!(TripleWalkConfig::new(4, 20.0).is_err());
        assert!(TripleWalkConfig::with_cap(5, 20.0, 100).is_err());
        assert!(TripleWalkConfig::new(5, 3000.0).is_err());
        assert_eq!(TripleWalkConfig::new(5, 10.0).unwrap().step_cap, 10_000);
    }

    #[test]
    fn walks_stay_in_ball_and_use_unit_steps() {
        let cfg = TripleWalkConfig::new(5, 12.0).unwrap();
        let mut rng = crate::rng::RngStream::new(1, 0).rng();
        let mut w = Vec::new();
        assert!(truncated_walk(&cfg, &mut rng, &mut w));
        let sites: Vec<Vec<i32>> = w.iter().map(|&k| unpack(k, 5)).collect();
        assert_eq!(sites[0], vec![0; 5]);
        for s in &sites {
            assert!(s.iter().map(|c| (c * c) as f64).sum::<f64>() <= 144.0);
        }
        for p in sites.windows(2) {
            let l1: i32 = p[0].iter().zip(&p[1]).map(|(a, b)| (a - b).abs()).sum();
            assert_eq!(l1, 1);
        }
    }

    #[test]
    fn erasure_inside_estimator_matches_loop_erase() {
        let cfg = TripleWalkConfig::new(5, 10.0).unwrap();
        let mut w = Vec::new();
        for s in 0..20 {
            let mut rng = crate::rng::RngStream::new(2, s).rng();
            truncated_walk(&cfg, &mut rng, &mut w);
            let path = WalkPath {
                vertices: w.iter().map(|&k| Vertex::Site(Site::new(unpack(k, 5)))).collect(),
                terminal: Terminal::Escaped,
            };
            let expected: Vec<u64> = loop_erase(&path)
                .unwrap()
                .vertices
                .iter()
                .map(|v| match v {
                    Vertex::Site(s) => pack(s.coords(), 12),
                    Vertex::Root => unreachable!(),
                })
                .collect();
            assert_eq!(loop_erase_keys(&w), expected);
        }
    }

    #[test]
    fn q_is_nondegenerate_and_reproducible() {
        let cfg = TripleWalkConfig::new(5, 10.0).unwrap();
        let f = StreamFamily::new(3, 7);
        let a = estimate_q(&cfg, 4000, &f).unwrap();
        assert!(a.q.value > 0.0 && a.q.value < 1.0);
        assert_eq!(a.excluded, 0);
        assert!(a.q_unerased_third.value <= a.q.value);
        let b = estimate_q(&cfg, 4000, &f).unwrap();
        assert_eq!(a.q.value.to_bits(), b.q.value.to_bits());
        let capped = estimate_q(&TripleWalkConfig { step_cap: 5, ..cfg }, 50, &f);
        assert!(capped.is_err());
    }

    #[test]
    fn prediction_calibration() {
        let z = 7f64;
        let p = predict_pair_correlation(&EstimateWithError::new(1.0, 0.0, 1), z.powi(-1));
        assert_eq!(p.value, 1.0 / 7.0);
    }
}
