use super::moments::EstimateWithError;
use crate::error::{config, domain, Result};
use crate::forest::{same_tree_prefix, two_point_same_tree, SparseWilson};
use crate::graph::RootedGraph;
use crate::lattice::{BoxGeometry, Site};
use crate::parallel;
use crate::rng::StreamFamily;

/// Probability that vertices `x` and `y` of `g` share a component, from `n` independent forests.
pub fn estimate_same_tree<G: RootedGraph + Sync>(
    g: &G,
    x: usize,
    y: usize,
    n_samples: u64,
    family: &StreamFamily,
) -> Result<EstimateWithError> {
    if n_samples == 0 {
        return config("sample count must be positive");
    }
    let hits = parallel::try_map_shards_with(n_samples, SparseWilson::new, |sw, range| {
        let mut k = 0u64;
        for s in range {
            k += two_point_same_tree(g, x, y, sw, &mut family.rng(s))? as u64;
        }
        Ok(k)
    })?;
    Ok(EstimateWithError::bernoulli(hits.into_iter().sum(), n_samples))
}

/// `p(0, z)` on the wired box.
///
/// The finite-size guard requires `|z| <= L / 2`. The same site gives `p = 1` exactly.
pub fn estimate_pair_correlation(
    geom: &BoxGeometry,
    z: &Site,
    n_samples: u64,
    family: &StreamFamily,
) -> Result<EstimateWithError> {
    if z.dim() != geom.dim() {
        return domain(format!("site {z} has the wrong dimension"));
    }
    if z.norm() > geom.half_width() as f64 / 2.0 {
        return config(format!("|z| = {:.3} exceeds half of L = {}", z.norm(), geom.half_width()));
    }
    if z.is_origin() {
        return Ok(EstimateWithError::new(1.0, 0.0, n_samples));
    }
    let o = geom.encode(&Site::origin(geom.dim()))? as usize;
    let t = geom.encode(z)? as usize;
    estimate_same_tree(geom, o, t, n_samples, family)
}

/// The plateau statistic `p(0,z) |z|^{d-4}`.
pub fn rescaled_correlation(z: &Site, p_hat: &EstimateWithError) -> Result<EstimateWithError> {
    if z.is_origin() {
        return domain("rescaled correlation needs z != 0");
    }
    Ok(p_hat.scaled(z.norm().powi(z.dim() as i32 - 4)))
}

#[derive(Clone, Copy, Debug)]
pub struct MultiPointEstimate {
    /// All points in one component.
    pub all: EstimateWithError,
    /// The first two points in one component.
    pub first_pair: EstimateWithError,
}

/// Same-component probability for several vertices of an arbitrary rooted graph.
pub fn multi_point_same_tree_graph<G: RootedGraph + Sync>(
    g: &G,
    points: &[usize],
    n_samples: u64,
    family: &StreamFamily,
) -> Result<MultiPointEstimate> {
    if points.len() < 2 {
        return config("need at least two points");
    }
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) || sorted.last().is_some_and(|&p| p >= g.vertex_count()) {
        return domain("points must be distinct internal vertices");
    }
    if n_samples == 0 {
        return config("sample count must be positive");
    }
    let counts = parallel::try_map_shards_with(n_samples, SparseWilson::new, |sw, range| {
        let (mut all, mut pair) = (0u64, 0u64);
        for s in range {
            let k = same_tree_prefix(g, points, sw, &mut family.rng(s))?;
            all += (k == points.len()) as u64;
            pair += (k >= 2) as u64;
        }
        Ok((all, pair))
    })?;
    let (all, pair) = counts.into_iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(MultiPointEstimate {
        all: EstimateWithError::bernoulli(all, n_samples),
        first_pair: EstimateWithError::bernoulli(pair, n_samples),
    })
}

/// Probability that `2l >= 4` box sites all lie in one component.
pub fn multi_point_same_tree(
    geom: &BoxGeometry,
    points: &[Site],
    n_samples: u64,
    family: &StreamFamily,
) -> Result<MultiPointEstimate> {
    if points.len() < 4 || points.len() % 2 != 0 {
        return config(format!("need an even number of at least 4 points, got {}", points.len()));
    }
    let idx: Vec<usize> = points.iter().map(|p| geom.encode(p).map(|i| i as usize)).collect::<Result<_>>()?;
    multi_point_same_tree_graph(geom, &idx, n_samples, family)
}
