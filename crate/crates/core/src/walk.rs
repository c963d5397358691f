//! Simple random walks, chronological loop erasure and Monte Carlo Green's functions.

use std::hash::Hash;

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rustc_hash::FxHashMap;

use crate::error::{config, domain, Result};
use crate::estimators::{EstimateWithError, MomentAccumulator};
use crate::graph::RootedGraph;
use crate::lattice::{BoxGeometry, Site, Vertex, MAX_DIM};
use crate::parallel;
use crate::rng::StreamFamily;

/// How a walk ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Terminal {
    /// The last vertex satisfies the target predicate.
    Hit,
    /// The walk was absorbed at the root without the root being a target.
    Escaped,
    /// The step cap was reached first.
    Capped,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkPath {
    pub vertices: Vec<Vertex>,
    pub terminal: Terminal,
}

impl WalkPath {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Incremental chronological loop erasure.
///
/// Pushing a vertex already on the current erased path truncates the path
/// back to that vertex's first occurrence; otherwise the vertex is appended.
/// After any prefix of a walk has been pushed, [`LoopEraser::path`] is the
/// loop erasure of that prefix.
#[derive(Clone, Debug)]
pub struct LoopEraser<K> {
    path: Vec<K>,
    index: FxHashMap<K, usize>,
}

impl<K: Copy + Eq + Hash> Default for LoopEraser<K> {
    fn default() -> Self {
        LoopEraser { path: Vec::new(), index: FxHashMap::default() }
    }
}

impl<K: Copy + Eq + Hash> LoopEraser<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.path.clear();
        self.index.clear();
    }

    #[inline]
    pub fn push(&mut self, key: K) {
        if let Some(&i) = self.index.get(&key) {
            for v in self.path.drain(i + 1..) {
                self.index.remove(&v);
            }
        } else {
            self.index.insert(key, self.path.len());
            self.path.push(key);
        }
    }

    #[inline]
    pub fn contains(&self, key: &K) -> bool {
        self.index.contains_key(key)
    }

    pub fn path(&self) -> &[K] {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }
}

/// Loop erasure of an arbitrary key sequence.
pub fn loop_erase_keys<K: Copy + Eq + Hash>(keys: &[K]) -> Vec<K> {
    let mut e = LoopEraser::new();
    for &k in keys {
        e.push(k);
    }
    e.path
}

/// Chronological loop erasure of a walk path; the terminal status is kept.
pub fn loop_erase(path: &WalkPath) -> Result<WalkPath> {
    if path.vertices.is_empty() {
        return domain("cannot loop-erase an empty path");
    }
    let mut ids: FxHashMap<&Vertex, usize> = FxHashMap::default();
    let keys: Vec<usize> = path
        .vertices
        .iter()
        .map(|v| {
            let next = ids.len();
            *ids.entry(v).or_insert(next)
        })
        .collect();
    let mut by_id = vec![None; ids.len()];
    for (v, i) in ids {
        by_id[i] = Some(v);
    }
    let vertices = loop_erase_keys(&keys)
        .into_iter()
        .map(|k| by_id[k].expect("every key was registered").clone())
        .collect();
    Ok(WalkPath { vertices, terminal: path.terminal })
}

/// Walks from `start` in the wired box until `target` accepts the current vertex.
///
/// Steps are uniform over the `2d` lattice directions. A step leaving the box
/// lands on the root, which absorbs the walk: the walk reports `Hit` if the
/// root is a target and `Escaped` otherwise. Reaching `cap` steps first gives
/// `Capped`.
pub fn run_until_hit<R: Rng + ?Sized>(
    start: &Site,
    target: impl Fn(&Vertex) -> bool,
    geom: &BoxGeometry,
    cap: u64,
    rng: &mut R,
) -> Result<WalkPath> {
    if cap == 0 {
        return config("step cap must be positive");
    }
    let start_index = geom.encode(start)?;
    let mut vertices = vec![Vertex::Site(start.clone())];
    if target(&vertices[0]) {
        return Ok(WalkPath { vertices, terminal: Terminal::Hit });
    }
    let dirs = Uniform::new(0, geom.degree(&geom.cursor(0)));
    let mut c = geom.cursor(start_index as usize);
    for _ in 0..cap {
        match geom.step(&c, dirs.sample(rng)) {
            None => {
                let terminal = if target(&Vertex::Root) { Terminal::Hit } else { Terminal::Escaped };
                vertices.push(Vertex::Root);
                return Ok(WalkPath { vertices, terminal });
            }
            Some(n) => {
                c = n;
                let v = Vertex::Site(Site::new(c.coords()[..geom.dim()].to_vec()));
                let hit = target(&v);
                vertices.push(v);
                if hit {
                    return Ok(WalkPath { vertices, terminal: Terminal::Hit });
                }
            }
        }
    }
    Ok(WalkPath { vertices, terminal: Terminal::Capped })
}

/// Simple random walk on the whole of Z^d, tracking plain coordinates.
#[derive(Clone, Debug)]
pub(crate) struct FreeWalker {
    pub coords: [i32; MAX_DIM],
    dirs: Uniform<usize>,
}

impl FreeWalker {
    pub fn new(dim: usize) -> Self {
        FreeWalker { coords: [0; MAX_DIM], dirs: Uniform::new(0, 2 * dim) }
    }

    pub fn reset(&mut self) {
        self.coords = [0; MAX_DIM];
    }

    /// Takes one step and returns the slot taken.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let slot = self.dirs.sample(rng);
        self.coords[slot >> 1] += if slot & 1 == 0 { 1 } else { -1 };
        slot
    }
}

/// Default walk truncation for Green's function estimates: `max(10^6, 100 |x|^2)` steps.
pub fn default_green_cap(x: &Site) -> u64 {
    (100.0 * x.norm_sq()).ceil().max(1e6) as u64
}

/// Monte Carlo visit counts for one target.
#[derive(Clone, Debug)]
pub struct GreenMcEstimate {
    pub target: Site,
    /// Mean number of visits at times `0..=cap` (time 0 counts for the origin).
    pub visits: EstimateWithError,
    /// Mean number of visits at times `cap+1..=2 cap`, when requested.
    pub tail_visits: Option<EstimateWithError>,
}

#[derive(Clone, Debug)]
pub struct GreenMcSummary {
    pub estimates: Vec<GreenMcEstimate>,
    /// Fraction of walks that come back to the origin within the cap.
    pub return_frequency: EstimateWithError,
    pub cap: u64,
    pub walks: u64,
}

impl GreenMcSummary {
    /// `1 / (1 - f)` with `f` the return frequency: a second route to `G(0,0)`.
    pub fn origin_from_returns(&self) -> EstimateWithError {
        let f = self.return_frequency.value;
        let value = 1.0 / (1.0 - f);
        EstimateWithError::new(value, self.return_frequency.stderr * value * value, self.walks)
    }
}

#[derive(Clone, Debug)]
struct GreenShard {
    visits: Vec<MomentAccumulator>,
    tail: Vec<MomentAccumulator>,
    returns: u64,
}

/// Estimates `G(0, x)` for several targets from one set of walks started at the origin.
pub fn green_mc_many(
    targets: &[Site],
    n_samples: u64,
    cap: u64,
    measure_tail: bool,
    family: &StreamFamily,
) -> Result<GreenMcSummary> {
    let Some(first) = targets.first() else {
        return config("no Green's function targets");
    };
    let dim = first.dim();
    if dim < 5 {
        return config(format!("Green's function walks need d >= 5, got {dim}"));
    }
    if targets.iter().any(|t| t.dim() != dim) {
        return domain("targets of mixed dimension");
    }
    if n_samples == 0 || cap == 0 {
        return config("sample count and step cap must be positive");
    }
    let packed: Vec<[i32; MAX_DIM]> = targets
        .iter()
        .map(|t| {
            let mut c = [0; MAX_DIM];
            c[..dim].copy_from_slice(t.coords());
            c
        })
        .collect();
    let reach = targets.iter().map(|t| t.coords().iter().map(|c| c.abs()).sum::<i32>()).max().unwrap_or(0);
    let horizon = if measure_tail { 2 * cap } else { cap };

    let shards = parallel::map_shards(n_samples, |range| {
        let mut shard = GreenShard {
            visits: vec![MomentAccumulator::new(); targets.len()],
            tail: vec![MomentAccumulator::new(); targets.len()],
            returns: 0,
        };
        let mut walker = FreeWalker::new(dim);
        let mut counts = vec![0u64; targets.len()];
        let mut tail = vec![0u64; targets.len()];
        for sample in range {
            let mut rng = family.rng(sample);
            walker.reset();
            counts.iter_mut().for_each(|c| *c = 0);
            tail.iter_mut().for_each(|c| *c = 0);
            let mut l1: i32 = 0;
            let mut returned = false;
            for t in 0..=horizon {
                if t > 0 {
                    let slot = walker.step(&mut rng);
                    let moved = walker.coords[slot >> 1];
                    let grew = if slot & 1 == 0 { moved > 0 } else { moved < 0 };
                    l1 += if grew { 1 } else { -1 };
                    if l1 == 0 && t <= cap {
                        returned = true;
                    }
                }
                if l1 <= reach {
                    for (k, p) in packed.iter().enumerate() {
                        if walker.coords == *p {
                            if t <= cap {
                                counts[k] += 1;
                            } else {
                                tail[k] += 1;
                            }
                        }
                    }
                }
            }
            for k in 0..targets.len() {
                shard.visits[k].push(counts[k] as f64);
                shard.tail[k].push(tail[k] as f64);
            }
            shard.returns += returned as u64;
        }
        shard
    });

    let mut visits = vec![MomentAccumulator::new(); targets.len()];
    let mut tails = vec![MomentAccumulator::new(); targets.len()];
    let mut returns = 0;
    for s in shards {
        for k in 0..targets.len() {
            visits[k].merge(&s.visits[k]);
            tails[k].merge(&s.tail[k]);
        }
        returns += s.returns;
    }
    let estimates = targets
        .iter()
        .enumerate()
        .map(|(k, t)| GreenMcEstimate {
            target: t.clone(),
            visits: visits[k].mean_estimate(),
            tail_visits: measure_tail.then(|| tails[k].mean_estimate()),
        })
        .collect();
    Ok(GreenMcSummary {
        estimates,
        return_frequency: EstimateWithError::bernoulli(returns, n_samples),
        cap,
        walks: n_samples,
    })
}

/// Estimates `G(0, x)` as the mean number of visits to `x` by a walk from the origin.
pub fn green_mc(x: &Site, n_samples: u64, cap: u64, family: &StreamFamily) -> Result<GreenMcEstimate> {
    let mut s = green_mc_many(std::slice::from_ref(x), n_samples, cap, false, family)?;
    Ok(s.estimates.remove(0))
}
