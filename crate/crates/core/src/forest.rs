//! Wilson's algorithm on rooted graphs, forests and their components.

use std::io::Write;

use rand::Rng;
use rustc_hash::FxHashMap;

use crate::error::{config, domain, Error, Result};
use crate::graph::RootedGraph;
use crate::lattice::{BoxGeometry, Site};
use crate::walk::LoopEraser;

/// Parent value marking an edge to the root.
pub const ROOT: u32 = u32::MAX;

/// Total random-walk steps allowed while building one forest.
pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000_000;

/// A spanning tree of a rooted graph stored as parent pointers.
///
/// `parent[v]` is the next vertex on the way to the root (or [`ROOT`]) and
/// `slot[v]` is the edge slot of `v` used to get there, which pins down the
/// edge even in graphs with parallel edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Forest {
    parent: Vec<u32>,
    slot: Vec<u16>,
}

impl Forest {
    pub fn from_slots<G: RootedGraph>(g: &G, slot: Vec<u16>) -> Result<Forest> {
        if slot.len() != g.vertex_count() {
            return domain("slot table does not match the graph");
        }
        let parent = slot
            .iter()
            .enumerate()
            .map(|(v, &s)| g.endpoint(v, s as usize).map_or(ROOT, |p| p as u32))
            .collect();
        let f = Forest { parent, slot };
        f.validate(g)?;
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Parent of `v`, `None` for the root.
    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v];
        (p != ROOT).then_some(p as usize)
    }

    pub fn slot(&self, v: usize) -> usize {
        self.slot[v] as usize
    }

    pub fn parents(&self) -> &[u32] {
        &self.parent
    }

    /// Checks edge validity, absence of cycles and that every vertex reaches the root.
    pub fn validate<G: RootedGraph>(&self, g: &G) -> Result<()> {
        let n = g.vertex_count();
        if self.parent.len() != n {
            return Err(Error::Compute(format!("forest has {} vertices, graph {n}", self.parent.len())));
        }
        for v in 0..n {
            let c = g.cursor(v);
            if self.slot[v] as usize >= g.degree(&c) {
                return Err(Error::Compute(format!("vertex {v} uses missing slot {}", self.slot[v])));
            }
            let end = g.step(&c, self.slot[v] as usize).map_or(ROOT, |e| g.vertex(&e) as u32);
            if end != self.parent[v] {
                return Err(Error::Compute(format!("vertex {v}: parent is not the slot endpoint")));
            }
        }
        // 0 unknown, 1 on the current chain, 2 known to reach the root
        let mut state = vec![0u8; n];
        let mut chain = Vec::new();
        for v in 0..n {
            let mut u = v;
            while state[u] == 0 {
                state[u] = 1;
                chain.push(u);
                match self.parent(u) {
                    Some(p) => u = p,
                    None => break,
                }
            }
            if state[u] == 1 && self.parent(u).is_some() {
                return Err(Error::Compute(format!("cycle through vertex {u}")));
            }
            for w in chain.drain(..) {
                state[w] = 2;
            }
        }
        Ok(())
    }

    /// Writes `site_index,parent_index` rows, with `-1` for the root.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "site_index,parent_index")?;
        for (v, &p) in self.parent.iter().enumerate() {
            if p == ROOT {
                writeln!(out, "{v},-1")?;
            } else {
                writeln!(out, "{v},{p}")?;
            }
        }
        Ok(())
    }
}

/// Component ids of a set of sites after the root is removed from the tree.
///
/// `sites` is sorted; `labels[i]` belongs to `sites[i]`. Ids run over
/// `0..count` in order of first appearance along `sites`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabels {
    sites: Vec<u64>,
    labels: Vec<u32>,
    count: usize,
}

impl ComponentLabels {
    /// Relabels raw component keys in discovery order.
    pub fn from_keys(sites: Vec<u64>, keys: &[u32]) -> Result<ComponentLabels> {
        if sites.len() != keys.len() {
            return domain("sites and component keys differ in length");
        }
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return domain("component sites must be strictly increasing");
        }
        let mut ids: FxHashMap<u32, u32> = FxHashMap::default();
        let labels = keys
            .iter()
            .map(|k| {
                let next = ids.len() as u32;
                *ids.entry(*k).or_insert(next)
            })
            .collect();
        Ok(ComponentLabels { sites, labels, count: ids.len() })
    }

    pub fn sites(&self) -> &[u64] {
        &self.sites
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn label_of(&self, site: u64) -> Option<u32> {
        self.sites.binary_search(&site).ok().map(|i| self.labels[i])
    }
}

/// Labels every vertex by the subtree of the root it hangs from.
pub fn components_minus_root(forest: &Forest) -> ComponentLabels {
    let n = forest.len();
    let mut top = vec![ROOT; n];
    let mut chain = Vec::new();
    for v in 0..n {
        let mut u = v;
        while top[u] == ROOT {
            chain.push(u);
            match forest.parent(u) {
                Some(p) => u = p,
                None => {
                    top[u] = u as u32;
                    break;
                }
            }
        }
        let t = top[u];
        for w in chain.drain(..) {
            top[w] = t;
        }
    }
    ComponentLabels::from_keys((0..n as u64).collect(), &top).expect("indices are increasing")
}

/// Wilson's algorithm with dense per-vertex state.
///
/// Walks record their last exit slot at every visited vertex; following those
/// slots from the start vertex retraces exactly the loop erasure. Vertex state
/// is stamped with a generation counter so one sampler can be reused for
/// many independent forests without clearing its arrays.
pub struct WilsonSampler<'g, G: RootedGraph> {
    g: &'g G,
    stamp: Vec<u32>,
    generation: u32,
    next: Vec<u16>,
    top: Vec<u32>,
    path: Vec<usize>,
    steps: u64,
    budget: u64,
}

impl<'g, G: RootedGraph> WilsonSampler<'g, G> {
    pub fn new(g: &'g G) -> Self {
        let n = g.vertex_count();
        WilsonSampler {
            g,
            stamp: vec![0; n],
            generation: 1,
            next: vec![0; n],
            top: vec![0; n],
            path: Vec::new(),
            steps: 0,
            budget: DEFAULT_STEP_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Starts a new forest containing only the root.
    pub fn reset(&mut self) {
        if self.generation == u32::MAX {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 0;
        }
        self.generation += 1;
        self.steps = 0;
    }

    #[inline]
    pub fn in_tree(&self, v: usize) -> bool {
        self.stamp[v] == self.generation
    }

    /// Root child above `v`, a representative of its component.
    pub fn top(&self, v: usize) -> Option<u32> {
        self.in_tree(v).then(|| self.top[v])
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Adds the loop-erased branch from `start` to the current forest.
    pub fn grow<R: Rng + ?Sized>(&mut self, start: usize, rng: &mut R) -> Result<()> {
        if self.in_tree(start) {
            return Ok(());
        }
        let g = self.g;
        let mut c = g.cursor(start);
        let mut u = start;
        loop {
            let slot = rng.gen_range(0..g.degree(&c));
            self.next[u] = slot as u16;
            self.steps += 1;
            if self.steps > self.budget {
                return Err(Error::Budget { count: format!("walk steps from vertex {start}"), budget: self.budget });
            }
            match g.step(&c, slot) {
                None => break,
                Some(n) => {
                    u = g.vertex(&n);
                    if self.in_tree(u) {
                        break;
                    }
                    c = n;
                }
            }
        }
        self.path.clear();
        let mut c = g.cursor(start);
        let mut u = start;
        let top = loop {
            self.path.push(u);
            self.stamp[u] = self.generation;
            match g.step(&c, self.next[u] as usize) {
                None => break u as u32,
                Some(n) => {
                    let w = g.vertex(&n);
                    if self.in_tree(w) {
                        break self.top[w];
                    }
                    c = n;
                    u = w;
                }
            }
        };
        for &p in &self.path {
            self.top[p] = top;
        }
        Ok(())
    }

    /// Grows branches from `ordering` and returns the complete forest.
    pub fn sample<R: Rng + ?Sized>(&mut self, ordering: &[usize], rng: &mut R) -> Result<Forest> {
        check_ordering(ordering, self.g.vertex_count())?;
        self.reset();
        for &v in ordering {
            self.grow(v, rng)?;
        }
        Forest::from_slots(self.g, self.next.clone())
    }

    /// Component labels of `sites` in the current (possibly partial) forest.
    pub fn labels(&self, sites: &[usize]) -> Result<ComponentLabels> {
        let mut keys = Vec::with_capacity(sites.len());
        for &s in sites {
            keys.push(self.top(s).ok_or_else(|| Error::Domain(format!("vertex {s} is not in the forest")))?);
        }
        ComponentLabels::from_keys(sites.iter().map(|&s| s as u64).collect(), &keys)
    }
}

fn check_ordering(ordering: &[usize], n: usize) -> Result<()> {
    if ordering.len() != n {
        return config(format!("ordering lists {} vertices, graph has {n}", ordering.len()));
    }
    let mut seen = vec![false; n];
    for &v in ordering {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return config(format!("ordering is not a permutation (vertex {v})"));
        }
    }
    Ok(())
}

/// A uniform spanning tree of `g` by Wilson's algorithm with the given vertex ordering.
pub fn wilson<G: RootedGraph, R: Rng + ?Sized>(g: &G, ordering: &[usize], rng: &mut R) -> Result<Forest> {
    WilsonSampler::new(g).sample(ordering, rng)
}

/// Wilson's algorithm on the wired box; `None` uses encoding order.
pub fn wilson_wired_box<R: Rng + ?Sized>(geom: &BoxGeometry, ordering: Option<&[Site]>, rng: &mut R) -> Result<Forest> {
    let order: Vec<usize> = match ordering {
        Some(sites) => sites.iter().map(|s| geom.encode(s).map(|i| i as usize)).collect::<Result<_>>()?,
        None => (0..geom.site_count() as usize).collect(),
    };
    wilson(geom, &order, rng)
}

/// Wilson's algorithm restricted to the branches from a few start vertices.
///
/// Only visited vertices are stored, so the graph may be far larger than
/// memory. Each call to [`SparseWilson::attach`] adds one branch and reports
/// the component it joined; components are numbered in creation order.
pub struct SparseWilson {
    labels: FxHashMap<usize, u32>,
    eraser: LoopEraser<usize>,
    components: u32,
    steps: u64,
    budget: u64,
}

impl Default for SparseWilson {
    fn default() -> Self {
        SparseWilson {
            labels: FxHashMap::default(),
            eraser: LoopEraser::new(),
            components: 0,
            steps: 0,
            budget: DEFAULT_STEP_BUDGET,
        }
    }
}

impl SparseWilson {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        self.labels.clear();
        self.eraser.clear();
        self.components = 0;
        self.steps = 0;
    }

    /// Runs a walk from `start` until it meets the forest or the root.
    ///
    /// With `keep` the loop-erased branch joins the forest; without it the
    /// walk only reports where it would attach, which is all the last
    /// branch of a query needs.
    pub fn attach<G: RootedGraph, R: Rng + ?Sized>(
        &mut self,
        g: &G,
        start: usize,
        keep: bool,
        rng: &mut R,
    ) -> Result<u32> {
        if let Some(&l) = self.labels.get(&start) {
            return Ok(l);
        }
        self.eraser.clear();
        let mut c = g.cursor(start);
        if keep {
            self.eraser.push(start);
        }
        let hit = loop {
            self.steps += 1;
            if self.steps > self.budget {
                return Err(Error::Budget { count: format!("walk steps from vertex {start}"), budget: self.budget });
            }
            match g.step(&c, rng.gen_range(0..g.degree(&c))) {
                None => break None,
                Some(n) => {
                    let v = g.vertex(&n);
                    if let Some(&l) = self.labels.get(&v) {
                        break Some(l);
                    }
                    if keep {
                        self.eraser.push(v);
                    }
                    c = n;
                }
            }
        };
        let label = hit.unwrap_or_else(|| {
            self.components += 1;
            self.components - 1
        });
        if keep {
            for &v in self.eraser.path() {
                self.labels.insert(v, label);
            }
        }
        Ok(label)
    }

    /// The loop-erased path of the most recent kept branch.
    pub fn last_branch(&self) -> &[usize] {
        self.eraser.path()
    }
}

/// One draw of the event that `x` and `y` lie in the same component.
///
/// Wilson's algorithm with ordering `(x, y, ...)`: the branch from `x` runs
/// to the root, then a walk from `y` runs until it meets that branch or the
/// root. The pair shares a component iff the branch is met first.
pub fn two_point_same_tree<G: RootedGraph, R: Rng + ?Sized>(
    g: &G,
    x: usize,
    y: usize,
    scratch: &mut SparseWilson,
    rng: &mut R,
) -> Result<bool> {
    if x == y {
        return Ok(true);
    }
    scratch.reset();
    let a = scratch.attach(g, x, true, rng)?;
    let b = scratch.attach(g, y, false, rng)?;
    Ok(a == b)
}

/// [`two_point_same_tree`] on a wired box addressed by sites.
pub fn two_point_same_tree_sites<R: Rng + ?Sized>(
    geom: &BoxGeometry,
    x: &Site,
    y: &Site,
    scratch: &mut SparseWilson,
    rng: &mut R,
) -> Result<bool> {
    let (a, b) = (geom.encode(x)? as usize, geom.encode(y)? as usize);
    two_point_same_tree(geom, a, b, scratch, rng)
}

/// Sequential Wilson branches from `points`; returns how many leading points share the first one's component.
///
/// The construction stops as soon as a point lands elsewhere, so the result
/// equals `points.len()` exactly when all points share one component.
pub fn same_tree_prefix<G: RootedGraph, R: Rng + ?Sized>(
    g: &G,
    points: &[usize],
    scratch: &mut SparseWilson,
    rng: &mut R,
) -> Result<usize> {
    scratch.reset();
    let Some((&first, rest)) = points.split_first() else {
        return Ok(0);
    };
    let label = scratch.attach(g, first, true, rng)?;
    for (i, &p) in rest.iter().enumerate() {
        let last = i + 1 == rest.len();
        if scratch.attach(g, p, !last, rng)? != label {
            return Ok(i + 1);
        }
    }
    Ok(points.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn star(n: usize) -> Forest {
        Forest { parent: vec![ROOT; n], slot: vec![0; n] }
    }

    /// Independent labelling: union-find over non-root forest edges.
    fn union_find_labels(f: &Forest) -> Vec<usize> {
        let n = f.len();
        let mut up: Vec<usize> = (0..n).collect();
        fn find(up: &mut [usize], mut a: usize) -> usize {
            while up[a] != a {
                up[a] = up[up[a]];
                a = up[a];
            }
            a
        }
        for v in 0..n {
            if let Some(p) = f.parent(v) {
                let (a, b) = (find(&mut up, v), find(&mut up, p));
                up[a] = b;
            }
        }
        (0..n).map(|v| find(&mut up, v)).collect()
    }

    #[test]
    fn star_and_path_components() {
        let s = components_minus_root(&star(7));
        assert_eq!(s.count(), 7);
        assert_eq!(s.labels(), &[0, 1, 2, 3, 4, 5, 6]);
        let path = Forest { parent: vec![1, 2, 3, ROOT], slot: vec![0; 4] };
        let p = components_minus_root(&path);
        assert_eq!(p.count(), 1);
        assert!(p.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn single_site_box_is_one_root_edge() {
        let g = BoxGeometry::new(5, 0).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        let f = wilson_wired_box(&g, None, &mut rng).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.parent(0), None);
        assert_eq!(components_minus_root(&f).count(), 1);
    }

    #[test]
    fn box_forests_are_valid_and_labels_match_union_find() {
        let g = BoxGeometry::new(5, 2).unwrap();
        let mut sampler = WilsonSampler::new(&g);
        let order: Vec<usize> = (0..g.site_count() as usize).collect();
        for s in 0..5 {
            let mut rng = RngStream::new(9, s).rng();
            let f = sampler.sample(&order, &mut rng).unwrap();
            f.validate(&g).unwrap();
            let labels = components_minus_root(&f);
            let uf = union_find_labels(&f);
            for a in (0..f.len()).step_by(37) {
                for b in (0..f.len()).step_by(41) {
                    assert_eq!(labels.labels()[a] == labels.labels()[b], uf[a] == uf[b]);
                }
            }
            assert_eq!(labels.labels().iter().max().map(|&m| m as usize + 1), Some(labels.count()));
            // sampler tops induce the same partition
            let tops = sampler.labels(&order).unwrap();
            assert_eq!(tops, labels);
        }
    }

    #[test]
    fn validate_rejects_cycles_and_bad_edges() {
        let g = BoxGeometry::new(2, 1).unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        let f = wilson_wired_box(&g, None, &mut rng).unwrap();
        let center = g.encode(&Site::origin(2)).unwrap() as usize;
        let right = g.encode(&Site::new(vec![1, 0])).unwrap() as usize;
        let mut bad = f.clone();
        bad.parent[center] = right as u32;
        bad.slot[center] = 0;
        bad.parent[right] = center as u32;
        bad.slot[right] = 1;
        assert!(bad.validate(&g).is_err());
        let mut wrong = f.clone();
        wrong.parent[center] = 0;
        assert!(wrong.validate(&g).is_err());
    }

    #[test]
    fn ordering_must_be_a_permutation() {
        let g = BoxGeometry::new(2, 1).unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        assert!(wilson(&g, &[0, 1, 2], &mut rng).is_err());
        assert!(wilson(&g, &[0, 0, 1, 2, 3, 4, 5, 6, 7], &mut rng).is_err());
        let sites: Vec<Site> = (0..9).rev().map(|i| g.decode(i).unwrap()).collect();
        wilson_wired_box(&g, Some(&sites), &mut rng).unwrap().validate(&g).unwrap();
    }

    #[test]
    fn forest_csv_format() {
        let f = Forest { parent: vec![1, ROOT], slot: vec![0, 0] };
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "site_index,parent_index\n0,1\n1,-1\n");
    }

    #[test]
    fn sparse_branch_is_loop_erased_walk_to_root() {
        let g = BoxGeometry::new(5, 3).unwrap();
        let mut sw = SparseWilson::new();
        let mut rng = RngStream::new(5, 0).rng();
        let o = g.encode(&Site::origin(5)).unwrap() as usize;
        sw.attach(&g, o, true, &mut rng).unwrap();
        let path = sw.last_branch().to_vec();
        assert_eq!(path[0], o);
        let mut seen = std::collections::HashSet::new();
        assert!(path.iter().all(|v| seen.insert(*v)));
        for w in path.windows(2) {
            assert!((0..10).any(|s| g.endpoint(w[0], s) == Some(w[1])));
        }
        let last = *path.last().unwrap();
        assert!((0..10).any(|s| g.endpoint(last, s).is_none()));
    }

    #[test]
    fn two_point_agrees_with_full_forest_labels() {
        // same Bernoulli parameter from the shortcut and from complete forests
        let g = BoxGeometry::new(5, 1).unwrap();
        let x = g.encode(&Site::new(vec![-1, 0, 0, 0, 0])).unwrap() as usize;
        let y = g.encode(&Site::new(vec![1, 0, 0, 0, 0])).unwrap() as usize;
        let n = 20_000;
        let mut sw = SparseWilson::new();
        let mut shortcut = 0u64;
        for s in 0..n {
            let mut rng = RngStream::new(11, s).rng();
            shortcut += two_point_same_tree(&g, x, y, &mut sw, &mut rng).unwrap() as u64;
        }
        let mut sampler = WilsonSampler::new(&g);
        let order: Vec<usize> = (0..g.site_count() as usize).collect();
        let mut full = 0u64;
        for s in 0..n {
            let mut rng = RngStream::new(12, s).rng();
            let f = sampler.sample(&order, &mut rng).unwrap();
            let l = components_minus_root(&f);
            full += (l.labels()[x] == l.labels()[y]) as u64;
        }
        let a = crate::estimators::EstimateWithError::bernoulli(shortcut, n);
        let b = crate::estimators::EstimateWithError::bernoulli(full, n);
        assert!(a.agrees_with(&b, 3.0), "{a} vs {b}");
    }

    #[test]
    fn prefix_counts_are_consistent() {
        let g = BoxGeometry::new(5, 4).unwrap();
        let pts: Vec<usize> = [[0, 0, 0, 0, 0], [1, 0, 0, 0, 0], [0, 1, 0, 0, 0], [0, 0, 1, 0, 0]]
            .iter()
            .map(|c| g.encode(&Site::new(c.to_vec())).unwrap() as usize)
            .collect();
        let mut sw = SparseWilson::new();
        for s in 0..200 {
            let mut rng = RngStream::new(13, s).rng();
            let k = same_tree_prefix(&g, &pts, &mut sw, &mut rng).unwrap();
            assert!((1..=4).contains(&k));
        }
        let mut rng = RngStream::new(13, 0).rng();
        assert_eq!(same_tree_prefix(&g, &pts[..1], &mut sw, &mut rng).unwrap(), 1);
    }
}
