//! Exact ground truth on small graphs: tree counts, tree lists and pair correlations.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{config, domain, Error, Result};
use crate::estimators::{chi_square_test, ChiSquareTest};
use crate::forest::{wilson, Forest};
use crate::graph::RootedGraph;
use crate::parallel;
use crate::rng::StreamFamily;

/// Default ceiling on the number of trees [`enumerate_spanning_trees`] will list.
pub const DEFAULT_TREE_BUDGET: u64 = 100_000;

/// Vertex count limit for enumeration.
pub const MAX_ENUMERATION_VERTICES: usize = 16;

/// Vertex count limit for determinant counting.
pub const MAX_COUNT_VERTICES: usize = 200;

/// A small undirected multigraph whose vertex 0 is the root.
///
/// Internal vertices `1..n` are exposed through [`RootedGraph`] as indices
/// `0..n-1`. The incident edges of each vertex are numbered in insertion
/// order; parallel edges are allowed so that wired boxes, where one boundary
/// site can have several edges to the root, are represented faithfully.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmallGraph {
    vertices: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl SmallGraph {
    pub fn new(vertices: usize, edges: &[(usize, usize)]) -> Result<SmallGraph> {
        if vertices < 2 {
            return config("a rooted graph needs the root and at least one vertex");
        }
        let mut adjacency = vec![Vec::new(); vertices];
        for (id, &(u, v)) in edges.iter().enumerate() {
            if u >= vertices || v >= vertices {
                return config(format!("edge {u} {v} names a vertex outside 0..{vertices}"));
            }
            if u == v {
                return config(format!("self-loop at vertex {u}"));
            }
            adjacency[u].push((v, id));
            adjacency[v].push((u, id));
        }
        Ok(SmallGraph { vertices, edges: edges.to_vec(), adjacency })
    }

    /// Parses one `u v` pair per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<SmallGraph> {
        let mut edges = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parsed: Option<Vec<usize>> = parts.iter().map(|p| p.parse().ok()).collect();
            match parsed.as_deref() {
                Some(&[u, v]) => edges.push((u, v)),
                _ => return config(format!("line {}: expected two vertex numbers, got {line:?}", no + 1)),
            }
        }
        let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        SmallGraph::new(n, &edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = String::from("# root = 0\n");
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    /// The grid `prod [0, shape_j)` with every missing lattice neighbour wired to the root.
    ///
    /// Sites are numbered lexicographically (first axis most significant),
    /// site `i` becoming vertex `i + 1`, and incident edges are listed in the
    /// slot order `+e_1, -e_1, +e_2, ...` used by the lattice boxes.
    pub fn wired_grid(shape: &[usize]) -> Result<SmallGraph> {
        if shape.is_empty() || shape.contains(&0) {
            return config("grid shape needs positive extents");
        }
        let sites: usize = shape.iter().product();
        if sites + 1 > MAX_COUNT_VERTICES {
            return config("grid too large for an oracle graph");
        }
        let mut strides = vec![1; shape.len()];
        for j in (0..shape.len() - 1).rev() {
            strides[j] = strides[j + 1] * shape[j + 1];
        }
        let mut edges = Vec::new();
        let mut edge_at = vec![vec![usize::MAX; 2 * shape.len()]; sites];
        for i in 0..sites {
            for j in 0..shape.len() {
                let c = (i / strides[j]) % shape[j];
                for (slot, fwd) in [(2 * j, true), (2 * j + 1, false)] {
                    if edge_at[i][slot] != usize::MAX {
                        continue;
                    }
                    let inside = if fwd { c + 1 < shape[j] } else { c > 0 };
                    if inside {
                        let k = if fwd { i + strides[j] } else { i - strides[j] };
                        edge_at[i][slot] = edges.len();
                        edge_at[k][slot ^ 1] = edges.len();
                        edges.push((i + 1, k + 1));
                    } else {
                        edge_at[i][slot] = edges.len();
                        edges.push((i + 1, 0));
                    }
                }
            }
        }
        let mut g = SmallGraph::new(sites + 1, &edges)?;
        for i in 0..sites {
            let v = i + 1;
            g.adjacency[v] = edge_at[i]
                .iter()
                .map(|&e| {
                    let (a, b) = edges[e];
                    (if a == v { b } else { a }, e)
                })
                .collect();
        }
        Ok(g)
    }

    /// Vertex count including the root.
    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_simple(&self) -> bool {
        let mut seen: Vec<(usize, usize)> = self.edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.vertices);
        for &(u, v) in &self.edges {
            uf.union(u, v);
        }
        uf.components == 1
    }

    /// Edge id used by vertex `v` (graph numbering) in slot `slot`.
    pub fn edge_at(&self, v: usize, slot: usize) -> usize {
        self.adjacency[v][slot].1
    }

    /// Sorted edge ids of a forest sampled on this graph.
    pub fn tree_edges(&self, forest: &Forest) -> Vec<usize> {
        let mut e: Vec<usize> = (0..forest.len()).map(|i| self.edge_at(i + 1, forest.slot(i))).collect();
        e.sort_unstable();
        e
    }
}

impl RootedGraph for SmallGraph {
    type Cursor = usize;

    fn vertex_count(&self) -> usize {
        self.vertices - 1
    }

    fn cursor(&self, vertex: usize) -> usize {
        vertex
    }

    fn vertex(&self, cursor: &usize) -> usize {
        *cursor
    }

    fn degree(&self, cursor: &usize) -> usize {
        self.adjacency[cursor + 1].len()
    }

    fn step(&self, cursor: &usize, slot: usize) -> Option<usize> {
        let next = self.adjacency[cursor + 1][slot].0;
        (next != 0).then(|| next - 1)
    }
}

#[derive(Clone, Debug)]
struct UnionFind {
    up: Vec<usize>,
    size: Vec<usize>,
    components: usize,
    log: Vec<Option<(usize, usize)>>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { up: (0..n).collect(), size: vec![1; n], components: n, log: Vec::new() }
    }

    fn find(&self, mut a: usize) -> usize {
        while self.up[a] != a {
            a = self.up[a];
        }
        a
    }

    /// Union by size without path compression, so every union can be undone.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            self.log.push(None);
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.up[b] = a;
        self.size[a] += self.size[b];
        self.components -= 1;
        self.log.push(Some((a, b)));
        true
    }

    fn undo(&mut self) {
        if let Some(Some((a, b))) = self.log.pop() {
            self.up[b] = b;
            self.size[a] -= self.size[b];
            self.components += 1;
        }
    }
}

/// Number of spanning trees by the matrix-tree theorem.
///
/// The reduced Laplacian (root row and column removed) is reduced with
/// Bareiss fraction-free elimination, so every intermediate is an exact
/// integer. Disconnected graphs give 0.
pub fn spanning_tree_count(g: &SmallGraph) -> Result<BigInt> {
    if g.vertices > MAX_COUNT_VERTICES {
        return config(format!("counting is limited to {MAX_COUNT_VERTICES} vertices"));
    }
    let n = g.vertices - 1;
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for &(u, v) in &g.edges {
        for (a, b) in [(u, v), (v, u)] {
            if a != 0 {
                m[a - 1][a - 1] += 1;
                if b != 0 {
                    m[a - 1][b - 1] -= 1;
                }
            }
        }
    }
    let mut prev = BigInt::from(1);
    let mut sign = 1;
    for k in 0..n {
        if m[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else {
                return Ok(BigInt::zero());
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    Ok(if n == 0 { BigInt::from(1) } else { prev * sign })
}

/// Every spanning tree as a sorted list of edge ids.
///
/// Refuses with a budget error when the determinant count exceeds `budget`.
pub fn enumerate_spanning_trees(g: &SmallGraph, budget: u64) -> Result<Vec<Vec<usize>>> {
    if g.vertices > MAX_ENUMERATION_VERTICES {
        return config(format!("enumeration is limited to {MAX_ENUMERATION_VERTICES} vertices"));
    }
    let count = spanning_tree_count(g)?;
    if count > BigInt::from(budget) {
        return Err(Error::Budget { count: count.to_string(), budget });
    }
    let mut out = Vec::with_capacity(count.to_usize().unwrap_or(0));
    let mut uf = UnionFind::new(g.vertices);
    let mut chosen = Vec::new();
    extend(g, 0, &mut uf, &mut chosen, &mut out);
    if BigInt::from(out.len()) != count {
        return Err(Error::Compute(format!("enumerated {} trees, determinant says {count}", out.len())));
    }
    Ok(out)
}

fn extend(g: &SmallGraph, next: usize, uf: &mut UnionFind, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if uf.components == 1 {
        out.push(chosen.clone());
        return;
    }
    if next == g.edges.len() || g.edges.len() - next < uf.components - 1 {
        return;
    }
    let (u, v) = g.edges[next];
    if uf.union(u, v) {
        chosen.push(next);
        extend(g, next + 1, uf, chosen, out);
        chosen.pop();
    }
    uf.undo();
    if still_connectable(g, next + 1, uf) {
        extend(g, next + 1, uf, chosen, out);
    }
}

fn still_connectable(g: &SmallGraph, from: usize, uf: &UnionFind) -> bool {
    let mut probe = uf.clone();
    for &(u, v) in &g.edges[from..] {
        probe.union(u, v);
        if probe.components == 1 {
            return true;
        }
    }
    probe.components == 1
}

/// Exact fraction of spanning trees in which the tree path from `x` to `y` avoids the root.
///
/// Vertices use graph numbering (root = 0).
pub fn exact_pair_correlation(g: &SmallGraph, x: usize, y: usize, budget: u64) -> Result<Ratio<u64>> {
    if x == 0 || y == 0 || x >= g.vertices || y >= g.vertices {
        return domain("pair correlation needs two internal vertices");
    }
    if x == y {
        return Ok(Ratio::from_integer(1));
    }
    exact_same_tree(g, &[x, y], budget)
}

/// Exact probability that all `points` share one component after the root is removed.
pub fn exact_same_tree(g: &SmallGraph, points: &[usize], budget: u64) -> Result<Ratio<u64>> {
    if points.iter().any(|&p| p == 0 || p >= g.vertices) {
        return domain("points must be internal vertices");
    }
    let trees = enumerate_spanning_trees(g, budget)?;
    let mut hits = 0u64;
    for t in &trees {
        let mut uf = UnionFind::new(g.vertices);
        for &e in t {
            let (u, v) = g.edges[e];
            if u != 0 && v != 0 {
                uf.union(u, v);
            }
        }
        let r = uf.find(points[0]);
        hits += points.iter().all(|&p| uf.find(p) == r) as u64;
    }
    Ok(Ratio::new(hits, trees.len() as u64))
}

/// Wilson samples tallied against the enumerated spanning trees.
#[derive(Clone, Debug)]
pub struct UniformityCheck {
    pub tree_count: usize,
    pub samples: u64,
    /// Hits per tree, in the lexicographic order of the sorted edge lists.
    pub counts: Vec<u64>,
    pub test: ChiSquareTest,
}

/// Chi-square test of `n` Wilson samples on `g` against the uniform law on its spanning trees.
pub fn wilson_uniformity(g: &SmallGraph, n_samples: u64, budget: u64, family: &StreamFamily) -> Result<UniformityCheck> {
    let mut trees = enumerate_spanning_trees(g, budget)?;
    trees.sort_unstable();
    let ordering: Vec<usize> = (0..g.vertex_count()).collect();
    let hits = parallel::try_map_shards_with(n_samples, || (), |_, range| {
        range
            .map(|s| {
                let forest = wilson(g, &ordering, &mut family.rng(s))?;
                trees
                    .binary_search(&g.tree_edges(&forest))
                    .map_err(|_| Error::Compute("sampled forest is not a spanning tree".into()))
            })
            .collect::<Result<Vec<usize>>>()
    })?;
    let mut counts = vec![0u64; trees.len()];
    for i in hits.into_iter().flatten() {
        counts[i] += 1;
    }
    let probs = vec![1.0 / trees.len() as f64; trees.len()];
    let test = chi_square_test(&counts, &probs)?;
    Ok(UniformityCheck { tree_count: trees.len(), samples: n_samples, counts, test })
}

/// Built-in fixture graphs used by the uniformity checks.
pub mod fixtures {
    use super::SmallGraph;

    /// Names accepted by [`by_name`].
    pub const NAMES: [&str; 8] =
        ["triangle", "four_cycle", "k4", "separated_pair", "path", "wired_2x3", "wired_cube", "wired_3x3"];

    pub fn by_name(name: &str) -> Option<SmallGraph> {
        Some(match name {
            "triangle" => triangle(),
            "four_cycle" => four_cycle(),
            "k4" => k4(),
            "separated_pair" => separated_pair(),
            "path" => path(),
            "wired_2x3" => wired_2x3(),
            "wired_cube" => wired_cube(),
            "wired_3x3" => wired_3x3(),
            _ => return None,
        })
    }

    /// Root and two vertices, all pairwise adjacent: 3 trees.
    pub fn triangle() -> SmallGraph {
        SmallGraph::new(3, &[(1, 2), (1, 0), (2, 0)]).expect("valid fixture")
    }

    /// The 4-cycle `0-1-2-3-0`: 4 trees.
    pub fn four_cycle() -> SmallGraph {
        SmallGraph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).expect("valid fixture")
    }

    /// Complete graph on the root and three vertices: 16 trees.
    pub fn k4() -> SmallGraph {
        SmallGraph::new(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).expect("valid fixture")
    }

    /// Two vertices joined only through the root: 1 tree, always separated.
    pub fn separated_pair() -> SmallGraph {
        SmallGraph::new(3, &[(1, 0), (2, 0)]).expect("valid fixture")
    }

    /// The path `0-1-2-3`: 1 tree.
    pub fn path() -> SmallGraph {
        SmallGraph::new(4, &[(0, 1), (1, 2), (2, 3)]).expect("valid fixture")
    }

    /// Wired 2 x 3 grid: 2415 trees.
    pub fn wired_2x3() -> SmallGraph {
        SmallGraph::wired_grid(&[2, 3]).expect("valid fixture")
    }

    /// Wired 2 x 2 x 2 cube: 1157625 trees, beyond the default enumeration budget.
    pub fn wired_cube() -> SmallGraph {
        SmallGraph::wired_grid(&[2, 2, 2]).expect("valid fixture")
    }

    /// Wired 3 x 3 grid, the 2-D box of half-width 1: 100352 trees.
    pub fn wired_3x3() -> SmallGraph {
        SmallGraph::wired_grid(&[3, 3]).expect("valid fixture")
    }
}
