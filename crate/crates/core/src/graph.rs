//! Rooted graphs: finite graphs with one distinguished absorbing vertex.
//!
//! Both the wired box and the small oracle graphs expose their internal
//! vertices as indices `0..vertex_count()` and their incident edges as
//! numbered slots. The root is never given an index; stepping along an edge
//! that ends at the root yields `None`.

/// A graph whose boundary is contracted to a single root vertex.
///
/// Walks are driven through a [`RootedGraph::Cursor`], a cheap copyable
/// position that lets implementations carry whatever state makes a step fast
/// (coordinates for lattice boxes, a bare index for adjacency lists).
pub trait RootedGraph {
    type Cursor: Copy;

    /// Number of internal (non-root) vertices.
    fn vertex_count(&self) -> usize;

    fn cursor(&self, vertex: usize) -> Self::Cursor;

    fn vertex(&self, cursor: &Self::Cursor) -> usize;

    /// Number of incident edges, counting parallel edges separately.
    fn degree(&self, cursor: &Self::Cursor) -> usize;

    /// Follows edge `slot` out of `cursor`; `None` means the edge ends at the root.
    fn step(&self, cursor: &Self::Cursor, slot: usize) -> Option<Self::Cursor>;

    /// Vertex-level convenience wrapper around [`RootedGraph::step`].
    fn endpoint(&self, vertex: usize, slot: usize) -> Option<usize> {
        let c = self.cursor(vertex);
        self.step(&c, slot).map(|n| self.vertex(&n))
    }
}
