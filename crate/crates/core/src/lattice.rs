//! Geometry of finite pieces of Z^d: wired boxes and discrete tori.
//!
//! Sites of a box `{x : |x|_inf <= L}` are numbered lexicographically in a
//! mixed radix of `2L + 1`, first coordinate most significant, so that
//! `(-L, ..., -L)` has index 0. Edge slots are numbered `2j` for the step
//! `+e_j` and `2j + 1` for `-e_j`.

use std::fmt;

use crate::error::{config, domain, Result};
use crate::graph::RootedGraph;

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 8;

/// A point of Z^d in lattice units.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(Vec<i32>);

impl Site {
    pub fn new(coords: Vec<i32>) -> Self {
        Site(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Site(vec![0; dim])
    }

    /// `r * e_axis` in dimension `dim`.
    pub fn on_axis(dim: usize, axis: usize, r: i32) -> Self {
        let mut c = vec![0; dim];
        c[axis] = r;
        Site(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i32] {
        &self.0
    }

    pub fn max_norm(&self) -> i32 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|&c| (c as f64) * (c as f64)).sum()
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn neg(&self) -> Site {
        Site(self.0.iter().map(|c| -c).collect())
    }

    pub fn add(&self, other: &Site) -> Site {
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Site) -> Site {
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// The unit-step neighbour through edge slot `slot`.
    pub fn shifted(&self, slot: usize) -> Site {
        let mut c = self.0.clone();
        c[slot / 2] += if slot % 2 == 0 { 1 } else { -1 };
        Site(c)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A vertex of a wired graph: an internal site or the contracted root.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Vertex {
    Site(Site),
    Root,
}

impl Vertex {
    pub fn is_root(&self) -> bool {
        matches!(self, Vertex::Root)
    }
}

/// The box `{x in Z^d : |x|_inf <= L}` with every outside site wired to a single root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxGeometry {
    dim: usize,
    half_width: i32,
    side: u64,
    strides: [u64; MAX_DIM],
    site_count: u64,
}

impl BoxGeometry {
    pub fn new(dim: usize, half_width: i32) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return config(format!("dimension {dim} outside 1..={MAX_DIM}"));
        }
        if half_width < 0 {
            return config(format!("negative half-width {half_width}"));
        }
        let side = 2 * half_width as u64 + 1;
        let mut strides = [0u64; MAX_DIM];
        let mut acc: u64 = 1;
        for j in (0..dim).rev() {
            strides[j] = acc;
            acc = acc
                .checked_mul(side)
                .ok_or_else(|| crate::Error::Config("box too large to index".into()))?;
        }
        Ok(BoxGeometry { dim, half_width, side, strides, site_count: acc })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> i32 {
        self.half_width
    }

    pub fn side(&self) -> u64 {
        self.side
    }

    /// `(2L + 1)^d`.
    pub fn site_count(&self) -> u64 {
        self.site_count
    }

    pub fn contains(&self, site: &Site) -> bool {
        site.dim() == self.dim && site.max_norm() <= self.half_width
    }

    fn check(&self, site: &Site) -> Result<()> {
        if site.dim() != self.dim {
            return domain(format!("site {site} has dimension {}, box has {}", site.dim(), self.dim));
        }
        if site.max_norm() > self.half_width {
            return domain(format!("site {site} lies outside the box of half-width {}", self.half_width));
        }
        Ok(())
    }

    /// The `2d` neighbours of an internal site in slot order; sites beyond the box become the root.
    pub fn neighbors(&self, site: &Site) -> Result<Vec<Vertex>> {
        self.check(site)?;
        Ok((0..2 * self.dim)
            .map(|slot| {
                let n = site.shifted(slot);
                if n.max_norm() > self.half_width {
                    Vertex::Root
                } else {
                    Vertex::Site(n)
                }
            })
            .collect())
    }

    pub fn encode(&self, site: &Site) -> Result<u64> {
        self.check(site)?;
        Ok(site
            .coords()
            .iter()
            .enumerate()
            .map(|(j, &c)| (c + self.half_width) as u64 * self.strides[j])
            .sum())
    }

    pub fn decode(&self, index: u64) -> Result<Site> {
        if index >= self.site_count {
            return domain(format!("index {index} outside [0, {})", self.site_count));
        }
        Ok(Site::new(self.digits(index)))
    }

    fn digits(&self, index: u64) -> Vec<i32> {
        (0..self.dim)
            .map(|j| ((index / self.strides[j]) % self.side) as i32 - self.half_width)
            .collect()
    }
}

/// Walk position inside a [`BoxGeometry`]: linear index plus coordinates.
#[derive(Clone, Copy, Debug)]
pub struct BoxCursor {
    index: u64,
    coords: [i32; MAX_DIM],
}

impl BoxCursor {
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn coords(&self) -> &[i32; MAX_DIM] {
        &self.coords
    }
}

impl RootedGraph for BoxGeometry {
    type Cursor = BoxCursor;

    fn vertex_count(&self) -> usize {
        self.site_count as usize
    }

    fn cursor(&self, vertex: usize) -> BoxCursor {
        let mut coords = [0; MAX_DIM];
        for (j, c) in self.digits(vertex as u64).into_iter().enumerate() {
            coords[j] = c;
        }
        BoxCursor { index: vertex as u64, coords }
    }

    #[inline]
    fn vertex(&self, cursor: &BoxCursor) -> usize {
        cursor.index as usize
    }

    #[inline]
    fn degree(&self, _cursor: &BoxCursor) -> usize {
        2 * self.dim
    }

    #[inline]
    fn step(&self, cursor: &BoxCursor, slot: usize) -> Option<BoxCursor> {
        let axis = slot >> 1;
        let mut next = *cursor;
        if slot & 1 == 0 {
            if next.coords[axis] == self.half_width {
                return None;
            }
            next.coords[axis] += 1;
            next.index += self.strides[axis];
        } else {
            if next.coords[axis] == -self.half_width {
                return None;
            }
            next.coords[axis] -= 1;
            next.index -= self.strides[axis];
        }
        Some(next)
    }
}

/// The discrete torus `(Z / N Z)^d`, stored row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusGeometry {
    dim: usize,
    side: usize,
}

impl TorusGeometry {
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return config(format!("dimension {dim} outside 1..={MAX_DIM}"));
        }
        if side < 2 {
            return config(format!("torus side {side} < 2"));
        }
        side.checked_pow(dim as u32)
            .ok_or_else(|| crate::Error::Config("torus too large".into()))?;
        Ok(TorusGeometry { dim, side })
    }

    /// Validates the spectral-sampling preconditions: `N` even and at least 8.
    pub fn spectral(dim: usize, side: usize) -> Result<Self> {
        if side % 2 != 0 || side < 8 {
            return config(format!("spectral sampling needs an even side >= 8, got {side}"));
        }
        Self::new(dim, side)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn site_count(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// Index of a site given in any integer coordinates (reduced mod N).
    pub fn encode(&self, coords: &[i64]) -> usize {
        let n = self.side as i64;
        coords
            .iter()
            .fold(0usize, |acc, &c| acc * self.side + c.rem_euclid(n) as usize)
    }

    /// Coordinates in `[0, N)` for a linear index.
    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        for j in (0..self.dim).rev() {
            c[j] = index % self.side;
            index /= self.side;
        }
        c
    }

    /// Coordinates folded into the symmetric range `[-N/2, N/2)`.
    pub fn centered(&self, index: usize) -> Vec<i64> {
        let n = self.side as i64;
        self.decode(index)
            .into_iter()
            .map(|c| {
                let c = c as i64;
                if c >= n - n / 2 {
                    c - n
                } else {
                    c
                }
            })
            .collect()
    }
}
