//! Linear triangle meshes with named boundary node sets.
//!
//! Meshes are produced by the structured generators in [`generate`] or read
//! from the plain text format in [`text`]. A mesh is immutable once built;
//! the solver layers only borrow it.

mod generate;
mod text;

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub use generate::{generate_fiber_composite, generate_square, split_top_edge};
pub use text::{read_mesh, write_mesh};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    /// Counter-clockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    /// Characteristic element size.
    pub h: f64,
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize]> {
        self.node_sets
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::MissingNodeSet(name.to_string()))
    }

    /// Signed area of triangle `e` (positive for counter-clockwise ordering).
    pub fn signed_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.triangles[e];
        triangle_signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|e| self.signed_area(e)).sum()
    }

    /// Longest edge over `2*sqrt(3)` times the inradius; 1 for an equilateral triangle.
    pub fn aspect_ratio(&self, e: usize) -> f64 {
        let [a, b, c] = self.triangles[e];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        let lens = [dist(pa, pb), dist(pb, pc), dist(pc, pa)];
        let perimeter: f64 = lens.iter().sum();
        let area = triangle_signed_area(pa, pb, pc).abs();
        let inradius = 2.0 * area / perimeter;
        let longest = lens.iter().cloned().fold(0.0, f64::max);
        longest / (inradius * 2.0 * 3f64.sqrt())
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Largest side of the bounding box.
    pub fn extent(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi[0] - lo[0]).max(hi[1] - lo[1])
    }

    /// Sorted node adjacency lists built from triangle edges.
    pub fn node_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for tri in &self.triangles {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        adj[tri[i]].push(tri[j]);
                    }
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Nodes lying on edges that belong to exactly one triangle.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut edges: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for tri in &self.triangles {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut on_boundary = vec![false; self.nodes.len()];
        for (&(a, b), &count) in &edges {
            if count == 1 {
                on_boundary[a] = true;
                on_boundary[b] = true;
            }
        }
        (0..self.nodes.len()).filter(|&n| on_boundary[n]).collect()
    }

    /// Checks index ranges and strictly positive element areas.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (e, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {e} references a node outside 0..{n}"
                )));
            }
            if self.signed_area(e) <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "triangle {e} has non-positive signed area {}",
                    self.signed_area(e)
                )));
            }
        }
        for (name, set) in &self.node_sets {
            if let Some(&bad) = set.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!(
                    "node set `{name}` references node {bad} outside 0..{n}"
                )));
            }
        }
        if !(self.h > 0.0) {
            return Err(Error::InvalidMesh(format!(
                "characteristic size must be positive, got {}",
                self.h
            )));
        }
        Ok(())
    }
}

pub(crate) fn triangle_signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
