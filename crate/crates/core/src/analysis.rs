//! Post-processing of phase fields: crack connectivity and direction.

use crate::error::Result;
use crate::mesh::Mesh;

/// Component label per node for the nodes with `d >= threshold`, connected
/// through mesh edges (`usize::MAX` for the others). Cracked nodes of
/// `bridge` (e.g. an inclusion interface) are joined into one component.
pub fn cracked_components(mesh: &Mesh, d: &[f64], threshold: f64, bridge: Option<&str>) -> Result<Vec<usize>> {
    let n = mesh.num_nodes();
    let mut uf = UnionFind::new(n);
    for tri in &mesh.triangles {
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            if d[a] >= threshold && d[b] >= threshold {
                uf.union(a, b);
            }
        }
    }
    if let Some(name) = bridge {
        let set = mesh.node_set(name)?;
        // The bridge connects any cracked regions that touch it.
        let mut first: Option<usize> = None;
        for &v in set {
            let touching = d[v] >= threshold;
            if touching {
                match first {
                    None => first = Some(v),
                    Some(f) => uf.union(f, v),
                }
            }
        }
    }
    Ok((0..n)
        .map(|v| if d[v] >= threshold { uf.find(v) } else { usize::MAX })
        .collect())
}

/// Whether one cracked component touches both `a` and `b`.
pub fn crack_spans(
    mesh: &Mesh,
    d: &[f64],
    threshold: f64,
    a: &str,
    b: &str,
    bridge: Option<&str>,
) -> Result<bool> {
    let comp = cracked_components(mesh, d, threshold, bridge)?;
    let labels_a: std::collections::BTreeSet<usize> = mesh
        .node_set(a)?
        .iter()
        .map(|&v| comp[v])
        .filter(|&c| c != usize::MAX)
        .collect();
    Ok(mesh
        .node_set(b)?
        .iter()
        .any(|&v| comp[v] != usize::MAX && labels_a.contains(&comp[v])))
}

/// Whether any node of `set` has `d >= threshold`.
pub fn crack_reaches(mesh: &Mesh, d: &[f64], threshold: f64, set: &str) -> Result<bool> {
    Ok(mesh.node_set(set)?.iter().any(|&v| d[v] >= threshold))
}

/// Orientation of the cracked region inside the horizontal band
/// `y_lo <= y <= y_hi`, in degrees in `[0, 180)` measured counter-clockwise
/// from the x axis. Uses the principal axis of the phase-weighted node cloud.
/// `None` if fewer than three nodes qualify.
pub fn crack_direction(mesh: &Mesh, d: &[f64], threshold: f64, y_lo: f64, y_hi: f64) -> Option<f64> {
    let pts: Vec<([f64; 2], f64)> = mesh
        .nodes
        .iter()
        .zip(d)
        .filter(|(p, &v)| v >= threshold && p[1] >= y_lo && p[1] <= y_hi)
        .map(|(p, &v)| (*p, v))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let w: f64 = pts.iter().map(|(_, v)| v).sum();
    let cx = pts.iter().map(|(p, v)| p[0] * v).sum::<f64>() / w;
    let cy = pts.iter().map(|(p, v)| p[1] * v).sum::<f64>() / w;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (p, v) in &pts {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += v * dx * dx;
        syy += v * dy * dy;
        sxy += v * dx * dy;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some(angle.to_degrees().rem_euclid(180.0))
}

/// Smallest difference between two line orientations in degrees (`[0, 90]`).
pub fn orientation_gap(a: f64, b: f64) -> f64 {
    let diff = (a - b).rem_euclid(180.0);
    diff.min(180.0 - diff)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so labels are deterministic.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}
