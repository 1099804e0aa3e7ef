use std::collections::BTreeMap;

use super::{triangle_signed_area, Mesh};
use crate::error::{Error, Result};

/// Relative tolerance (times the side length) for boundary set membership.
const SET_TOL: f64 = 1e-9;

/// Triangulates the square `(-L/2, L/2)^2`, optionally minus the open disk of
/// radius `hole` centred at the origin.
///
/// The square is covered by a structured grid of `round(L/h)` cells per side;
/// each cell is split into two triangles with the diagonal alternating in a
/// checkerboard pattern so the mesh is mirror symmetric about both axes when
/// the cell count is even. Grid nodes within half a cell of the circle are
/// moved radially onto it and the nodes left inside the disk are dropped.
///
/// Outer boundary nodes are collected in `top`, `bottom`, `left` and `right`
/// (corners go to `top`/`bottom`); nodes on the circle form the set `hole`.
pub fn generate_square(side: f64, h: f64, hole: Option<f64>) -> Result<Mesh> {
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::InvalidGeometry(format!(
            "side length must be positive, got {side}"
        )));
    }
    if !(h > 0.0) || h >= side {
        return Err(Error::InvalidGeometry(format!(
            "element size must satisfy 0 < h < L, got h = {h}, L = {side}"
        )));
    }
    if let Some(r) = hole {
        if !(r > 0.0) || r >= side / 2.0 {
            return Err(Error::InvalidGeometry(format!(
                "hole radius must satisfy 0 < R < L/2, got R = {r}, L = {side}"
            )));
        }
    }

    let cells = ((side / h).round() as usize).max(1);
    let spacing = side / cells as f64;
    let half = side / 2.0;
    let stride = cells + 1;
    let mut nodes = Vec::with_capacity(stride * stride);
    for j in 0..stride {
        for i in 0..stride {
            nodes.push([
                grid_coord(i, cells, half, spacing),
                grid_coord(j, cells, half, spacing),
            ]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let n00 = j * stride + i;
            let n10 = n00 + 1;
            let n01 = n00 + stride;
            let n11 = n01 + 1;
            if (i + j) % 2 == 0 {
                triangles.push([n00, n10, n11]);
                triangles.push([n00, n11, n01]);
            } else {
                triangles.push([n00, n10, n01]);
                triangles.push([n10, n11, n01]);
            }
        }
    }

    let mut hole_nodes = Vec::new();
    if let Some(radius) = hole {
        let (n, t, on_circle) = carve_disk(nodes, triangles, radius, spacing)?;
        nodes = n;
        triangles = t;
        hole_nodes = on_circle;
    }

    let mut mesh = Mesh {
        nodes,
        triangles,
        node_sets: BTreeMap::new(),
        h: spacing,
    };
    assign_boundary_sets(&mut mesh, half, &hole_nodes)?;
    mesh.validate()?;
    Ok(mesh)
}

/// Square matrix with a rigid circular inclusion; the interface nodes form the set `fiber`.
pub fn generate_fiber_composite(side: f64, radius: f64, h: f64) -> Result<Mesh> {
    let mut mesh = generate_square(side, h, Some(radius))?;
    let interface = mesh.node_sets.remove("hole").unwrap_or_default();
    mesh.node_sets.insert("fiber".to_string(), interface);
    Ok(mesh)
}

/// Splits the `top` set at `x = 0` into `top_left_half` and `top_right_half`.
///
/// A node sitting exactly on `x = 0` is duplicated: the original stays with the
/// left half and the copy, which shares its coordinates, is attached to the
/// triangles on the `x > 0` side and joins the right half. This lets the two
/// halves carry different prescribed values at the midline.
pub fn split_top_edge(mesh: &Mesh) -> Result<Mesh> {
    let top = mesh.node_set("top")?.to_vec();
    let tol = SET_TOL * mesh.extent();
    let mut out = mesh.clone();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &n in &top {
        let x = mesh.nodes[n][0];
        if x < -tol {
            left.push(n);
        } else if x > tol {
            right.push(n);
        } else {
            let copy = out.nodes.len();
            out.nodes.push(mesh.nodes[n]);
            for (e, tri) in out.triangles.iter_mut().enumerate() {
                if !tri.contains(&n) {
                    continue;
                }
                let [a, b, c] = mesh.triangles[e];
                let cx = (mesh.nodes[a][0] + mesh.nodes[b][0] + mesh.nodes[c][0]) / 3.0;
                if cx > 0.0 {
                    for v in tri.iter_mut() {
                        if *v == n {
                            *v = copy;
                        }
                    }
                }
            }
            left.push(n);
            right.push(copy);
            if let Some(set) = out.node_sets.get_mut("top") {
                set.push(copy);
            }
        }
    }
    out.node_sets.insert("top_left_half".to_string(), left);
    out.node_sets.insert("top_right_half".to_string(), right);
    out.validate()?;
    Ok(out)
}

fn grid_coord(i: usize, cells: usize, half: f64, spacing: f64) -> f64 {
    // Pin the last coordinate so the outer edges are exact.
    if i == cells {
        half
    } else {
        -half + i as f64 * spacing
    }
}

type Carved = (Vec<[f64; 2]>, Vec<[usize; 3]>, Vec<usize>);

fn carve_disk(
    mut nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    radius: f64,
    spacing: f64,
) -> Result<Carved> {
    let snap_band = 0.5 * spacing;
    let mut removed = vec![false; nodes.len()];
    let mut snapped = vec![false; nodes.len()];
    for (k, p) in nodes.iter_mut().enumerate() {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if (r - radius).abs() < snap_band {
            let s = radius / r;
            p[0] *= s;
            p[1] *= s;
            snapped[k] = true;
        } else if r < radius {
            removed[k] = true;
        }
    }
    // Resolve edges still crossing the circle by snapping the nearer endpoint,
    // so every node left on the cut is on the circle.
    let radial_gap = |p: &[f64; 2]| ((p[0] * p[0] + p[1] * p[1]).sqrt() - radius).abs();
    let mut edges: Vec<(usize, usize)> = triangles
        .iter()
        .flat_map(|t| (0..3).map(move |i| (t[i].min(t[(i + 1) % 3]), t[i].max(t[(i + 1) % 3]))))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let project = |p: [f64; 2]| {
        let s = radius / (p[0] * p[0] + p[1] * p[1]).sqrt();
        [p[0] * s, p[1] * s]
    };
    let mut on_cut: Vec<[f64; 2]> = (0..nodes.len()).filter(|&k| snapped[k]).map(|k| nodes[k]).collect();
    // A projection landing on an existing circle node would collapse an element.
    let occupied = |q: [f64; 2], on_cut: &[[f64; 2]]| {
        on_cut.iter().any(|c| (c[0] - q[0]).hypot(c[1] - q[1]) < 0.25 * spacing)
    };
    for (a, b) in edges {
        let (inner, outer) = match (removed[a], removed[b]) {
            (true, false) if !snapped[b] => (a, b),
            (false, true) if !snapped[a] => (b, a),
            _ => continue,
        };
        let inner_first = radial_gap(&nodes[inner]) <= radial_gap(&nodes[outer]);
        let target = if inner_first && !occupied(project(nodes[inner]), &on_cut) {
            removed[inner] = false;
            inner
        } else {
            outer
        };
        nodes[target] = project(nodes[target]);
        snapped[target] = true;
        on_cut.push(nodes[target]);
    }

    let mut kept = Vec::with_capacity(triangles.len());
    for tri in triangles {
        if tri.iter().any(|&n| removed[n]) || tri.iter().all(|&n| snapped[n]) {
            continue;
        }
        let area = triangle_signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
        if area <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "hole carving inverted an element (R = {radius}, h = {spacing}); \
                 use a finer mesh"
            )));
        }
        kept.push(tri);
    }

    // Renumber the nodes still referenced, preserving grid order.
    let mut used = vec![false; nodes.len()];
    for tri in &kept {
        for &n in tri {
            used[n] = true;
        }
    }
    let mut new_index = vec![usize::MAX; nodes.len()];
    let mut compact = Vec::new();
    let mut on_circle = Vec::new();
    for (k, p) in nodes.iter().enumerate() {
        if used[k] {
            new_index[k] = compact.len();
            if snapped[k] {
                on_circle.push(compact.len());
            }
            compact.push(*p);
        }
    }
    let kept = kept
        .into_iter()
        .map(|t| [new_index[t[0]], new_index[t[1]], new_index[t[2]]])
        .collect();
    Ok((compact, kept, on_circle))
}

fn assign_boundary_sets(mesh: &mut Mesh, half: f64, hole_nodes: &[usize]) -> Result<()> {
    let tol = SET_TOL * 2.0 * half;
    let mut sets: BTreeMap<String, Vec<usize>> = ["top", "bottom", "left", "right"]
        .iter()
        .map(|s| (s.to_string(), Vec::new()))
        .collect();
    let mut is_hole = vec![false; mesh.nodes.len()];
    for &n in hole_nodes {
        is_hole[n] = true;
    }
    let mut hole = Vec::new();
    for n in mesh.boundary_nodes() {
        let [x, y] = mesh.nodes[n];
        let name = if (y - half).abs() <= tol {
            "top"
        } else if (y + half).abs() <= tol {
            "bottom"
        } else if (x + half).abs() <= tol {
            "left"
        } else if (x - half).abs() <= tol {
            "right"
        } else if is_hole[n] {
            hole.push(n);
            continue;
        } else {
            return Err(Error::InvalidGeometry(format!(
                "interior boundary node {n} at ({x}, {y}) is not on the hole"
            )));
        };
        sets.get_mut(name).expect("preset names").push(n);
    }
    if !hole_nodes.is_empty() {
        sets.insert("hole".to_string(), hole);
    }
    mesh.node_sets = sets;
    Ok(())
}
