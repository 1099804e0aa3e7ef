//! Plain text mesh exchange format.
//!
//! ```text
//! nodes N elems M
//! x y            (N lines)
//! i j k          (M lines, 0-based, counter-clockwise)
//! set <name> n i1 ... in
//! ```
//!
//! Blank lines and `#` comments are ignored. The characteristic size of an
//! imported mesh is its mean edge length.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{dist, Mesh};
use crate::error::{Error, Result};

pub fn read_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line_no, header) = lines.next().ok_or(Error::MeshFormat {
        line: 1,
        msg: "empty mesh file".into(),
    })?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 4 || tokens[0] != "nodes" || tokens[2] != "elems" {
        return Err(Error::MeshFormat {
            line: line_no,
            msg: format!("expected `nodes N elems M`, got `{header}`"),
        });
    }
    let n_nodes: usize = parse(tokens[1], line_no)?;
    let n_elems: usize = parse(tokens[3], line_no)?;

    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (line, l) = next_line(&mut lines, "node coordinates")?;
        let v: Vec<&str> = l.split_whitespace().collect();
        if v.len() != 2 {
            return Err(Error::MeshFormat {
                line,
                msg: format!("expected `x y`, got `{l}`"),
            });
        }
        nodes.push([parse(v[0], line)?, parse(v[1], line)?]);
    }

    let mut triangles = Vec::with_capacity(n_elems);
    for _ in 0..n_elems {
        let (line, l) = next_line(&mut lines, "element connectivity")?;
        let v: Vec<&str> = l.split_whitespace().collect();
        if v.len() != 3 {
            return Err(Error::MeshFormat {
                line,
                msg: format!("expected `i j k`, got `{l}`"),
            });
        }
        let tri = [parse(v[0], line)?, parse(v[1], line)?, parse(v[2], line)?];
        if let Some(&bad) = tri.iter().find(|&&i| i >= n_nodes) {
            return Err(Error::MeshFormat {
                line,
                msg: format!("node index {bad} out of range"),
            });
        }
        triangles.push(tri);
    }

    let mut node_sets = BTreeMap::new();
    for (line, l) in lines {
        let v: Vec<&str> = l.split_whitespace().collect();
        if v.len() < 3 || v[0] != "set" {
            return Err(Error::MeshFormat {
                line,
                msg: format!("expected `set <name> n i1 ... in`, got `{l}`"),
            });
        }
        let count: usize = parse(v[2], line)?;
        if v.len() != 3 + count {
            return Err(Error::MeshFormat {
                line,
                msg: format!("set `{}` declares {count} nodes but lists {}", v[1], v.len() - 3),
            });
        }
        let mut ids = Vec::with_capacity(count);
        for t in &v[3..] {
            let i: usize = parse(t, line)?;
            if i >= n_nodes {
                return Err(Error::MeshFormat {
                    line,
                    msg: format!("node index {i} out of range"),
                });
            }
            ids.push(i);
        }
        node_sets.insert(v[1].to_string(), ids);
    }

    let mut edge_sum = 0.0;
    for t in &triangles {
        for k in 0..3 {
            edge_sum += dist(nodes[t[k]], nodes[t[(k + 1) % 3]]);
        }
    }
    let h = if triangles.is_empty() {
        0.0
    } else {
        edge_sum / (3 * triangles.len()) as f64
    };
    let mesh = Mesh {
        nodes,
        triangles,
        node_sets,
        h,
    };
    mesh.validate()?;
    Ok(mesh)
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "nodes {} elems {}", mesh.num_nodes(), mesh.num_triangles());
    for p in &mesh.nodes {
        let _ = writeln!(out, "{:e} {:e}", p[0], p[1]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    for (name, set) in &mesh.node_sets {
        let _ = write!(out, "set {name} {}", set.len());
        for i in set {
            let _ = write!(out, " {i}");
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn next_line<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    what: &str,
) -> Result<(usize, &'a str)> {
    lines.next().ok_or(Error::MeshFormat {
        line: 0,
        msg: format!("unexpected end of file while reading {what}"),
    })
}

fn parse<T: std::str::FromStr>(token: &str, line: usize) -> Result<T> {
    token.parse().map_err(|_| Error::MeshFormat {
        line,
        msg: format!("cannot parse `{token}`"),
    })
}
