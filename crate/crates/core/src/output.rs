//! Result files: legacy VTK fields, per-step CSV traces and run summaries.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::assembly::FieldState;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::nucleation::RunTrace;

pub const CSV_HEADER: [&str; 10] = [
    "step",
    "u_b",
    "sigma_max",
    "vigilance",
    "pi_nc_elastic",
    "pi_nc_surface",
    "pi_c_elastic",
    "pi_c_surface",
    "accepted",
    "wall_s",
];

/// Writes an ASCII unstructured grid with point data `displacement` (three
/// components; anti-plane fields go to z) and `phase`.
pub fn write_vtk(mesh: &Mesh, state: &FieldState, path: &Path) -> Result<()> {
    let n = mesh.num_nodes();
    if state.d.len() != n {
        return Err(Error::SizeMismatch {
            what: "phase field",
            got: state.d.len(),
            expected: n,
        });
    }
    let per_node = match state.u.len() {
        l if l == 2 * n => 2,
        l if l == n => 1,
        l => {
            return Err(Error::SizeMismatch {
                what: "displacement",
                got: l,
                expected: 2 * n,
            })
        }
    };
    let mut s = String::with_capacity(64 * n);
    s.push_str("# vtk DataFile Version 3.0\nphase-field state\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
    }
    let m = mesh.num_triangles();
    let _ = writeln!(s, "CELLS {m} {}", 4 * m);
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {m}");
    for _ in 0..m {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    s.push_str("VECTORS displacement double\n");
    for i in 0..n {
        if per_node == 2 {
            let _ = writeln!(s, "{:e} {:e} 0", state.u[2 * i], state.u[2 * i + 1]);
        } else {
            let _ = writeln!(s, "0 0 {:e}", state.u[i]);
        }
    }
    s.push_str("SCALARS phase double 1\nLOOKUP_TABLE default\n");
    for v in &state.d {
        let _ = writeln!(s, "{v:e}");
    }
    fs::write(path, s)?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// One row per recorded step; energies of an absent universe are left empty.
pub fn write_trace_csv(trace: &RunTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:e}"));
    for r in &trace.records {
        w.write_record([
            r.step.to_string(),
            format!("{:e}", r.load),
            format!("{:e}", r.sigma_max),
            u8::from(r.vigilance).to_string(),
            opt(r.crackless.map(|e| e.elastic)),
            opt(r.crackless.map(|e| e.surface)),
            opt(r.cracked.map(|e| e.elastic)),
            opt(r.cracked.map(|e| e.surface)),
            r.accepted.to_string(),
            format!("{:.6}", r.wall_s),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Key-value summary of a run followed by the config text it came from.
pub fn write_summary(trace: &RunTrace, reference_load: Option<f64>, config: &str, path: &Path) -> Result<()> {
    fs::write(path, summary_text(trace, reference_load, config))?;
    Ok(())
}

pub fn summary_text(trace: &RunTrace, reference_load: Option<f64>, config: &str) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:.6e}"));
    let mut s = String::new();
    let _ = writeln!(s, "driver = {}", trace.driver.as_str());
    let _ = writeln!(s, "steps = {}", trace.records.len());
    let _ = writeln!(s, "vigilance_load = {}", opt(trace.vigilance_load));
    let _ = writeln!(s, "acceptance_load = {}", opt(trace.acceptance_load));
    let _ = writeln!(s, "nucleation_load = {}", opt(trace.nucleation_load));
    let _ = writeln!(s, "complete_fracture_load = {}", opt(trace.complete_fracture_load));
    if let Some(r) = reference_load {
        let _ = writeln!(s, "reference_load = {r:.6e}");
        let _ = writeln!(s, "nucleation_over_reference = {}", opt(trace.nucleation_load.map(|v| v / r)));
    }
    if let Some(n) = trace.cracked_guess_stages {
        let _ = writeln!(s, "cracked_guess_stages = {n}");
    }
    let _ = writeln!(s, "retraces = {}", trace.retraces.len());
    for r in &trace.retraces {
        let _ = writeln!(s, "retrace = {:.6e} -> {:.6e}", r.from_load, r.to_load);
    }
    for a in &trace.advisories {
        let _ = writeln!(s, "advisory = {a}");
    }
    let _ = writeln!(s, "total_wall_s = {:.3}", trace.total_wall_s);
    s.push_str("\n[config]\n");
    s.push_str(config);
    if !config.ends_with('\n') {
        s.push('\n');
    }
    s
}

/// Creates `dir` and checks that it can hold files.
pub fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".write-test");
    fs::File::create(&probe)?.write_all(b"")?;
    fs::remove_file(probe)?;
    Ok(())
}
