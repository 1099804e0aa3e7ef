//! End-to-end runs of the `phasefrac` binary.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn phasefrac(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_phasefrac"));
    cmd.args(args).env("RUST_LOG", "warn").env_remove("PHASEFRAC_OUTPUT_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &TempDir, text: &str) -> String {
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// Coarse homogeneous square, a handful of steps.
fn small_run(out: &Path) -> String {
    format!(
        "preset = ex3\ndriver = standard\nmesh.h = 250\nschedule.steps = 4\noutput.dir = {}\noutput.stride = 2\n",
        out.display()
    )
}

#[test]
fn lists_every_preset() {
    let out = phasefrac(&["list-presets"], &[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["ex1", "ex2", "ex3", "ex4a", "ex4b", "ex4c", "ex4d", "ex4e"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing from\n{text}");
    }
}

#[test]
fn mesh_info_reports_the_holed_square() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "preset = ex2\ndriver = standard\nmesh.h = 100\n");
    let out = phasefrac(&["mesh-info", &cfg], &[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("nodes"));
    assert!(text.lines().any(|l| l.starts_with("set hole")), "{text}");
}

#[test]
fn config_without_driver_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "");
    let out = phasefrac(&["run", &cfg], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing driver"));
}

#[test]
fn negative_safety_factor_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "preset = ex3\ndriver = parallel_universe\nalpha = -1\n");
    let out = phasefrac(&["run", &cfg], &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unreadable_config_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.cfg");
    let out = phasefrac(&["run", missing.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_writes_trace_summary_and_fields() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("out");
    let text = small_run(&out_dir);
    let cfg = write_config(&tmp, &text);
    let out = phasefrac(&["run", &cfg], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    // Header plus one row per step.
    assert_eq!(trace.lines().count(), 5);
    let summary = std::fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("mesh.h = 250"), "config not echoed:\n{summary}");
    for step in [0, 2, 3] {
        assert!(out_dir.join(format!("field_{step:04}.vtk")).exists(), "field {step}");
    }
}

#[test]
fn output_dir_can_be_overridden_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let configured = tmp.path().join("configured");
    let redirected = tmp.path().join("redirected");
    let cfg = write_config(&tmp, &small_run(&configured));
    let out = phasefrac(&["run", &cfg], &[("PHASEFRAC_OUTPUT_DIR", &redirected)]);
    assert!(out.status.success());
    assert!(redirected.join("trace.csv").exists());
    assert!(!configured.exists());
}

#[test]
fn solver_failure_exits_with_code_two_and_keeps_the_partial_trace() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("out");
    let text = small_run(&out_dir) + "solver.max_stagger = 1\n";
    let cfg = write_config(&tmp, &text);
    let out = phasefrac(&["run", &cfg], &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("trace.csv").exists());
}
