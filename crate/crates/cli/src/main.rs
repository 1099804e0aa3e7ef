use std::cell::RefCell;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info, warn};

use phasefrac::baselines::{backtracking_run, standard_newton_run};
use phasefrac::config::parse_config;
use phasefrac::nucleation::{parallel_universe_run, RunResult, UniverseLabel};
use phasefrac::output::{prepare_dir, write_summary, write_trace_csv, write_vtk};
use phasefrac::presets::PRESETS;
use phasefrac::{DriverKind, FieldState, RunConfig, StepRecord};

/// Overrides `output.dir` from the config file.
const OUTPUT_DIR_ENV: &str = "PHASEFRAC_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "phasefrac", version, about = "Phase-field fracture with crack-nucleation drivers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation described by a config file.
    Run { config: PathBuf },
    /// List the built-in benchmark presets.
    ListPresets,
    /// Build the mesh of a config file and print its statistics.
    MeshInfo { config: PathBuf },
}

/// Exit code for unreadable or invalid configuration.
const EXIT_CONFIG: u8 = 1;
/// Exit code when a solver fails during the run.
const EXIT_SOLVER: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::ListPresets => {
            for (name, about) in PRESETS {
                println!("{name:6} {about}");
            }
            ExitCode::SUCCESS
        }
        Command::MeshInfo { config } => match load(&config) {
            Ok(cfg) => mesh_info(&cfg),
            Err(code) => code,
        },
        Command::Run { config } => match load(&config) {
            Ok(cfg) => run(cfg),
            Err(code) => code,
        },
    }
}

fn load(path: &Path) -> Result<RunConfig, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        error!("cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    let mut cfg = parse_config(&text).map_err(|e| {
        error!("{}: {e}", path.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        cfg.output_dir = PathBuf::from(dir);
    }
    Ok(cfg)
}

fn mesh_info(cfg: &RunConfig) -> ExitCode {
    let mesh = match cfg.spec.geometry.build(cfg.spec.h) {
        Ok(m) => m,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let (lo, hi) = mesh.bounding_box();
    let worst = (0..mesh.num_triangles()).map(|e| mesh.aspect_ratio(e)).fold(0.0, f64::max);
    println!("nodes      {}", mesh.num_nodes());
    println!("triangles  {}", mesh.num_triangles());
    println!("h          {}", mesh.h);
    println!("bounds     [{}, {}] x [{}, {}]", lo[0], hi[0], lo[1], hi[1]);
    println!("area       {:.6e}", mesh.total_area());
    println!("max aspect {worst:.3}");
    for (name, nodes) in &mesh.node_sets {
        println!("set {name:16} {} nodes", nodes.len());
    }
    ExitCode::SUCCESS
}

fn run(cfg: RunConfig) -> ExitCode {
    let problem = match cfg.spec.build() {
        Ok(p) => p,
        Err(e) => {
            error!("cannot set up `{}`: {e}", cfg.spec.name);
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(e) = prepare_dir(&cfg.output_dir) {
        error!("output directory {}: {e}", cfg.output_dir.display());
        return ExitCode::from(EXIT_CONFIG);
    }
    info!(
        "{}: {} nodes, {} load steps, driver {}",
        cfg.spec.name,
        problem.disc.num_nodes(),
        problem.schedule.len(),
        cfg.driver.as_str()
    );

    let mesh = problem.disc.mesh_arc();
    let dir = cfg.output_dir.clone();
    let io_error = RefCell::new(None);
    let mut seen_vigilance = false;
    let mut seen_crack = false;
    let mut observer = |r: &StepRecord, s: &FieldState| {
        let first_vigilance = r.vigilance && !seen_vigilance;
        let first_crack = r.accepted == UniverseLabel::Cracked && !seen_crack;
        seen_vigilance |= r.vigilance;
        seen_crack |= r.accepted == UniverseLabel::Cracked;
        if r.step % cfg.stride == 0 || first_vigilance || first_crack {
            let path = dir.join(format!("field_{:04}.vtk", r.step));
            if let Err(e) = write_vtk(&mesh, s, &path) {
                io_error.borrow_mut().get_or_insert(e);
            }
        }
    };
    let result: RunResult = match cfg.driver {
        DriverKind::ParallelUniverse => parallel_universe_run(&problem, Some(&mut observer)),
        DriverKind::Standard => standard_newton_run(&problem, Some(&mut observer)),
        DriverKind::Backtracking => backtracking_run(&problem, Some(&mut observer)),
    };
    let (trace, failure) = match result {
        Ok(t) => (t, None),
        Err(f) => {
            let failure = f.to_string();
            let f = *f;
            (f.trace, Some(failure))
        }
    };

    let mut written = write_trace_csv(&trace, &dir.join("trace.csv"))
        .and_then(|_| write_summary(&trace, cfg.spec.reference_load, &cfg.source, &dir.join("summary.txt")));
    if let (Ok(()), Some(last), Some(state)) = (&written, trace.records.last(), &trace.final_state) {
        written = write_vtk(&mesh, state, &dir.join(format!("field_{:04}.vtk", last.step)));
    }
    if let Some(e) = io_error.into_inner() {
        warn!("a field dump failed: {e}");
    }
    if let Err(e) = written {
        error!("writing results to {}: {e}", dir.display());
        return ExitCode::from(EXIT_SOLVER);
    }
    match failure {
        Some(msg) => {
            error!("{msg}");
            ExitCode::from(EXIT_SOLVER)
        }
        None => {
            let show = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:.6e}"));
            println!(
                "{} {}: vigilance {} acceptance {} nucleation {} ({:.1} s)",
                cfg.spec.name,
                cfg.driver.as_str(),
                show(trace.vigilance_load),
                show(trace.acceptance_load),
                show(trace.nucleation_load),
                trace.total_wall_s
            );
            ExitCode::SUCCESS
        }
    }
}
