//! Reference drivers: plain load stepping and backtracking.

use std::time::Instant;

use log::info;

use crate::assembly::{Energy, FieldState};
use crate::error::Error;
use crate::nucleation::{
    forward_run, DriverKind, Problem, RetraceEvent, RunFailure, RunResult, RunTrace, StepObserver,
    StepRecord, UniverseLabel, CRACK_THRESHOLD,
};
use crate::staggered::staggered_solve;

/// Relative margin a scaled solution must gain over a stored energy to
/// trigger a retrace.
pub const BACKTRACK_TOL: f64 = 1e-8;
pub const MAX_RESTARTS: usize = 100;

/// Each step starts from the previous converged state; the nucleation load
/// is the first load whose solution has a cracked node.
pub fn standard_newton_run(problem: &Problem, observer: Option<&mut StepObserver<'_>>) -> RunResult {
    forward_run(problem, DriverKind::Standard, observer)
}

/// Energy of the solution at load `t_i` transported to load `t_j` by
/// scaling its displacement: the elastic part scales with the load squared.
pub fn scaled_energy(energy: &Energy, t_i: f64, t_j: f64) -> f64 {
    let s = t_j / t_i;
    s * s * energy.elastic + energy.surface
}

struct Checkpoint {
    record: StepRecord,
    state: FieldState,
}

/// Load stepping that revisits earlier steps whenever a newer solution,
/// scaled back to an earlier load, beats the energy stored there.
pub fn backtracking_run(problem: &Problem, mut observer: Option<&mut StepObserver<'_>>) -> RunResult {
    let start = Instant::now();
    let mut trace = RunTrace::new(DriverKind::Backtracking);
    let fail = |trace: RunTrace, step: usize, load: f64, error: Error| {
        Err(Box::new(RunFailure { step, load, error, trace }))
    };
    if let Err(e) = problem.validate() {
        return fail(trace, 0, 0.0, e);
    }
    let disc = &problem.disc;
    let mat = &problem.mat;
    let settings = problem.off_settings();
    let loads = problem.schedule.loads();

    let mut checkpoints: Vec<Checkpoint> = Vec::with_capacity(loads.len());
    let mut pending: Option<FieldState> = None;
    let mut i = 0;
    while i < loads.len() {
        let load = loads[i];
        let init = match pending.take() {
            Some(g) => g,
            None => checkpoints
                .get(i.wrapping_sub(1))
                .map(|c| c.state.clone())
                .unwrap_or_else(|| FieldState::zeros(disc)),
        };
        let out = match staggered_solve(disc, &init, mat, load, &settings) {
            Ok(o) => o,
            Err(e) => {
                trace.records = checkpoints.into_iter().map(|c| c.record).collect();
                trace.total_wall_s = start.elapsed().as_secs_f64();
                return fail(trace, i, load, e);
            }
        };
        let sigma = match disc.max_principal_stress(&out.state, mat) {
            Ok(s) => s,
            Err(e) => return fail(trace, i, load, e),
        };
        let cracked = out.state.max_d() >= CRACK_THRESHOLD;
        let record = StepRecord {
            step: i,
            load,
            sigma_max: sigma,
            vigilance: false,
            crackless: (!cracked).then_some(out.energy),
            cracked: cracked.then_some(out.energy),
            accepted: if cracked { UniverseLabel::Cracked } else { UniverseLabel::Crackless },
            max_d: out.state.max_d(),
            stagger_iterations: out.iterations,
            max_energy_rise: out.max_energy_rise,
            wall_s: start.elapsed().as_secs_f64(),
        };
        if let Some(obs) = observer.as_mut() {
            obs(&record, &out.state);
        }
        checkpoints.truncate(i);
        checkpoints.push(Checkpoint {
            record,
            state: out.state,
        });

        // Optimality of the earlier steps against the new solution.
        let target = (0..i).find(|&j| {
            let stored = checkpoints[j].record.accepted_energy().total();
            loads[j] > 0.0 && scaled_energy(&out.energy, load, loads[j]) < stored - BACKTRACK_TOL * stored.abs()
        });
        if let Some(j) = target {
            if trace.retraces.len() >= MAX_RESTARTS {
                trace.records = checkpoints.into_iter().map(|c| c.record).collect();
                trace.total_wall_s = start.elapsed().as_secs_f64();
                return fail(trace, i, load, Error::BacktrackLimit(MAX_RESTARTS));
            }
            info!("retrace from load {load:.6e} (step {i}) to load {:.6e} (step {j})", loads[j]);
            trace.retraces.push(RetraceEvent {
                from_step: i,
                from_load: load,
                to_step: j,
                to_load: loads[j],
            });
            let current = &checkpoints[i].state;
            let s = loads[j] / load;
            pending = Some(FieldState {
                u: current.u.iter().map(|v| v * s).collect(),
                d: current.d.clone(),
            });
            i = j;
            continue;
        }

        if let Some(c) = &problem.fracture {
            if fracture_reached(problem, c, &checkpoints) {
                trace.complete_fracture_load = Some(load);
                info!("complete fracture at load {load:.6e}");
                break;
            }
        }
        i += 1;
    }

    trace.nucleation_load = checkpoints
        .iter()
        .find(|c| c.record.accepted == UniverseLabel::Cracked)
        .map(|c| c.record.load);
    trace.final_state = checkpoints.last().map(|c| c.state.clone());
    trace.records = checkpoints.into_iter().map(|c| c.record).collect();
    trace.total_wall_s = start.elapsed().as_secs_f64();
    Ok(trace)
}

fn fracture_reached(problem: &Problem, c: &crate::nucleation::FractureCriterion, cps: &[Checkpoint]) -> bool {
    let n = cps.len();
    if n <= c.plateau_steps {
        return false;
    }
    let last = cps[n - 1].record.accepted_energy().surface;
    let flat = (1..=c.plateau_steps).all(|k| {
        let a = cps[n - k].record.accepted_energy().surface;
        let b = cps[n - k - 1].record.accepted_energy().surface;
        (a - b).abs() <= c.plateau_tol * last.abs()
    });
    flat && c.is_spanned(&problem.disc, &cps[n - 1].state.d).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_energy_examples() {
        let e = Energy {
            elastic: 4.0,
            surface: 1.0,
        };
        assert_eq!(scaled_energy(&e, 2.0, 1.0), 2.0);
        assert_eq!(scaled_energy(&e, 2.0, 2.0), 5.0);
    }
}
