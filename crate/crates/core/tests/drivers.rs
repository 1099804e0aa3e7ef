//! Driver-level behaviour on small and benchmark problems.

use phasefrac::analysis::{crack_direction, crack_spans, orientation_gap};
use phasefrac::baselines::{backtracking_run, standard_newton_run};
use phasefrac::nucleation::{
    continue_cracked_guess, critical_stress, find_cracked_guess, parallel_universe_run, Universe, UniverseLabel,
    CRACK_THRESHOLD,
};
use phasefrac::presets::{homogeneous_critical_load, preset, ProblemSpec, HOMOGENEOUS_SIDE, STEEL_E, STEEL_GC};
use phasefrac::staggered::staggered_solve;
use phasefrac::{FieldState, Problem, RunTrace, StepRecord};

fn u_c() -> f64 {
    homogeneous_critical_load(STEEL_GC, HOMOGENEOUS_SIDE, STEEL_E)
}

/// Homogeneous square on a coarse mesh.
fn coarse_square() -> ProblemSpec {
    let mut spec = preset("ex3").unwrap();
    spec.h = 100.0;
    spec
}

fn states_of(problem: &Problem, run: fn(&Problem, Option<&mut phasefrac::nucleation::StepObserver<'_>>) -> phasefrac::nucleation::RunResult) -> (RunTrace, Vec<FieldState>) {
    let mut states = Vec::new();
    let mut obs = |_: &StepRecord, s: &FieldState| states.push(s.clone());
    let trace = run(problem, Some(&mut obs)).unwrap();
    (trace, states)
}

#[test]
fn parallel_universe_without_vigilance_follows_standard_newton() {
    let mut spec = coarse_square();
    spec.alpha = 1e-12;
    let problem = spec.build().unwrap();
    let (pu, pu_states) = states_of(&problem, parallel_universe_run);
    let (std, std_states) = states_of(&problem, standard_newton_run);
    assert!(pu.vigilance_load.is_none());
    let nucleation = std.records.iter().position(|r| r.accepted == UniverseLabel::Cracked).unwrap();
    // Up to and including standard nucleation the two traces coincide.
    for i in 0..=nucleation {
        let (a, b) = (&pu.records[i], &std.records[i]);
        assert_eq!(a.load, b.load);
        assert_eq!(a.accepted, b.accepted);
        assert_eq!(a.accepted_energy(), b.accepted_energy());
        assert_eq!(pu_states[i], std_states[i]);
    }
    assert_eq!(pu.nucleation_load, std.nucleation_load);
}

#[test]
fn acceptance_rule_and_single_switch() {
    let problem = coarse_square().build().unwrap();
    let trace = parallel_universe_run(&problem, None).unwrap();
    let switch = trace
        .records
        .iter()
        .position(|r| r.accepted == UniverseLabel::Cracked)
        .expect("a crack is accepted");
    for (i, r) in trace.records.iter().enumerate() {
        if i < switch {
            assert_eq!(r.accepted, UniverseLabel::Crackless);
            if let (Some(nc), Some(c)) = (r.crackless, r.cracked) {
                assert!(c.total() >= nc.total() * (1.0 - 1e-10));
            }
        } else {
            assert_eq!(r.accepted, UniverseLabel::Cracked);
            assert!(r.max_d >= CRACK_THRESHOLD);
        }
        if i > switch {
            assert!(r.crackless.is_none(), "crackless energy tracked after the switch");
        }
        if let Some(c) = r.cracked {
            assert!((c.total() - (c.elastic + c.surface)).abs() == 0.0);
        }
    }
    let acc = trace.acceptance_load.unwrap();
    assert_eq!(acc, trace.records[switch].load);
    assert!(trace.vigilance_load.unwrap() <= acc);
    assert!(trace.max_energy_rise() <= 1e-12);
}

#[test]
fn subcritical_schedule_never_cracks() {
    let mut spec = coarse_square();
    spec = spec.with_uniform_schedule(0.05 * u_c(), 6);
    let problem = spec.build().unwrap();
    for trace in [
        standard_newton_run(&problem, None).unwrap(),
        backtracking_run(&problem, None).unwrap(),
    ] {
        assert!(trace.records.iter().all(|r| r.accepted == UniverseLabel::Crackless));
        assert!(trace.nucleation_load.is_none());
        assert!(trace.retraces.is_empty());
    }
    let pu = parallel_universe_run(&problem, None).unwrap();
    assert!(pu.acceptance_load.is_none());
    assert!(pu.vigilance_load.is_none());
}

#[test]
fn linear_elastic_run_never_retraces() {
    let mut spec = coarse_square();
    spec.material.gc = 1e9;
    let problem = spec.with_uniform_schedule(0.1 * u_c(), 20).build().unwrap();
    let trace = backtracking_run(&problem, None).unwrap();
    assert!(trace.retraces.is_empty());
    assert!(trace.records.iter().all(|r| r.max_d < 1e-3));
}

#[test]
fn backtracking_improves_on_standard_and_matches_parallel_universe() {
    let mut spec = coarse_square();
    // Converge well below the 1e-6 agreement being checked.
    spec.settings.tol_stagger = 1e-10;
    let problem = spec.build().unwrap();
    let std = standard_newton_run(&problem, None).unwrap();
    let bt = backtracking_run(&problem, None).unwrap();
    let pu = parallel_universe_run(&problem, None).unwrap();
    assert!(!bt.retraces.is_empty());
    for (b, s) in bt.records.iter().zip(&std.records) {
        assert_eq!(b.load, s.load);
        let (eb, es) = (b.accepted_energy().total(), s.accepted_energy().total());
        assert!(eb <= es + 1e-12 * es.abs(), "load {}: {eb} > {es}", b.load);
    }
    for (b, p) in bt.records.iter().zip(&pu.records) {
        let (eb, ep) = (b.accepted_energy().total(), p.accepted_energy().total());
        assert!((eb - ep).abs() <= 1e-6 * ep.abs(), "load {}: {eb} vs {ep}", b.load);
    }
}

/// Cracked-guess search as the driver runs it: from `first` on, a guess that
/// heals once `Gc` is restored is continued from its seed at the next load.
/// Returns the load, the cracked universe and the crackless energy there.
fn guess_until_cracked(problem: &Problem, first: usize, start: &FieldState) -> (f64, Universe, f64) {
    let loads = problem.schedule.loads();
    let mut nc = start.clone();
    let mut seed: Option<(FieldState, f64)> = None;
    for &load in &loads[first..] {
        let out = staggered_solve(&problem.disc, &nc, &problem.mat, load, &problem.settings).unwrap();
        nc = out.state;
        let guess = match seed.take() {
            Some((s, gc)) => continue_cracked_guess(&problem.disc, &s, &problem.mat, gc, load, &problem.settings, &problem.guess),
            None => find_cracked_guess(&problem.disc, &nc, &problem.mat, load, &problem.settings, &problem.guess),
        }
        .unwrap();
        if guess.universe.label == UniverseLabel::Cracked {
            assert!(guess.universe.state.max_d() >= CRACK_THRESHOLD);
            return (load, guess.universe, out.energy.total());
        }
        assert!(guess.universe.state.max_d() < CRACK_THRESHOLD);
        seed = Some((guess.seed, guess.seed_gc));
    }
    panic!("no cracked guess within the schedule");
}

#[test]
fn cracked_guess_on_the_homogeneous_square() {
    let uc = u_c();
    let mut spec = preset("ex3").unwrap();
    spec.loads.truncate(40);
    let problem = spec.build().unwrap();
    // Vigilance step of the parallel-universe run.
    let trace = parallel_universe_run(&problem, None).unwrap();
    let vig = trace.vigilance_load.unwrap();
    let first = problem.schedule.loads().iter().position(|&l| l == vig).unwrap();
    let (load, universe, pi_nc) = guess_until_cracked(&problem, first, &FieldState::zeros(&problem.disc));
    assert!(load < trace.acceptance_load.unwrap());
    assert!(load <= uc);
    let d = &universe.state.d;
    let mesh = problem.disc.mesh();
    // A single transverse band.
    assert!(crack_spans(mesh, d, CRACK_THRESHOLD, "left", "right", None).unwrap());
    let dir = crack_direction(mesh, d, CRACK_THRESHOLD, -500.0, 500.0).unwrap();
    assert!(orientation_gap(dir, 0.0) < 5.0, "band at {dir} deg");
    // Not yet preferable to the crackless state at this load.
    assert!(universe.pi_total() > pi_nc);
}

#[test]
fn fiber_composite_guess_is_a_horizontal_band() {
    let mut spec = preset("ex1").unwrap();
    spec.loads.truncate(60);
    let problem = spec.build().unwrap();
    let first = problem.schedule.loads().iter().position(|&l| (l - 0.125).abs() < 1e-9).unwrap();
    let mut prefix = spec.clone();
    prefix.loads.truncate(first);
    let before = standard_newton_run(&prefix.build().unwrap(), None).unwrap();
    let (_, universe, _) = guess_until_cracked(&problem, first, &before.final_state.unwrap());
    let mesh = problem.disc.mesh();
    let d = &universe.state.d;
    let dir = crack_direction(mesh, d, CRACK_THRESHOLD, -1.5, 1.5).unwrap();
    assert!(orientation_gap(dir, 0.0) < 20.0, "band at {dir} deg");
    // The band passes the fiber at its sides, not above or below it.
    let cracked: Vec<[f64; 2]> = mesh
        .nodes
        .iter()
        .zip(d)
        .filter(|(_, &v)| v >= CRACK_THRESHOLD)
        .map(|(p, _)| *p)
        .collect();
    assert!(cracked.iter().all(|p| p[1].abs() < 0.5), "band off the fiber sides: {cracked:?}");
    assert!(cracked.iter().any(|p| p[0].abs() > 0.5), "band off the fiber sides: {cracked:?}");
}

#[test]
fn holed_square_vigilance_load() {
    let mut spec = preset("ex2").unwrap();
    spec.loads.truncate(24);
    let problem = spec.build().unwrap();
    let threshold = critical_stress(&problem.mat) / problem.alpha;
    let trace = standard_newton_run(&problem, None).unwrap();
    let fired = trace.records.iter().find(|r| r.sigma_max >= threshold).map(|r| r.load);
    let step = 0.005;
    let v = fired.expect("vigilance fires below 0.12 mm");
    assert!((v - 0.092).abs() <= step, "vigilance at {v} mm");
}
