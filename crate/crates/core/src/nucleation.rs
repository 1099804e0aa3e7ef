//! Crack nucleation by tracking a crackless and a cracked candidate in
//! parallel, plus the load-stepping bookkeeping shared with the baselines.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::{debug, info, warn};

use crate::analysis;
use crate::assembly::{Discretization, Energy, FieldState};
use crate::error::{Error, Result};
use crate::material::{MaterialParams, ModelKind};
use crate::staggered::{staggered_solve, Irreversibility, SolveSettings, StaggeredOutcome};

/// Relative margin by which the cracked energy must undercut the crackless one.
pub const SWITCH_TOL: f64 = 1e-10;
/// Phase value that counts as cracked.
pub const CRACK_THRESHOLD: f64 = 0.9;

/// Tensile strength of the homogeneous AT2 response in plane strain.
pub fn sigma_c(mat: &MaterialParams) -> f64 {
    (27.0 * mat.gc * mat.youngs / (256.0 * mat.ell * (1.0 - mat.poisson * mat.poisson))).sqrt()
}

/// Strength used by the vigilance test: [`sigma_c`] in plane strain, and the
/// analogous shear strength (with `2 mu` in place of the plane-strain
/// modulus) in anti-plane shear.
pub fn critical_stress(mat: &MaterialParams) -> f64 {
    match mat.kind {
        ModelKind::PlaneStrainVector => sigma_c(mat),
        ModelKind::AntiPlaneScalar => (27.0 * mat.gc * 2.0 * mat.shear / (256.0 * mat.ell)).sqrt(),
    }
}

/// Returns whether the stress measure reaches `critical_stress / alpha`,
/// together with the measured maximum.
pub fn vigilance_triggered(
    disc: &Discretization,
    state: &FieldState,
    mat: &MaterialParams,
    alpha: f64,
) -> Result<(bool, f64)> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidSchedule(format!("safety factor must be positive, got {alpha}")));
    }
    let smax = disc.max_principal_stress(state, mat)?;
    Ok((smax >= critical_stress(mat) / alpha, smax))
}

/// Sufficient condition for the vigilance load not to exceed the critical
/// load of a square of side `length` with stress concentration `k_conc`.
pub fn check_applicability(length: f64, mat: &MaterialParams, k_conc: f64, alpha: f64) -> bool {
    length / mat.ell <= applicability_bound(mat, k_conc, alpha)
}

/// Largest admissible `L / ell` for [`check_applicability`].
pub fn applicability_bound(mat: &MaterialParams, k_conc: f64, alpha: f64) -> f64 {
    512.0 * (1.0 - mat.poisson * mat.poisson) * k_conc * k_conc * alpha * alpha / 27.0
}

/// Strictly increasing, non-negative load factors.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSchedule {
    loads: Vec<f64>,
}

impl LoadSchedule {
    pub fn new(loads: Vec<f64>) -> Result<Self> {
        if loads.is_empty() {
            return Err(Error::InvalidSchedule("load schedule is empty".into()));
        }
        if !(loads[0] >= 0.0) {
            return Err(Error::InvalidSchedule(format!("first load must be non-negative, got {}", loads[0])));
        }
        if let Some(w) = loads.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSchedule(format!(
                "loads must increase strictly ({} followed by {})",
                w[0], w[1]
            )));
        }
        Ok(LoadSchedule { loads })
    }

    /// `n` equal increments of `step`, starting at `step`.
    pub fn uniform(step: f64, n: usize) -> Result<Self> {
        if !(step > 0.0) || n == 0 {
            return Err(Error::InvalidSchedule(format!(
                "uniform schedule needs step > 0 and at least one step (step = {step}, n = {n})"
            )));
        }
        Self::new((1..=n).map(|i| i as f64 * step).collect())
    }

    pub fn loads(&self) -> &[f64] {
        &self.loads
    }

    pub fn len(&self) -> usize {
        self.loads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loads.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniverseLabel {
    Crackless,
    Cracked,
}

impl fmt::Display for UniverseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UniverseLabel::Crackless => "crackless",
            UniverseLabel::Cracked => "cracked",
        })
    }
}

/// One candidate solution at the current load.
#[derive(Debug, Clone)]
pub struct Universe {
    pub state: FieldState,
    pub energy: Energy,
    pub label: UniverseLabel,
    pub converged: bool,
}

impl Universe {
    pub fn pi_total(&self) -> f64 {
        self.energy.total()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriverKind {
    ParallelUniverse,
    Standard,
    Backtracking,
}

impl DriverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DriverKind::ParallelUniverse => "parallel_universe",
            DriverKind::Standard => "standard",
            DriverKind::Backtracking => "backtracking",
        }
    }
}

impl fmt::Display for DriverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DriverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "parallel_universe" => Ok(DriverKind::ParallelUniverse),
            "standard" => Ok(DriverKind::Standard),
            "backtracking" => Ok(DriverKind::Backtracking),
            other => Err(format!(
                "unknown driver `{other}` (expected parallel_universe, standard or backtracking)"
            )),
        }
    }
}

/// Per-step result.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub load: f64,
    pub sigma_max: f64,
    /// The vigilance criterion has fired at or before this step.
    pub vigilance: bool,
    pub crackless: Option<Energy>,
    pub cracked: Option<Energy>,
    pub accepted: UniverseLabel,
    pub max_d: f64,
    pub stagger_iterations: usize,
    /// Largest relative energy increase between alternations in any solve of this step.
    pub max_energy_rise: f64,
    /// Seconds since the start of the run.
    pub wall_s: f64,
}

impl StepRecord {
    pub fn accepted_energy(&self) -> Energy {
        match self.accepted {
            UniverseLabel::Crackless => self.crackless,
            UniverseLabel::Cracked => self.cracked,
        }
        .unwrap_or_default()
    }
}

/// A restart of the backtracking driver.
#[derive(Debug, Clone, PartialEq)]
pub struct RetraceEvent {
    pub from_step: usize,
    pub from_load: f64,
    pub to_step: usize,
    pub to_load: f64,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub driver: DriverKind,
    pub records: Vec<StepRecord>,
    pub vigilance_load: Option<f64>,
    /// First load at which the cracked candidate was accepted.
    pub acceptance_load: Option<f64>,
    /// Acceptance load for the parallel-universe driver, otherwise the first
    /// load whose solution has a cracked node.
    pub nucleation_load: Option<f64>,
    pub complete_fracture_load: Option<f64>,
    pub cracked_guess_stages: Option<usize>,
    pub retraces: Vec<RetraceEvent>,
    /// Non-fatal warnings (e.g. a failed applicability check).
    pub advisories: Vec<String>,
    pub total_wall_s: f64,
    pub final_state: Option<FieldState>,
}

impl RunTrace {
    pub fn new(driver: DriverKind) -> Self {
        RunTrace {
            driver,
            records: Vec::new(),
            vigilance_load: None,
            acceptance_load: None,
            nucleation_load: None,
            complete_fracture_load: None,
            cracked_guess_stages: None,
            retraces: Vec::new(),
            advisories: Vec::new(),
            total_wall_s: 0.0,
            final_state: None,
        }
    }

    pub fn max_energy_rise(&self) -> f64 {
        self.records.iter().map(|r| r.max_energy_rise).fold(0.0, f64::max)
    }
}

/// Run stopped by a solver failure; carries everything computed before it.
#[derive(Debug, thiserror::Error)]
#[error("run aborted at step {step} (load {load}): {error}")]
pub struct RunFailure {
    pub step: usize,
    pub load: f64,
    #[source]
    pub error: Error,
    pub trace: RunTrace,
}

pub type RunResult = std::result::Result<RunTrace, Box<RunFailure>>;

/// Callback invoked with each step record and its accepted state.
pub type StepObserver<'a> = dyn FnMut(&StepRecord, &FieldState) + 'a;

/// When a run counts as completely fractured.
#[derive(Debug, Clone, PartialEq)]
pub struct FractureCriterion {
    /// Pairs of boundary sets; the run is fractured once one cracked
    /// component connects the two sets of any pair.
    pub spans: Vec<(String, String)>,
    /// Node set that joins the cracked regions touching it (an inclusion).
    pub bridge: Option<String>,
    pub plateau_tol: f64,
    pub plateau_steps: usize,
}

impl FractureCriterion {
    pub fn spanning(pairs: &[(&str, &str)], bridge: Option<&str>) -> Self {
        FractureCriterion {
            spans: pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            bridge: bridge.map(str::to_string),
            plateau_tol: 1e-6,
            plateau_steps: 3,
        }
    }

    pub fn is_spanned(&self, disc: &Discretization, d: &[f64]) -> Result<bool> {
        for (a, b) in &self.spans {
            if analysis::crack_spans(disc.mesh(), d, CRACK_THRESHOLD, a, b, self.bridge.as_deref())? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Tracks the surface-energy plateau of consecutive accepted states.
#[derive(Debug, Clone)]
struct FractureMonitor {
    criterion: Option<FractureCriterion>,
    surface: Vec<f64>,
}

impl FractureMonitor {
    fn new(criterion: Option<FractureCriterion>) -> Self {
        FractureMonitor {
            criterion,
            surface: Vec::new(),
        }
    }

    /// Records the accepted state of the next step; true once fractured.
    fn update(&mut self, disc: &Discretization, state: &FieldState, energy: &Energy) -> Result<bool> {
        self.surface.push(energy.surface);
        let Some(c) = &self.criterion else {
            return Ok(false);
        };
        let n = self.surface.len();
        if n <= c.plateau_steps {
            return Ok(false);
        }
        let last = self.surface[n - 1];
        let flat = (1..=c.plateau_steps).all(|k| {
            let (a, b) = (self.surface[n - k], self.surface[n - k - 1]);
            (a - b).abs() <= c.plateau_tol * last.abs()
        });
        Ok(flat && c.is_spanned(disc, &state.d)?)
    }
}

/// Continuation parameters for the cracked initial guess.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuessSettings {
    /// Factor applied to `Gc` at each stage.
    pub rho: f64,
    pub max_stages: usize,
    pub threshold: f64,
}

impl Default for GuessSettings {
    fn default() -> Self {
        GuessSettings {
            rho: 0.9,
            max_stages: 60,
            threshold: CRACK_THRESHOLD,
        }
    }
}

/// A fully specified simulation.
#[derive(Debug, Clone)]
pub struct Problem {
    pub disc: Discretization,
    pub mat: MaterialParams,
    pub schedule: LoadSchedule,
    pub settings: SolveSettings,
    /// Safety factor of the vigilance criterion.
    pub alpha: f64,
    pub guess: GuessSettings,
    pub fracture: Option<FractureCriterion>,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        self.mat.validate()?;
        self.settings.validate()?;
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "safety factor must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.guess.rho > 0.0 && self.guess.rho < 1.0) || self.guess.max_stages == 0 {
            return Err(Error::InvalidSchedule(
                "cracked-guess reduction factor must lie in (0, 1) with at least one stage".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn off_settings(&self) -> SolveSettings {
        self.settings.clone().with_irreversibility(Irreversibility::Off)
    }
}

/// Outcome of [`find_cracked_guess`].
#[derive(Debug, Clone)]
pub struct CrackedGuess {
    pub universe: Universe,
    pub stages: usize,
    pub iterations: usize,
    pub max_energy_rise: f64,
    /// Localized state at the reduced toughness, before `Gc` was restored.
    pub seed: FieldState,
    /// Reduced toughness at which `seed` was obtained.
    pub seed_gc: f64,
}

/// Lowers `Gc` geometrically and re-solves from the latest state until a
/// node reaches `threshold`, then restores `Gc` and solves once more.
pub fn find_cracked_guess(
    disc: &Discretization,
    state: &FieldState,
    mat: &MaterialParams,
    load: f64,
    settings: &SolveSettings,
    guess: &GuessSettings,
) -> Result<CrackedGuess> {
    continue_cracked_guess(disc, state, mat, mat.gc * guess.rho, load, settings, guess)
}

/// Same search started from `state` at the reduced toughness `gc`, e.g. the
/// seed of an earlier guess that healed once `Gc` was restored.
pub fn continue_cracked_guess(
    disc: &Discretization,
    state: &FieldState,
    mat: &MaterialParams,
    gc: f64,
    load: f64,
    settings: &SolveSettings,
    guess: &GuessSettings,
) -> Result<CrackedGuess> {
    let settings = settings.clone().with_irreversibility(Irreversibility::Off);
    let mut st = state.clone();
    let mut gc = gc;
    let mut iterations = 0;
    let mut rise: f64 = 0.0;
    for stage in 1..=guess.max_stages {
        if stage > 1 {
            gc *= guess.rho;
        }
        let reduced = mat.with_gc(gc);
        st = match staggered_solve(disc, &st, &reduced, load, &settings) {
            Ok(out) => {
                iterations += out.iterations;
                rise = rise.max(out.max_energy_rise);
                out.state
            }
            // Intermediate stages only shape the guess; an unconverged iterate will do.
            Err(Error::StaggeredNonConvergence { iterations: it, last_state, .. }) => {
                iterations += it;
                debug!("cracked-guess stage {stage} stopped at the iteration cap");
                *last_state
            }
            Err(e) => return Err(e),
        };
        debug!("cracked-guess stage {stage}: Gc = {gc:.4e}, max d = {:.4}", st.max_d());
        if st.max_d() >= guess.threshold {
            let out = staggered_solve(disc, &st, mat, load, &settings)?;
            iterations += out.iterations;
            rise = rise.max(out.max_energy_rise);
            // The restored solve may heal the localized band.
            let label = if out.state.max_d() >= guess.threshold {
                UniverseLabel::Cracked
            } else {
                UniverseLabel::Crackless
            };
            return Ok(CrackedGuess {
                universe: Universe {
                    state: out.state,
                    energy: out.energy,
                    label,
                    converged: true,
                },
                stages: stage,
                iterations,
                max_energy_rise: rise,
                seed: st,
                seed_gc: gc,
            });
        }
    }
    Err(Error::CrackedGuessNotFound {
        stages: guess.max_stages,
        max_d: st.max_d(),
    })
}

/// Parallel-universe load stepping.
pub fn parallel_universe_run(problem: &Problem, observer: Option<&mut StepObserver<'_>>) -> RunResult {
    forward_run(problem, DriverKind::ParallelUniverse, observer)
}

/// Shared forward loop. With `DriverKind::Standard` the cracked branch is
/// never created, which reduces the loop to plain load stepping.
pub(crate) fn forward_run(problem: &Problem, driver: DriverKind, mut observer: Option<&mut StepObserver<'_>>) -> RunResult {
    let start = Instant::now();
    let mut trace = RunTrace::new(driver);
    let enable_cracked = driver == DriverKind::ParallelUniverse;
    if let Err(e) = problem.validate() {
        return Err(Box::new(RunFailure { step: 0, load: 0.0, error: e, trace }));
    }
    let disc = &problem.disc;
    let mat = &problem.mat;
    if enable_cracked && mat.kind == ModelKind::PlaneStrainVector {
        let length = disc.mesh().extent();
        if !check_applicability(length, mat, 1.0, problem.alpha) {
            let msg = format!(
                "applicability check failed: L/ell = {:.3} exceeds {:.3}; the vigilance load may exceed the critical load",
                length / mat.ell,
                applicability_bound(mat, 1.0, problem.alpha)
            );
            warn!("{msg}");
            trace.advisories.push(msg);
        }
    }
    let off = problem.off_settings();
    let vigilance_stress = critical_stress(mat) / problem.alpha;

    let mut crackless = Some(FieldState::zeros(disc));
    let mut cracked: Option<FieldState> = None;
    let mut seed: Option<(FieldState, f64)> = None;
    let mut monitor = FractureMonitor::new(problem.fracture.clone());

    for (step, &load) in problem.schedule.loads().iter().enumerate() {
        let result = forward_step(
            problem,
            enable_cracked,
            &off,
            vigilance_stress,
            step,
            load,
            &mut crackless,
            &mut cracked,
            &mut seed,
            &mut trace,
        );
        let (mut record, accepted) = match result {
            Ok(v) => v,
            Err(error) => {
                trace.total_wall_s = start.elapsed().as_secs_f64();
                return Err(Box::new(RunFailure { step, load, error, trace }));
            }
        };
        record.wall_s = start.elapsed().as_secs_f64();
        info!(
            "step {step} load {load:.6e}: accepted {} Pi = {:.6e}, max d = {:.3}, sigma_max = {:.4e}",
            record.accepted,
            record.accepted_energy().total(),
            record.max_d,
            record.sigma_max
        );
        if let Some(obs) = observer.as_mut() {
            obs(&record, &accepted);
        }
        let fractured = match monitor.update(disc, &accepted, &record.accepted_energy()) {
            Ok(f) => f,
            Err(error) => {
                trace.records.push(record);
                return Err(Box::new(RunFailure { step, load, error, trace }));
            }
        };
        trace.records.push(record);
        trace.final_state = Some(accepted);
        if fractured {
            trace.complete_fracture_load = Some(load);
            info!("complete fracture at load {load:.6e}");
            break;
        }
    }
    trace.total_wall_s = start.elapsed().as_secs_f64();
    Ok(trace)
}

#[allow(clippy::too_many_arguments)]
fn forward_step(
    problem: &Problem,
    enable_cracked: bool,
    off: &SolveSettings,
    vigilance_stress: f64,
    step: usize,
    load: f64,
    crackless: &mut Option<FieldState>,
    cracked: &mut Option<FieldState>,
    seed: &mut Option<(FieldState, f64)>,
    trace: &mut RunTrace,
) -> Result<(StepRecord, FieldState)> {
    let disc = &problem.disc;
    let mat = &problem.mat;
    let Some(nc_prev) = crackless.as_ref() else {
        // Only the cracked universe is alive; heal-free propagation.
        let prev = cracked.as_ref().expect("a live universe");
        let settings = problem
            .settings
            .clone()
            .with_irreversibility(Irreversibility::LowerBound(prev.d.clone()));
        let out = staggered_solve(disc, prev, mat, load, &settings)?;
        let sigma = disc.max_principal_stress(&out.state, mat)?;
        let record = StepRecord {
            step,
            load,
            sigma_max: sigma,
            vigilance: trace.vigilance_load.is_some(),
            crackless: None,
            cracked: Some(out.energy),
            accepted: UniverseLabel::Cracked,
            max_d: out.state.max_d(),
            stagger_iterations: out.iterations,
            max_energy_rise: out.max_energy_rise,
            wall_s: 0.0,
        };
        *cracked = Some(out.state.clone());
        return Ok((record, out.state));
    };

    let nc: StaggeredOutcome = staggered_solve(disc, nc_prev, mat, load, off)?;
    let sigma = disc.max_principal_stress(&nc.state, mat)?;
    let mut iterations = nc.iterations;
    let mut rise = nc.max_energy_rise;

    let mut candidate: Option<(FieldState, Energy)> = None;
    if enable_cracked {
        if trace.vigilance_load.is_none() && sigma >= vigilance_stress {
            info!("vigilance criterion fired at load {load:.6e} (sigma_max = {sigma:.4e})");
            trace.vigilance_load = Some(load);
        }
        if let Some(c_prev) = cracked.as_ref() {
            let c = staggered_solve(disc, c_prev, mat, load, off)?;
            iterations += c.iterations;
            rise = rise.max(c.max_energy_rise);
            candidate = Some((c.state, c.energy));
        } else if trace.vigilance_load.is_some() {
            let guess = match seed.take() {
                Some((st, gc)) => continue_cracked_guess(disc, &st, mat, gc, load, off, &problem.guess)?,
                None => find_cracked_guess(disc, &nc.state, mat, load, off, &problem.guess)?,
            };
            info!(
                "cracked guess after {} stages: Pi_c = {:.6e} vs Pi_nc = {:.6e}, max d = {:.3}",
                guess.stages,
                guess.universe.pi_total(),
                nc.energy.total(),
                guess.universe.state.max_d()
            );
            iterations += guess.iterations;
            rise = rise.max(guess.max_energy_rise);
            trace.cracked_guess_stages = Some(trace.cracked_guess_stages.unwrap_or(0) + guess.stages);
            *seed = Some((guess.seed, guess.seed_gc));
            candidate = Some((guess.universe.state, guess.universe.energy));
        }
        // A candidate that healed with the full toughness has merged with the
        // crackless universe; the search resumes from its seed at the next load.
        if candidate.as_ref().is_some_and(|(s, _)| s.max_d() < problem.guess.threshold) {
            info!("cracked candidate healed at load {load:.6e}; searching again at the next load");
            candidate = None;
        }
    }

    let switch = candidate
        .as_ref()
        .is_some_and(|(_, e)| e.total() < nc.energy.total() * (1.0 - SWITCH_TOL));
    // The crackless branch localized on its own (a stress singularity can do
    // that); it is the cracked universe from here on.
    let self_nucleated = enable_cracked && !switch && nc.state.max_d() >= CRACK_THRESHOLD;
    if self_nucleated {
        info!("crackless universe nucleated a crack at load {load:.6e}");
        candidate = Some((nc.state.clone(), nc.energy));
    }
    let cracked_energy = candidate.as_ref().map(|(_, e)| *e);
    let (accepted, label, accepted_state) = if switch || self_nucleated {
        let (state, _) = candidate.take().expect("candidate present");
        trace.acceptance_load = Some(load);
        trace.nucleation_load = Some(load);
        info!("cracked universe accepted at load {load:.6e}");
        *crackless = None;
        *cracked = Some(state.clone());
        (cracked_energy, UniverseLabel::Cracked, state)
    } else {
        *crackless = Some(nc.state.clone());
        *cracked = candidate.map(|(s, _)| s);
        let label = if !enable_cracked && nc.state.max_d() >= CRACK_THRESHOLD {
            if trace.nucleation_load.is_none() {
                trace.nucleation_load = Some(load);
                info!("crack nucleated at load {load:.6e}");
            }
            UniverseLabel::Cracked
        } else {
            UniverseLabel::Crackless
        };
        (Some(nc.energy), label, nc.state)
    };
    let (crackless_energy, cracked_energy) = match (enable_cracked, label) {
        (true, _) => (Some(nc.energy), cracked_energy),
        (false, UniverseLabel::Crackless) => (accepted, None),
        (false, UniverseLabel::Cracked) => (None, accepted),
    };
    let sigma_max = if switch {
        disc.max_principal_stress(&accepted_state, mat)?
    } else {
        sigma
    };
    let record = StepRecord {
        step,
        load,
        sigma_max,
        vigilance: trace.vigilance_load.is_some(),
        crackless: crackless_energy,
        cracked: cracked_energy,
        accepted: label,
        max_d: accepted_state.max_d(),
        stagger_iterations: iterations,
        max_energy_rise: rise,
        wall_s: 0.0,
    };
    Ok((record, accepted_state))
}
