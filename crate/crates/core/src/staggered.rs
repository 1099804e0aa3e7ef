//! Alternating minimization of the total energy at a fixed load.
//!
//! The displacement subproblem is solved by Newton's method with a halving
//! line search (the energy is only piecewise quadratic in `u`). The phase
//! subproblem is quadratic, so one linear solve gives its unconstrained
//! minimizer, which is then projected onto the admissible box.

use crate::assembly::{Discretization, Energy, FieldState};
use crate::error::{Error, Result};
use crate::material::MaterialParams;

/// Lower bound on the phase field between load steps.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Irreversibility {
    #[default]
    Off,
    /// Nodal floor; the phase field never drops below it.
    LowerBound(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSettings {
    /// Relative change of the total energy over one alternation.
    pub tol_stagger: f64,
    /// Relative free-dof residual for the displacement Newton loop.
    pub tol_newton_u: f64,
    pub max_stagger: usize,
    pub max_newton_u: usize,
    pub irreversibility: Irreversibility,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            tol_stagger: 1e-6,
            tol_newton_u: 1e-8,
            max_stagger: 500,
            max_newton_u: 50,
            irreversibility: Irreversibility::Off,
        }
    }
}

impl SolveSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_stagger > 0.0) || !(self.tol_newton_u > 0.0) {
            return Err(Error::InvalidSchedule(
                "solver tolerances must be positive".into(),
            ));
        }
        if self.max_stagger == 0 || self.max_newton_u == 0 {
            return Err(Error::InvalidSchedule(
                "solver iteration caps must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_irreversibility(mut self, irr: Irreversibility) -> Self {
        self.irreversibility = irr;
        self
    }
}

/// Result of a converged staggered solve.
#[derive(Debug, Clone)]
pub struct StaggeredOutcome {
    pub state: FieldState,
    pub energy: Energy,
    /// Number of full u/d alternations performed.
    pub iterations: usize,
    /// Total energy after each alternation, starting with the entry value.
    pub energy_history: Vec<f64>,
    /// Largest relative increase of the total energy between alternations.
    pub max_energy_rise: f64,
}

/// Slack for accepting a line-search step whose energy is equal up to round-off.
const DESCENT_SLACK: f64 = 1e-14;
const MAX_HALVINGS: usize = 20;

/// Newton iterations on the displacement at fixed phase field. Constrained
/// dofs are set to their values at `load` before iterating.
pub fn solve_u_subproblem(
    disc: &Discretization,
    state: &FieldState,
    mat: &MaterialParams,
    load: f64,
    settings: &SolveSettings,
) -> Result<(FieldState, usize)> {
    disc.check_state(state)?;
    let mut st = state.clone();
    disc.apply_bc(&mut st, load);
    let zero_prescribed = vec![0.0; disc.num_u_dofs()];

    let mut r = disc.residual_u(&st, mat)?;
    let r0 = disc.free_norm(&r);
    let reference = r0.max(disc.reaction_norm(&r));
    let mut history = vec![r0];
    let mut pi = disc.energy(&st, mat)?.total();
    let mut iterations = 0;
    loop {
        let res = disc.free_norm(&r);
        if res <= settings.tol_newton_u * reference || reference == 0.0 {
            return Ok((st, iterations));
        }
        if iterations >= settings.max_newton_u {
            return Err(Error::NewtonDivergence {
                iterations,
                history,
            });
        }
        iterations += 1;
        let k = disc.tangent_u(&st, mat)?;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let du = disc.u_solver().solve(&k, &rhs, &zero_prescribed)?;

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut trial = st.clone();
            for (u, d) in trial.u.iter_mut().zip(&du) {
                *u += alpha * d;
            }
            let pi_trial = disc.energy(&trial, mat)?.total();
            if pi_trial <= pi + DESCENT_SLACK * pi.abs() {
                accepted = Some((trial, pi_trial));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, pi_trial)) => {
                st = trial;
                pi = pi_trial;
                r = disc.residual_u(&st, mat)?;
                history.push(disc.free_norm(&r));
            }
            None => {
                // No descent along the Newton direction: the iterate is
                // stationary to round-off unless the residual says otherwise.
                if res <= settings.tol_newton_u.sqrt() * reference {
                    return Ok((st, iterations));
                }
                return Err(Error::NewtonDivergence {
                    iterations,
                    history,
                });
            }
        }
    }
}

/// Minimizes over the phase field at fixed displacement, then projects onto
/// `[max(0, floor), 1]`. If projection raised the energy, an exact line
/// search between the entry and projected fields is taken instead.
pub fn solve_d_subproblem(
    disc: &Discretization,
    state: &FieldState,
    mat: &MaterialParams,
    settings: &SolveSettings,
) -> Result<FieldState> {
    disc.check_state(state)?;
    if let Irreversibility::LowerBound(floor) = &settings.irreversibility {
        if floor.len() != disc.num_nodes() {
            return Err(Error::SizeMismatch {
                what: "irreversibility floor",
                got: floor.len(),
                expected: disc.num_nodes(),
            });
        }
    }
    let k = disc.tangent_d(state, mat)?;
    // R_d is affine in d with Hessian K_d, so the minimizer solves K_d d = -R_d(0).
    let at_zero = FieldState {
        u: state.u.clone(),
        d: vec![0.0; disc.num_nodes()],
    };
    let rhs: Vec<f64> = disc.residual_d(&at_zero, mat)?.iter().map(|v| -v).collect();
    let mut d = disc
        .d_solver()
        .solve(&k, &rhs, &vec![0.0; disc.num_nodes()])?;
    project(&mut d, &settings.irreversibility, disc.intact_mask());

    let entry = &state.d;
    let entry_feasible = entry.iter().all(|&v| (0.0..=1.0).contains(&v))
        && entry.iter().zip(disc.intact_mask()).all(|(&v, &fixed)| !fixed || v == 0.0)
        && match &settings.irreversibility {
            Irreversibility::Off => true,
            Irreversibility::LowerBound(f) => entry.iter().zip(f).all(|(v, lo)| v >= lo),
        };
    let out = FieldState {
        u: state.u.clone(),
        d,
    };
    if !entry_feasible {
        return Ok(out);
    }
    // The objective in d is an exact quadratic, so both values and the
    // optimal step along the segment are available in closed form.
    let delta: Vec<f64> = out.d.iter().zip(entry).map(|(a, b)| a - b).collect();
    let g = disc.residual_d(state, mat)?;
    let slope: f64 = g.iter().zip(&delta).map(|(a, b)| a * b).sum();
    let curvature: f64 = k.mul_vec(&delta).iter().zip(&delta).map(|(a, b)| a * b).sum();
    let change = slope + 0.5 * curvature;
    if change <= 0.0 || curvature <= 0.0 {
        return Ok(out);
    }
    let t = (-slope / curvature).clamp(0.0, 1.0);
    let d = entry.iter().zip(&delta).map(|(a, b)| a + t * b).collect();
    Ok(FieldState { u: state.u.clone(), d })
}

fn project(d: &mut [f64], irr: &Irreversibility, intact: &[bool]) {
    for v in d.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    if let Irreversibility::LowerBound(floor) = irr {
        for (v, lo) in d.iter_mut().zip(floor) {
            *v = v.max(*lo).min(1.0);
        }
    }
    for (v, &fixed) in d.iter_mut().zip(intact) {
        if fixed {
            *v = 0.0;
        }
    }
}

/// Alternates displacement and phase solves until the total energy changes
/// by at most `tol_stagger` relative over one alternation.
pub fn staggered_solve(
    disc: &Discretization,
    init: &FieldState,
    mat: &MaterialParams,
    load: f64,
    settings: &SolveSettings,
) -> Result<StaggeredOutcome> {
    settings.validate()?;
    disc.check_state(init)?;
    if init.d.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidSchedule(
            "initial phase field must lie in [0, 1]".into(),
        ));
    }
    let mut st = init.clone();
    disc.apply_bc(&mut st, load);
    let mut pi = disc.energy(&st, mat)?.total();
    let mut history = vec![pi];
    let mut max_rise: f64 = 0.0;
    for it in 1..=settings.max_stagger {
        let (with_u, _) = solve_u_subproblem(disc, &st, mat, load, settings)?;
        st = solve_d_subproblem(disc, &with_u, mat, settings)?;
        let energy = disc.energy(&st, mat)?;
        let pi_new = energy.total();
        history.push(pi_new);
        if pi_new > pi {
            max_rise = max_rise.max((pi_new - pi) / pi.abs().max(f64::MIN_POSITIVE));
        }
        let converged = (pi_new - pi).abs() <= settings.tol_stagger * pi_new.abs();
        pi = pi_new;
        if converged {
            // Leave the displacement in equilibrium with the final phase field.
            let (u_final, _) = solve_u_subproblem(disc, &st, mat, load, settings)?;
            let energy = disc.energy(&u_final, mat)?;
            return Ok(StaggeredOutcome {
                state: u_final,
                energy,
                iterations: it,
                energy_history: history,
                max_energy_rise: max_rise,
            });
        }
    }
    Err(Error::StaggeredNonConvergence {
        iterations: settings.max_stagger,
        energy_history: history,
        last_state: Box::new(st),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::BcRule;
    use crate::linsolve::LinearSolverKind;
    use crate::material::ModelKind;
    use crate::mesh::generate_square;
    use std::sync::Arc;

    /// Unit square pulled vertically: bottom fixed in y, top displaced, one
    /// corner pinned in x.
    fn tension(h: f64) -> (Discretization, MaterialParams) {
        let mut mesh = generate_square(1.0, h, None).unwrap();
        let corner = mesh.node_set("bottom").unwrap()[0];
        mesh.node_sets.insert("pin".into(), vec![corner]);
        let rules = [
            BcRule::new("bottom", 1, 0.0),
            BcRule::new("pin", 0, 0.0),
            BcRule::new("top", 1, 1.0),
        ];
        let disc = Discretization::new(
            Arc::new(mesh),
            ModelKind::PlaneStrainVector,
            &rules,
            LinearSolverKind::Cholesky,
        )
        .unwrap();
        let mat = MaterialParams::plane_strain(1.0, 0.2, 1.0, 0.1).unwrap();
        (disc, mat)
    }

    /// Displacement at which a homogeneous bar of height 1 under uniaxial
    /// stress reaches the peak of the homogeneous damage response.
    fn critical_load(mat: &MaterialParams) -> f64 {
        (mat.gc / (3.0 * mat.plane_strain_modulus() * mat.ell)).sqrt()
    }

    #[test]
    fn elastic_solve_is_one_newton_step() {
        let (disc, mat) = tension(0.25);
        let st = FieldState::zeros(&disc);
        let (out, its) = solve_u_subproblem(&disc, &st, &mat, 1e-3, &SolveSettings::default()).unwrap();
        assert!(its <= 2, "{its}");
        let (again, its2) = solve_u_subproblem(&disc, &out, &mat, 1e-3, &SolveSettings::default()).unwrap();
        assert_eq!(its2, 0);
        assert_eq!(again, out);
        // Uniform vertical strain of 1e-3.
        let mesh = disc.mesh();
        for n in 0..mesh.num_nodes() {
            let y = mesh.nodes[n][1] + 0.5;
            assert!((out.u[2 * n + 1] - 1e-3 * y).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_solve_without_strain_gives_zero() {
        let (disc, mat) = tension(0.25);
        let mut st = FieldState::zeros(&disc);
        st.d.iter_mut().enumerate().for_each(|(i, d)| *d = (i % 3) as f64 * 0.3);
        let out = solve_d_subproblem(&disc, &st, &mat, &SolveSettings::default()).unwrap();
        assert!(out.d.iter().all(|&d| d.abs() < 1e-12));
    }

    #[test]
    fn phase_floor_is_respected() {
        let (disc, mat) = tension(0.25);
        let st = FieldState::zeros(&disc);
        let mut floor = vec![0.0; disc.num_nodes()];
        floor[4] = 0.5;
        let settings = SolveSettings::default().with_irreversibility(Irreversibility::LowerBound(floor));
        let out = solve_d_subproblem(&disc, &st, &mat, &settings).unwrap();
        assert_eq!(out.d[4], 0.5);
        assert!(out.d.iter().enumerate().all(|(i, &d)| i == 4 || d.abs() < 1e-12));
    }

    #[test]
    fn huge_driving_force_saturates_phase() {
        let (disc, mat) = tension(0.25);
        let mut st = FieldState::zeros(&disc);
        disc.apply_bc(&mut st, 1.0);
        let (st, _) = solve_u_subproblem(&disc, &st, &mat, 1e3, &SolveSettings::default()).unwrap();
        let out = solve_d_subproblem(&disc, &st, &mat, &SolveSettings::default()).unwrap();
        assert!(out.d.iter().all(|&d| d > 0.99 && d <= 1.0));
    }

    #[test]
    fn subcritical_and_supercritical_loads() {
        let (disc, mat) = tension(0.05);
        let uc = critical_load(&mat);
        let init = FieldState::zeros(&disc);
        let settings = SolveSettings::default();
        let low = staggered_solve(&disc, &init, &mat, 0.5 * uc, &settings).unwrap();
        assert!(low.state.max_d() < 0.5, "{}", low.state.max_d());
        assert!(low.max_energy_rise <= 1e-12);
        // A perfectly homogeneous bar stays homogeneous (d = 3/4 here), so
        // seed a weak band to let the crack localize.
        let mut seeded = init.clone();
        for (n, p) in disc.mesh().nodes.iter().enumerate() {
            if p[1].abs() < 1e-9 {
                seeded.d[n] = 0.05;
            }
        }
        let high = staggered_solve(&disc, &seeded, &mat, 3.0 * uc, &settings).unwrap();
        assert!(high.state.max_d() >= 0.9, "{}", high.state.max_d());
        assert!(high.max_energy_rise <= 1e-12);
        for d in &high.state.d {
            assert!((0.0..=1.0).contains(d));
        }
        // Stationary restart stops after one alternation.
        let again = staggered_solve(&disc, &high.state, &mat, 3.0 * uc, &settings).unwrap();
        assert_eq!(again.iterations, 1);
    }

    #[test]
    fn solves_are_deterministic() {
        let (disc, mat) = tension(0.1);
        let init = FieldState::zeros(&disc);
        let a = staggered_solve(&disc, &init, &mat, 0.3, &SolveSettings::default()).unwrap();
        let b = staggered_solve(&disc, &init, &mat, 0.3, &SolveSettings::default()).unwrap();
        assert_eq!(a.state, b.state);
        assert_eq!(a.energy_history, b.energy_history);
    }

    #[test]
    fn iteration_cap_reports_last_state() {
        let (disc, mat) = tension(0.1);
        let settings = SolveSettings {
            max_stagger: 1,
            ..SolveSettings::default()
        };
        let err = staggered_solve(&disc, &FieldState::zeros(&disc), &mat, 0.5, &settings).unwrap_err();
        match err {
            Error::StaggeredNonConvergence { energy_history, last_state, .. } => {
                assert_eq!(energy_history.len(), 2);
                assert_eq!(last_state.d.len(), disc.num_nodes());
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
