//! Plain-data problem descriptions and the built-in benchmark presets.
//!
//! Plane-strain presets use N, mm and MPa; the composite and anti-plane
//! presets are non-dimensional.

use std::path::PathBuf;
use std::sync::Arc;

use crate::assembly::{BcRule, Discretization};
use crate::error::{Error, Result};
use crate::linsolve::LinearSolverKind;
use crate::material::{MaterialParams, ModelKind, DEFAULT_K_RES};
use crate::mesh::{self, Mesh};
use crate::nucleation::{FractureCriterion, GuessSettings, LoadSchedule, Problem};
use crate::staggered::SolveSettings;

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// `(-L/2, L/2)^2`, optionally with a central circular hole.
    Square { side: f64, hole: Option<f64> },
    /// Square with a rigid central fiber; interface set `fiber`.
    FiberComposite { side: f64, radius: f64 },
    /// Square whose top edge is split at `x = 0` into two halves.
    SplitTopSquare { side: f64 },
    /// Mesh read from a text file.
    File(PathBuf),
}

impl Geometry {
    pub fn build(&self, h: f64) -> Result<Mesh> {
        match self {
            Geometry::Square { side, hole } => mesh::generate_square(*side, h, *hole),
            Geometry::FiberComposite { side, radius } => mesh::generate_fiber_composite(*side, *radius, h),
            Geometry::SplitTopSquare { side } => mesh::split_top_edge(&mesh::generate_square(*side, h, None)?),
            Geometry::File(path) => mesh::read_mesh(&std::fs::read_to_string(path)?),
        }
    }

    /// Characteristic domain size used for reporting.
    pub fn side(&self) -> Option<f64> {
        match self {
            Geometry::Square { side, .. }
            | Geometry::FiberComposite { side, .. }
            | Geometry::SplitTopSquare { side } => Some(*side),
            Geometry::File(_) => None,
        }
    }
}

/// Material constants as given by the user (angle in degrees).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialSpec {
    pub kind: ModelKind,
    pub youngs: f64,
    pub poisson: f64,
    pub shear: f64,
    pub gc: f64,
    pub ell: f64,
    pub k_res: f64,
    pub xi: f64,
    pub beta_deg: f64,
}

impl MaterialSpec {
    pub fn plane_strain(youngs: f64, poisson: f64, gc: f64, ell: f64) -> Self {
        MaterialSpec {
            kind: ModelKind::PlaneStrainVector,
            youngs,
            poisson,
            shear: youngs / (2.0 * (1.0 + poisson)),
            gc,
            ell,
            k_res: DEFAULT_K_RES,
            xi: 0.0,
            beta_deg: 0.0,
        }
    }

    pub fn anti_plane(shear: f64, gc: f64, ell: f64, xi: f64, beta_deg: f64) -> Self {
        MaterialSpec {
            kind: ModelKind::AntiPlaneScalar,
            youngs: 2.0 * shear,
            poisson: 0.0,
            shear,
            gc,
            ell,
            k_res: DEFAULT_K_RES,
            xi,
            beta_deg,
        }
    }

    pub fn build(&self) -> Result<MaterialParams> {
        let base = match self.kind {
            ModelKind::PlaneStrainVector => MaterialParams::plane_strain(self.youngs, self.poisson, self.gc, self.ell)?,
            ModelKind::AntiPlaneScalar => MaterialParams::anti_plane(self.shear, self.gc, self.ell)?,
        };
        base.with_residual_stiffness(self.k_res)?
            .with_anisotropy(self.xi, self.beta_deg.to_radians())
    }
}

/// Everything needed to build a [`Problem`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub geometry: Geometry,
    pub h: f64,
    pub material: MaterialSpec,
    pub bc: Vec<BcRule>,
    /// Node sets where the phase field is held at zero.
    pub intact: Vec<String>,
    pub loads: Vec<f64>,
    pub settings: SolveSettings,
    pub alpha: f64,
    pub guess: GuessSettings,
    pub fracture: Option<FractureCriterion>,
    pub linear_solver: LinearSolverKind,
    /// Reference load for reporting critical loads (e.g. a closed-form value).
    pub reference_load: Option<f64>,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem> {
        let mat = self.material.build()?;
        let schedule = LoadSchedule::new(self.loads.clone())?;
        if self.bc.is_empty() {
            return Err(Error::InvalidSchedule("no boundary conditions given".into()));
        }
        let mesh = Arc::new(self.geometry.build(self.h)?);
        let disc = Discretization::new(mesh, mat.kind, &self.bc, self.linear_solver)?.with_intact_sets(&self.intact)?;
        let problem = Problem {
            disc,
            mat,
            schedule,
            settings: self.settings.clone(),
            alpha: self.alpha,
            guess: self.guess,
            fracture: self.fracture.clone(),
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn with_uniform_schedule(mut self, step: f64, steps: usize) -> Self {
        self.loads = (1..=steps).map(|i| i as f64 * step).collect();
        self
    }
}

/// Names of the built-in presets with one-line descriptions.
pub const PRESETS: &[(&str, &str)] = &[
    ("ex1", "fiber-reinforced matrix under tension (non-dimensional)"),
    ("ex2", "plane-strain square with a central hole (N, mm, MPa)"),
    ("ex3", "homogeneous plane-strain square (N, mm, MPa)"),
    ("ex4a", "anisotropic anti-plane tear, xi = 0.2, beta = -45 deg"),
    ("ex4b", "anisotropic anti-plane tear, xi = 0.2, beta = -22.5 deg"),
    ("ex4c", "anisotropic anti-plane tear, xi = 0.2, beta = -67.5 deg"),
    ("ex4d", "anisotropic anti-plane tear, xi = 0.5, beta = -45 deg"),
    ("ex4e", "anisotropic anti-plane tear, xi = 0.8, beta = -45 deg"),
];

/// Steel-like constants shared by the plane-strain square benchmarks.
pub const STEEL_E: f64 = 210_000.0;
pub const STEEL_NU: f64 = 0.3;
pub const STEEL_GC: f64 = 6.75;
pub const STEEL_ELL: f64 = 40.0;
pub const HOMOGENEOUS_SIDE: f64 = 1000.0;

/// Critical load of a homogeneous square that cracks straight across,
/// `sqrt(Gc L / (2 E))`.
pub fn homogeneous_critical_load(gc: f64, side: f64, youngs: f64) -> f64 {
    (gc * side / (2.0 * youngs)).sqrt()
}

fn pull_top_and_bottom() -> Vec<BcRule> {
    vec![
        BcRule::new("top", 0, 0.0),
        BcRule::new("top", 1, 1.0),
        BcRule::new("bottom", 0, 0.0),
        BcRule::new("bottom", 1, -1.0),
    ]
}

pub fn preset(name: &str) -> Result<ProblemSpec> {
    let spec = match name {
        "ex1" => ProblemSpec {
            name: name.into(),
            geometry: Geometry::FiberComposite { side: 3.0, radius: 0.5 },
            h: 0.05,
            material: MaterialSpec::plane_strain(4000.0, 0.2, 100.0, 0.1),
            bc: vec![
                BcRule::new("fiber", 0, 0.0),
                BcRule::new("fiber", 1, 0.0),
                BcRule::new("top", 0, 0.0),
                BcRule::new("top", 1, 1.0),
            ],
            intact: vec!["fiber".into(), "top".into()],
            loads: Vec::new(),
            settings: SolveSettings::default(),
            alpha: 1.0,
            guess: GuessSettings::default(),
            fracture: Some(FractureCriterion::spanning(&[("left", "right")], Some("fiber"))),
            linear_solver: LinearSolverKind::default(),
            reference_load: None,
        }
        .with_uniform_schedule(0.005, 120),
        "ex2" => ProblemSpec {
            name: name.into(),
            geometry: Geometry::Square {
                side: 2000.0,
                hole: Some(200.0),
            },
            h: STEEL_ELL / 2.0,
            material: MaterialSpec::plane_strain(STEEL_E, STEEL_NU, STEEL_GC, STEEL_ELL),
            bc: pull_top_and_bottom(),
            intact: vec!["top".into(), "bottom".into()],
            loads: Vec::new(),
            settings: SolveSettings::default(),
            alpha: 1.0,
            guess: GuessSettings::default(),
            fracture: Some(FractureCriterion::spanning(&[("left", "right")], Some("hole"))),
            linear_solver: LinearSolverKind::default(),
            reference_load: None,
        }
        .with_uniform_schedule(0.005, 60),
        "ex3" => {
            let uc = homogeneous_critical_load(STEEL_GC, HOMOGENEOUS_SIDE, STEEL_E);
            ProblemSpec {
                name: name.into(),
                geometry: Geometry::Square {
                    side: HOMOGENEOUS_SIDE,
                    hole: None,
                },
                h: STEEL_ELL / 2.0,
                material: MaterialSpec::plane_strain(STEEL_E, STEEL_NU, STEEL_GC, STEEL_ELL),
                bc: pull_top_and_bottom(),
                intact: vec!["top".into(), "bottom".into()],
                loads: Vec::new(),
                settings: SolveSettings::default(),
                alpha: 1.0,
                guess: GuessSettings::default(),
                fracture: Some(FractureCriterion::spanning(&[("left", "right")], None)),
                linear_solver: LinearSolverKind::default(),
                reference_load: Some(uc),
            }
            // 40 steps reach 1.5 u_c; the baselines need the longer range.
            .with_uniform_schedule(0.0375 * uc, 80)
        }
        "ex4a" => tear(name, 0.2, -45.0),
        "ex4b" => tear(name, 0.2, -22.5),
        "ex4c" => tear(name, 0.2, -67.5),
        "ex4d" => tear(name, 0.5, -45.0),
        "ex4e" => tear(name, 0.8, -45.0),
        other => {
            return Err(Error::InvalidSchedule(format!(
                "unknown preset `{other}` (available: {})",
                PRESETS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
            )))
        }
    };
    Ok(spec)
}

fn tear(name: &str, xi: f64, beta_deg: f64) -> ProblemSpec {
    ProblemSpec {
        name: name.into(),
        geometry: Geometry::SplitTopSquare { side: 2.0 },
        h: 0.02,
        material: MaterialSpec::anti_plane(1.0, 1.0, 0.04, xi, beta_deg),
        bc: vec![
            BcRule::new("top_left_half", 0, 1.0),
            BcRule::new("top_right_half", 0, -1.0),
        ],
        intact: Vec::new(),
        loads: Vec::new(),
        settings: SolveSettings::default(),
        alpha: 1.0,
        guess: GuessSettings::default(),
        fracture: Some(FractureCriterion::spanning(
            &[("top", "bottom"), ("top", "left"), ("top", "right")],
            None,
        )),
        linear_solver: LinearSolverKind::default(),
        reference_load: None,
    }
    .with_uniform_schedule(0.05, 50)
}
