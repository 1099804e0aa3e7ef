//! Phase-field fracture on linear triangles with staggered minimization and
//! energy-based crack nucleation.

pub mod analysis;
pub mod assembly;
pub mod baselines;
pub mod config;
pub mod error;
pub mod linsolve;
pub mod material;
pub mod mesh;
pub mod nucleation;
pub mod output;
pub mod presets;
pub mod sparse;
pub mod staggered;

pub use assembly::{BcRule, Discretization, Energy, FieldState};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use linsolve::LinearSolverKind;
pub use material::{MaterialParams, ModelKind};
pub use mesh::Mesh;
pub use nucleation::{DriverKind, LoadSchedule, Problem, RunTrace, StepRecord};
