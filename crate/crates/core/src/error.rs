use thiserror::Error;

/// Errors raised by mesh construction, assembly and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh parameters: {0}")]
    InvalidGeometry(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("missing node set `{0}`")]
    MissingNodeSet(String),

    #[error("mesh file line {line}: {msg}")]
    MeshFormat { line: usize, msg: String },

    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),

    #[error("size mismatch: {what} has length {got}, expected {expected}")]
    SizeMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("linear solver failure: {reason} (relative residual {residual:.3e})")]
    LinearSolver { reason: String, residual: f64 },

    #[error("Newton iteration for displacement did not converge in {iterations} iterations (residual history {history:?})")]
    NewtonDivergence { iterations: usize, history: Vec<f64> },

    #[error("staggered iteration did not converge in {iterations} alternations")]
    StaggeredNonConvergence {
        iterations: usize,
        energy_history: Vec<f64>,
        last_state: Box<crate::assembly::FieldState>,
    },

    #[error("no cracked initial guess after {stages} critical energy release rate reductions (max d = {max_d:.4})")]
    CrackedGuessNotFound { stages: usize, max_d: f64 },

    #[error("backtracking exceeded {0} restarts")]
    BacktrackLimit(usize),

    #[error("invalid load schedule: {0}")]
    InvalidSchedule(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
