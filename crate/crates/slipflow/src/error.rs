//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh generation failed: non-positive Jacobian determinant in cell {cell} (det = {det:.3e})")]
    NonPositiveJacobian { cell: usize, det: f64 },

    #[error("wall functions cross: b-(x2) >= b+(x2) at x2 = {x2} (b- = {lower}, b+ = {upper})")]
    WallCrossing { x2: f64, lower: f64, upper: f64 },

    #[error("invalid domain specification: {0}")]
    InvalidSpec(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("nonlinear solver did not converge after {iterations} iterations (last residual {last_residual:.3e})")]
    Nonconvergence {
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    #[error("compatibility condition violated: mean of divergence data = {residual:.3e} (tolerance {tolerance:.3e})")]
    Compatibility { residual: f64, tolerance: f64 },

    #[error("diagnostic check '{name}' failed: {detail}")]
    Diagnostic { name: String, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
