use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("field length {got} does not match grid size {want}")]
    ShapeMismatch { got: usize, want: usize },

    #[error("delay history is immature at t = {t}: spans [{oldest}, {newest}], needs t - t* = {needed}")]
    ImmatureHistory {
        t: f64,
        oldest: f64,
        newest: f64,
        needed: f64,
    },

    #[error("non-uniform snapshot step: expected t = {expected}, got {got}")]
    NonUniformStep { expected: f64, got: f64 },

    #[error("quadrature spec below minimums: n_theta = {n_theta} (>= 16, even), n_s = {n_s} (>= 8)")]
    QuadratureSpec { n_theta: usize, n_s: usize },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("Newton iteration failed to converge: residual {residual} after {iters} iterations")]
    NewtonFailed { residual: f64, iters: usize },

    #[error("state diverged at t = {t}: {reason}")]
    Diverged { t: f64, reason: String },

    #[error("flow box too small: {0}")]
    FlowBox(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
