use thiserror::Error;

use crate::prooftrace::ProofTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not symmetric: entries ({i},{j}) and ({j},{i}) differ by {diff:e}")]
    Asymmetric { i: usize, j: usize, diff: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("column {0} is zero")]
    ZeroColumn(usize),

    #[error("diagonal entry {index} is {value:e}, expected zero")]
    DiagonalViolation { index: usize, value: f64 },

    #[error("dimension {n} exceeds the cap of {cap}")]
    SizeCap { n: usize, cap: usize },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("degenerate game: {0}")]
    DegenerateGame(String),

    #[error("no certificate: primal floor {primal}, dual value {dual}")]
    NoCertificate { primal: f64, dual: f64 },

    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid ensemble spec: {0}")]
    InvalidSpec(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("proof trace failed at {}", .0.first_failure().unwrap_or("<unknown>"))]
    TraceFailed(Box<ProofTrace>),
}
