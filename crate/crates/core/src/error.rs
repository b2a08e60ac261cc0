use thiserror::Error;

/// Errors raised by the gate-synthesis toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("matrix is rank deficient (smallest singular value {smallest:e})")]
    RankDeficient { smallest: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("gate parameterization: {0}")]
    Parameterization(String),

    #[error("constraint infeasible: g(lo) = {g_lo:e}, g(hi) = {g_hi:e}")]
    ConstraintInfeasible { g_lo: f64, g_hi: f64 },

    #[error("ill-conditioned system (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("degenerate target: {0}")]
    DegenerateTarget(String),

    #[error("infeasible energy {energy:e}: {reason}")]
    InfeasibleEnergy { energy: f64, reason: String },

    #[error("coupling at ({row}, {col}) is not covered by the design harmonics")]
    Coverage { row: usize, col: usize },

    #[error("division by zero-norm quantity: {0}")]
    ZeroNorm(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(expected: impl ToString, got: impl ToString) -> Error {
    Error::Shape {
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
