use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown generator token `{0}`")]
    UnknownGenerator(String),
    #[error("invalid group parameters: {0}")]
    InvalidGroup(String),
    #[error("{what}: budget exceeded (needed {needed}, budget {budget})")]
    BudgetExceeded { what: String, needed: u128, budget: u128 },
    #[error("step distribution is not a probability: {0}")]
    NotStochastic(String),
    #[error("step distribution is not symmetric: {0}")]
    NotSymmetric(String),
    #[error("step distribution support does not generate the group")]
    NotAdmissible,
    #[error("outside regime: {0}")]
    OutsideRegime(String),
    #[error("tolerance {tol:e} unreachable: {reason}")]
    ToleranceUnreachable { tol: f64, reason: String },
    #[error("divergence not witnessed inside the stored prefixes")]
    DivergenceNotWitnessed,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
