//! Command errors and their exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Regime(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for configuration or regime errors, 3 for budgets and unreachable
    /// tolerances, 4 for failed checks, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Regime(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<hypbrw::Error> for CliError {
    fn from(e: hypbrw::Error) -> Self {
        use hypbrw::Error as E;
        let msg = e.to_string();
        match e {
            E::OutsideRegime(_) => CliError::Regime(msg),
            E::BudgetExceeded { .. } | E::ToleranceUnreachable { .. } | E::InsufficientData(_) | E::DivergenceNotWitnessed => {
                CliError::Budget(msg)
            }
            E::UnknownGenerator(_)
            | E::InvalidGroup(_)
            | E::NotStochastic(_)
            | E::NotSymmetric(_)
            | E::NotAdmissible
            | E::Precondition(_) => CliError::Config(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
