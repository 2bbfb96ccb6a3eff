//! Error type carrying the process exit code.

use l1rg_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input.
    #[error("input error: {0}")]
    Input(String),
    /// The core error text already names the failing condition.
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Divergence(String),
    /// A verification check failed.
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Other(_) => 1,
        }
    }

    /// Maps a design-stage error: anything the designer rejects counts as infeasible.
    pub fn from_design(e: CoreError) -> Self {
        match e {
            CoreError::Dimension(_) | CoreError::Parameter(_) => CliError::Input(e.to_string()),
            _ => CliError::Infeasible(e.to_string()),
        }
    }

    pub fn from_sim(e: CoreError) -> Self {
        match e {
            CoreError::Divergence { .. } => CliError::Divergence(e.to_string()),
            CoreError::Dimension(_) | CoreError::Parameter(_) | CoreError::GridMismatch(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
