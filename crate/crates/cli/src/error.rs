use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Library(#[from] exploration_design::Error),
}

impl CliError {
    /// 0 ok, 1 I/O or internal, 2 configuration or usage, 3 verification
    /// failure, 4 budget exhausted.
    pub fn exit_code(&self) -> i32 {
        use exploration_design::Error as E;
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Library(E::BudgetExceeded { .. }) => 4,
            CliError::Library(E::InvalidArgument { .. } | E::AssumptionViolated(_)) => 2,
            CliError::Library(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
