use thiserror::Error;

/// Errors raised by the design, estimation and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("input {0} carries no information about the parameter")]
    ZeroInformation(f64),

    #[error("information function violates the convexity/monotonicity assumption: {0}")]
    AssumptionViolated(String),

    #[error("evaluation budget exceeded: {required} evaluations requested, cap is {cap}")]
    BudgetExceeded { required: u128, cap: u128 },

    #[error("empty replicate set")]
    EmptyReplicates,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
