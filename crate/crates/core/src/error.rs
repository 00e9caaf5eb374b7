use thiserror::Error;

/// Errors raised by the algorithms in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("point swallowed at step {step}")]
    Swallowed { step: usize },
    #[error("numerical failure at step {step}: {reason}")]
    Numerical { step: usize, reason: String },
    #[error("calibration did not converge after {iterations} iterations")]
    Calibration { iterations: usize },
    #[error("empty interior")]
    EmptyInterior,
    #[error("singular system: {0}")]
    Singular(String),
    #[error("step cap of {0} exceeded")]
    StepCap(u64),
    #[error("rejection cap of {0} exceeded")]
    RejectionCap(u64),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("insufficient counts: {0}")]
    InsufficientCounts(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
