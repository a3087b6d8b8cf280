use thiserror::Error;

pub type Result<T, E = ShockError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShockError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("spectrum diverges at xi = {xi} rad/s for an undamped waveform")]
    DivergentSpectrum { xi: f64 },

    #[error("start {start_index} rejected: {reason}")]
    StartRejected { start_index: usize, reason: String },

    #[error("all {starts} starting points were rejected: {reason}")]
    FittingFailed { starts: usize, reason: String },

    #[error("residual energy ratio never reached tolerance {tolerance}")]
    NoEta { tolerance: f64 },

    #[error("argument outside the closed-form evaluation envelope: {0}")]
    OutOfRange(String),
}

pub(crate) fn invalid_param(msg: impl Into<String>) -> ShockError {
    ShockError::InvalidParameter(msg.into())
}

pub(crate) fn invalid_input(msg: impl Into<String>) -> ShockError {
    ShockError::InvalidInput(msg.into())
}
