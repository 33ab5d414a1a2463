use thiserror::Error;

/// Errors raised by profile validation and the two migration engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("memory size must be positive, got {value}")]
    NonPositiveMemory { value: f64 },
    #[error("transfer rate must be positive, got {value}")]
    NonPositiveRate { value: f64 },
    #[error("dirtying rate must be non-negative, got {value}")]
    NegativeDirtyRate { value: f64 },
    #[error("gap must be non-negative, got {value}")]
    NegativeGap { value: f64 },
    #[error("lambda must be below 1 at step {step}, got {lambda}")]
    LambdaNotLessThanOne { step: usize, lambda: f64 },
    #[error("trace has no events")]
    EmptyTrace,
    #[error("trace exhausted after {available} events before the hand-off policy was satisfied")]
    TraceTooShort { available: usize },
    #[error("invalid hand-off policy: {0}")]
    InvalidPolicy(String),
    #[error("round count must be at least 1")]
    ZeroRounds,
}

impl ModelError {
    /// True for errors that reject the input itself (as opposed to the model
    /// being unable to complete on otherwise well-formed input).
    pub fn is_validation(&self) -> bool {
        !matches!(self, ModelError::TraceTooShort { .. })
    }
}
