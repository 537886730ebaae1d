use thiserror::Error;

/// Errors raised by the simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HoloError {
    /// A parameter lies outside its physical or mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("mode index {mode} out of range for a {num_modes}-mode state")]
    UnknownMode { mode: usize, num_modes: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The expectation of a supposedly Hermitian observable came back complex.
    #[error("observable is not Hermitian: expectation {re} + {im}i")]
    NonHermitian { re: f64, im: f64 },

    #[error("unsupported polynomial degree {degree} (max {max})")]
    UnsupportedDegree { degree: usize, max: usize },

    /// The signal coefficient vanishes, so no phase covariance can be inferred.
    #[error("insensitive configuration: signal coefficient is {0:e}")]
    InsensitiveConfiguration(f64),

    #[error("Fock truncation leaks probability: cutoff {cutoff} is below the required {required}")]
    Leakage { cutoff: usize, required: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, HoloError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(HoloError::Domain(msg.into()))
}
