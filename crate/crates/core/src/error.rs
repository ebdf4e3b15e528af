use thiserror::Error;

/// Errors raised by the state, channel and key-rate computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix must be square with even dimension, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state violates the uncertainty principle (min eigenvalue {min_eigenvalue:e})")]
    Unphysical { min_eigenvalue: f64 },

    #[error("channel violates the positivity condition (min eigenvalue {min_eigenvalue:e})")]
    UnphysicalChannel { min_eigenvalue: f64 },

    #[error("matrix is not symplectic (max deviation {deviation:e})")]
    NotSymplectic { deviation: f64 },

    #[error("mode index {index} out of range for a {modes}-mode state")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("alternate channel outside its validity range: epsilon1 = {epsilon1:e}, epsilon2 = {epsilon2:e}")]
    NegativeEpsilon { epsilon1: f64, epsilon2: f64 },

    #[error("degenerate correlation coefficient |r| = {r}")]
    DegenerateCorrelation { r: f64 },

    #[error(
        "covariance submatrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})"
    )]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("no physical channel matches the observed variances: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and non-negative",
        })
    }
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}
