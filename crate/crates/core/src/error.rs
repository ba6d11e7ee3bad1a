use thiserror::Error;

/// Errors raised by parameter validation, sampling and closed-form evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("time {time} is outside the admissible range [{lower}, {upper}]")]
    OutOfHorizon { time: f64, lower: f64, upper: f64 },

    #[error("covariance is not positive definite at time {time}: variance {variance}")]
    NotPositiveDefinite { time: f64, variance: f64 },

    #[error("time grid is invalid: {0}")]
    InvalidGrid(String),

    #[error("superposition is invalid: {0}")]
    InvalidSuperposition(String),

    #[error("empty sample")]
    EmptySample,

    #[error("density of the queue law vanishes at q = {q}")]
    VanishingDensity { q: f64 },

    #[error("quadrature did not converge: estimated error {estimate:e} exceeds {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be non-negative and finite",
        })
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<f64> {
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
