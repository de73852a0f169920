use thiserror::Error;

/// Errors raised by the evaluators, samplers and numerical machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument or parameter lies outside the function's domain.
    #[error("domain error: {name} = {value} ({reason})")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The value at this point is not finite (integrable singularity at the
    /// origin, divergent kernel, ...).
    #[error("out of domain: {0}")]
    Singular(String),

    /// The true value exceeds the representable range.
    #[error("overflow evaluating {0}")]
    Overflow(&'static str),

    /// Adaptive quadrature ran out of budget before meeting its tolerance.
    #[error(
        "quadrature did not converge: value {value:e}, error estimate {error_estimate:e} after {evaluations} evaluations"
    )]
    QuadratureNonConvergence {
        value: f64,
        error_estimate: f64,
        evaluations: usize,
    },

    /// An adaptive series hit its term cap without satisfying the stopping rule.
    #[error("series did not converge after {terms_used} terms (partial sum {value:e}, last term {last_term:e})")]
    SeriesNonConvergence {
        value: f64,
        terms_used: usize,
        last_term: f64,
    },

    /// An integrand or summand produced NaN or an infinity.
    #[error("non-finite evaluation at {at}")]
    NonFinite { at: f64 },

    /// A density failed its normalization precondition.
    #[error("density is not normalized: total mass {mass} (tolerance {tolerance:e})")]
    NotNormalized { mass: f64, tolerance: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Validates that `value` is finite and strictly positive.
pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

/// Validates that `value` is finite and non-negative.
pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}
