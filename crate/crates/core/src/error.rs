use thiserror::Error;

use crate::log_value::LogValue;

/// Errors raised by geometry, quadrature and measure evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("support function is not C2 ({0})")]
    NotC2(&'static str),

    #[error("operation needs a C2+ body, got a piecewise one")]
    UnsupportedSmoothness,

    #[error("gauge maximizer is not unique for x = ({x}, {y})")]
    AmbiguousGradient { x: f64, y: f64 },

    #[error("degenerate body: {0}")]
    DegenerateBody(String),

    #[error("invalid phi: {0}")]
    InvalidPhi(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure in {what}: {detail}")]
    NumericalFailure {
        what: &'static str,
        detail: String,
        last_estimate: Option<LogValue>,
    },

    #[error("loss of significance: {0}")]
    Unreliable(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("second-order mixed measure is not negative at t = {t}")]
    SignThreshold { t: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("tail probability underflows at t = {t}; largest usable t is about {max_t}")]
    TailRange { t: f64, max_t: f64 },
}

impl Error {
    pub(crate) fn numerical(what: &'static str, detail: impl Into<String>) -> Self {
        Error::NumericalFailure {
            what,
            detail: detail.into(),
            last_estimate: None,
        }
    }

    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure { .. }
                | Error::Unreliable(_)
                | Error::AmbiguousGradient { .. }
                | Error::TailRange { .. }
                | Error::SignThreshold { .. }
                | Error::InvariantViolation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
