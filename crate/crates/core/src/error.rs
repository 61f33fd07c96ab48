use thiserror::Error;

/// Errors raised by the operator calculus routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The caller violated a precondition (shape, symmetry, definiteness, ranges).
    #[error("invalid input: {0}")]
    Input(String),

    /// An iterative kernel did not reach its residual target.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error("quadrature tolerance not met: estimate {estimate:e} > tolerance {tolerance:e} after {panels} panels")]
    ToleranceNotMet {
        estimate: f64,
        tolerance: f64,
        panels: usize,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
