//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Evaluation point sits on (or within tolerance of) a pole.
    #[error("pole: {0}")]
    Pole(String),

    /// Argument outside the domain of the operation.
    #[error("domain: {0}")]
    Domain(String),

    /// The real-line integral does not converge (non-positive decay rate).
    #[error("divergent integral: decay rates ({c_minus}, {c_plus}) must both be positive")]
    DivergentIntegral { c_minus: f64, c_plus: f64 },

    /// Adaptive quadrature ran out of its panel or radius budget.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A rational function left the admitted function space.
    #[error("class violation: {0}")]
    ClassViolation(String),

    /// Parameters are not generic enough for the requested algebra.
    #[error("non-generic parameters: {0}")]
    Genericity(String),

    /// Matrix or sector dimensions do not compose.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A least-squares decomposition exceeded its residual tolerance.
    #[error("fit failed: {0}")]
    Fit(String),

    #[error("config: {0}")]
    Config(String),

    #[error("parse: {0}")]
    Parse(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
