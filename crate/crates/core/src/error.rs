use thiserror::Error;

/// Failure modes shared across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The argument lies where accuracy cannot be guaranteed.
    #[error("argument outside supported domain: {0}")]
    Domain(String),

    /// Malformed input data (shapes, grids, non-finite samples).
    #[error("validation failed: {0}")]
    Validation(String),

    /// An iterative or direct solver broke down.
    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("eigenfunction {index} vanishes at x = 1 (|phi(1)| = {value:e})")]
    Normalization { index: usize, value: f64 },

    /// The potential is identically zero, so the Neumann operator is singular.
    #[error("degenerate potential: {0}")]
    DegeneratePotential(String),

    /// The Neumann input violates the compatibility condition g(0) = 0.
    #[error("compatibility violated: {0}")]
    Compatibility(String),

    #[error("evaluation point within {distance:e} of pole at {pole}")]
    PoleProximity { pole: f64, distance: f64 },

    /// A hypothesis of the underlying uniqueness statement does not hold.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// The order estimator found no algebraic decay to fit.
    #[error("no decay detected: {0}")]
    NoDecay(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
