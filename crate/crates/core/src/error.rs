use thiserror::Error;

/// Errors raised by the lattice, energy and evolution routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("lattice spacing {0} outside (0, 1)")]
    InvalidSpacing(f64),

    #[error("lattice needs at least 2 springs, got {0}")]
    TooFewSprings(usize),

    #[error("expected {expected} nodal values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("invalid jump set: {0}")]
    InvalidJumps(String),

    #[error("derivative not square-integrable on [{a}, {b}]")]
    NonIntegrable { a: f64, b: f64 },

    #[error("jump density violates {condition}")]
    InvalidDensity { condition: &'static str },

    #[error("field is not stationary: interior gradient sup-norm {residual:e}")]
    NotStationary { residual: f64 },

    #[error("bracket [{lo}, {hi}] does not enclose a sign change")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("newton solver did not converge in {iterations} iterations, residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("stability ratio 4*tau/eps^2 = {ratio} is not below 1")]
    Unstable { ratio: f64 },

    #[error("field still has {0} springs in the intermediate window")]
    NotCollapsed(usize),

    #[error("initial value {0} is within the singularity guard")]
    SingularStart(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
