use thiserror::Error;

/// Errors raised by the geometric and numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions n={n}, m={m}: {reason}")]
    Dimension { n: usize, m: usize, reason: String },

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("point lies on the submanifold (distance {distance:e})")]
    Singularity { distance: f64 },

    #[error("quadrature did not reach tolerance {tolerance:e} (achieved {achieved:e})")]
    Accuracy { tolerance: f64, achieved: f64 },

    #[error("tube radius {radius} is not below the reach {reach}")]
    ReachExceeded { radius: f64, reach: f64 },

    #[error("unsupported grid resolution: {0}")]
    Resolution(String),

    #[error("no barrier sign change found: {0}")]
    BarrierNotFound(String),

    #[error("horizon graph left the admissible band: {0}")]
    Confinement(String),

    #[error("solver did not converge after {iterations} iterations (best residual {best_residual:e})")]
    NonConvergence { iterations: usize, best_residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
