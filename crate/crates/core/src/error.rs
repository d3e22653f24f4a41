use thiserror::Error;

/// Errors raised by geometric, stochastic and verification routines.
///
/// Coordinates carried in variants are converted to `f64` so the error type
/// does not depend on the scalar parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {x:?} lies outside the safe region of chart {chart}")]
    ChartDomain { chart: usize, x: Vec<f64> },

    #[error("no chart covers the point {x:?} (last chart {chart})")]
    ChartCoverage { chart: usize, x: Vec<f64> },

    #[error("chart {from} has no transition to chart {to}")]
    NoTransition { from: usize, to: usize },

    #[error("explosion: {0}")]
    Explosion(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("group element {index} is singular")]
    SingularGroupElement { index: usize },

    #[error("unsupported measure: {0}")]
    UnsupportedMeasure(String),

    #[error("triplet is not invariant under the holonomy group: {0}")]
    Invariance(String),

    #[error("jump at t={time} is not realised by its jump data (residual {residual:e})")]
    JumpMismatch { time: f64, residual: f64 },

    #[error("-I is not among the declared holonomy generators")]
    SymmetryPrecondition,

    #[error("unknown manifold '{0}'")]
    UnknownManifold(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
