use thiserror::Error;

use crate::scene::Point2;

/// Errors raised by the imaging and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{function}: argument {x} outside the domain")]
    Domain { function: &'static str, x: f64 },

    #[error("Green function singular: points {p:?} and {q:?} coincide")]
    Singularity { p: Point2, q: Point2 },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("Foldy-Lax interaction matrix is singular (reciprocal condition {rcond:e})")]
    Resonance { rcond: f64 },

    #[error("degenerate scene: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("expected a decomposition of a noise-free MDM")]
    NoisyDecomposition,

    #[error("found {found} local minima, {wanted} requested")]
    UnderDetection { found: usize, wanted: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
