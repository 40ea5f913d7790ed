use thiserror::Error;

use crate::geometry::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A measure-zero configuration the kernel does not define (collinear
    /// neighbors through a puncture, a vertex exactly on a cut line).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("region sampling failed after {attempts} attempts")]
    SamplingFailure { attempts: usize },

    /// The loop touches the crossing structure in a way the word
    /// extraction does not classify (vertex on a puncture, collinear
    /// overlap with a primitive, edge through a puncture).
    #[error("degenerate crossing at vertex {vertex}: {reason}")]
    DegenerateCrossing { vertex: usize, reason: String },

    #[error("class is trivial: the reference loop is contractible")]
    TrivialClass,

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    /// A computed result contradicts a guarantee that must hold (class
    /// change in a saved state, a sampled loop shorter than the oracle).
    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("shortest loop not certified: {reason}")]
    NotCertified {
        reason: String,
        best: Vec<Point>,
        length: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
