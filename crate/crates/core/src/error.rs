use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("edge index {index} out of range for {edges} edges")]
    InvalidEdge { index: usize, edges: usize },

    #[error("expected {expected} per-edge probabilities, got {got}")]
    EdgeCountMismatch { expected: usize, got: usize },

    #[error("break probability {0} is outside (0, 1)")]
    InvalidProbability(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("size guard exceeded: {0}")]
    Guard(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("basis is not orthonormal (Gram deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("linearly dependent attractor dropped during orthogonalization: {0}")]
    Dependent(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
