use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value during reverse sweep at node {node} ({op})")]
    NonFinite { node: usize, op: &'static str },

    #[error("unsupported Sobol dimension {0} (direction table covers 1..=64)")]
    UnsupportedDimension(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("unknown problem id `{id}`; available: {catalog}")]
    UnknownProblem { id: String, catalog: String },

    #[error("training sets were not generated for problem `{0}`")]
    SetMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
