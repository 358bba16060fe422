use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("graph structure: {0}")]
    Structure(String),

    #[error("empty mask passed to {0}")]
    EmptyMask(&'static str),

    #[error("non-finite loss {loss} at epoch {epoch} in {stage}")]
    NonFinite {
        stage: &'static str,
        epoch: usize,
        loss: f64,
    },

    #[error("no label for node {0}")]
    MissingLabel(usize),

    #[error("forward cache does not match: {0}")]
    CacheMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("bundle {path}: {detail}")]
    Bundle { path: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Shape {
        op,
        detail: detail.into(),
    }
}
