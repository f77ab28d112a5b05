use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty payload")]
    EmptyPayload,

    #[error("truncated sample: payload length {0} bytes is not a multiple of 8")]
    TruncatedSample(usize),

    #[error("non-finite value at sample {0}")]
    NonFinite(usize),

    #[error("metadata error: {0}")]
    Metadata(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("zero-power frame {0} cannot be normalized")]
    ZeroPowerFrame(usize),

    #[error("training diverged at epoch {epoch}: d_loss={d_loss}, g_loss={g_loss}")]
    Diverged { epoch: usize, d_loss: f64, g_loss: f64 },

    #[error("model is not initialized")]
    Uninitialized,

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
