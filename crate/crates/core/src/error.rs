use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// A tensor picked up a NaN or infinity.
    #[error("non-finite values in {tensor}")]
    Numeric { tensor: String },

    /// Caller violated an operation precondition.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("rule parse error at {location}: {message}")]
    RuleParse { location: String, message: String },

    #[error("load error{}: {message}", record.as_ref().map(|r| format!(" (record {r})")).unwrap_or_default())]
    Load {
        record: Option<String>,
        message: String,
    },

    #[error("training diverged at epoch {epoch}, batch {batch}: {source}")]
    Training {
        epoch: usize,
        batch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Evaluation reports that cannot be tabulated together.
    #[error("report merge error: {0}")]
    Merge(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn numeric(tensor: impl Into<String>) -> Self {
        Error::Numeric {
            tensor: tensor.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
