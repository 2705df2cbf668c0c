use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
///
/// Variants are grouped so the CLI can map them onto exit statuses:
/// usage problems, data/format problems, and numeric failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Shape { op: &'static str, left: Vec<usize>, right: Vec<usize> },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },

    #[error("unknown dialogue act label {0:?}")]
    UnknownLabel(String),

    #[error("unlabeled utterance {index} in conversation {conversation:?}")]
    Unlabeled { conversation: String, index: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("non-finite loss at epoch {epoch}, conversation {conversation:?}: {value}")]
    NonFinite { epoch: usize, conversation: String, value: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit status for this error: 1 usage, 2 data/format, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Shape { .. } => 1,
            Error::NonFinite { .. } => 3,
            Error::Io { .. }
            | Error::Format { .. }
            | Error::UnknownLabel(_)
            | Error::Unlabeled { .. }
            | Error::Checkpoint(_)
            | Error::Json(_) => 2,
        }
    }
}
