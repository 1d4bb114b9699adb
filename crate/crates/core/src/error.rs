//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("empty input to {0}")]
    Empty(&'static str),

    #[error("backward called before forward on {0}")]
    BackwardBeforeForward(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("corpus too small: need at least {needed} clips, have {have}")]
    CorpusTooSmall { needed: usize, have: usize },

    #[error("missing blob {}", .0.display())]
    MissingBlob(PathBuf),

    #[error("schema violation in {}: {msg}", path.display())]
    Schema { path: PathBuf, msg: String },

    #[error("shape mismatch in {}: {msg}", path.display())]
    Shape { path: PathBuf, msg: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(context: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::Dimension {
            context: context.into(),
            expected,
            got,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::NonFinite(_) => 4,
            Error::MissingBlob(_)
            | Error::Schema { .. }
            | Error::Shape { .. }
            | Error::Validation(_)
            | Error::CorpusTooSmall { .. }
            | Error::Io { .. } => 3,
            Error::Dimension { .. } | Error::Empty(_) | Error::BackwardBeforeForward(_) => 3,
        }
    }
}
