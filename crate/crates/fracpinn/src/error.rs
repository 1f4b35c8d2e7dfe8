use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] fracpinn_core::Error),
    #[error("training aborted for {cell}: {source}")]
    Training {
        cell: String,
        source: fracpinn_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("comparison failed: {0}")]
    Compare(String),
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;

impl AppError {
    /// Process exit status: 2 for bad input, 3 for a training abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Core(fracpinn_core::Error::InvalidArgument(_)) => 2,
            Self::Training { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Self::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
