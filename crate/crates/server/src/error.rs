use std::path::{Path, PathBuf};

use monoeval_core::annotation::{ExportError, RatingError, SessionError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown session {0:?}")]
    NotFound(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Rating(#[from] RatingError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Journal {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Replay { path: PathBuf, message: String },
}

/// How an error maps onto the HTTP contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The request breaks the annotation protocol or is malformed (400).
    Protocol,
    /// No such session (404).
    NotFound,
    /// The operation is not legal in the current state (409).
    State,
    /// Server-side failure (500).
    Internal,
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        StoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            StoreError::NotFound(_) => ErrorKind::NotFound,
            StoreError::Session(e) => match e {
                SessionError::EmptySource
                | SessionError::IllegalToken(_)
                | SessionError::SourceExhausted => ErrorKind::Protocol,
                SessionError::Finished | SessionError::Unread { .. } => ErrorKind::State,
            },
            StoreError::Rating(e) => match e {
                RatingError::OutOfRange(_) | RatingError::BadThreshold(_) => ErrorKind::Protocol,
                RatingError::NoRatings => ErrorKind::State,
            },
            StoreError::Export(_) => ErrorKind::State,
            StoreError::Io { .. } | StoreError::Journal { .. } | StoreError::Replay { .. } => {
                ErrorKind::Internal
            }
        }
    }
}
