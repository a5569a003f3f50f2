use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("empty token")]
    Empty,
    #[error("token {token:?} contains whitespace {ch:?}")]
    Whitespace { token: String, ch: char },
}

/// Errors raised while parsing or constructing a stream log.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogError {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("unknown mode {0:?}")]
    UnknownMode(String),
    #[error("action {index}: {reason}")]
    BadAction { index: usize, reason: String },
    #[error("log has no actions")]
    NoActions,
    #[error("action {index}: first action must be a Read")]
    FirstNotRead { index: usize },
    #[error("action {index}: {tag} action not allowed in {mode} mode")]
    ModeMismatch {
        index: usize,
        tag: &'static str,
        mode: &'static str,
    },
    #[error("action {index}: more than one snapshot between reads")]
    RepeatedSnapshot { index: usize },
    #[error("action {index}: {source}")]
    Token { index: usize, source: TokenError },
}

impl LogError {
    /// Index of the offending action, when the error is tied to one.
    pub fn action_index(&self) -> Option<usize> {
        match self {
            LogError::BadAction { index, .. }
            | LogError::FirstNotRead { index }
            | LogError::ModeMismatch { index, .. }
            | LogError::RepeatedSnapshot { index }
            | LogError::Token { index, .. } => Some(*index),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignmentError {
    #[error("malformed link {field:?}: expected i-j with non-negative integers")]
    Malformed { field: String },
    #[error("link {i}-{j} out of bounds for lengths ({source_len}, {target_len})")]
    OutOfBounds {
        i: usize,
        j: usize,
        source_len: usize,
        target_len: usize,
    },
    #[error("empty alignment: average anticipation is undefined")]
    EmptyAlignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("delay profile is empty")]
    EmptyProfile,
    #[error("invalid delay profile: {0}")]
    InvalidProfile(String),
    #[error("log {id:?} is in {mode} mode; expected {expected}")]
    WrongMode {
        id: String,
        mode: &'static str,
        expected: &'static str,
    },
    #[error("normalized erasure undefined: final hypothesis is empty")]
    UndefinedNe,
    #[error("invalid hypothesis trace: {0}")]
    InvalidTrace(String),
    #[error("source and target lengths must be at least 1")]
    ZeroLength,
    #[error("wait-k requires k >= 1")]
    ZeroK,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QualityError {
    #[error("hypothesis count {hypotheses} differs from reference count {references}")]
    LengthMismatch {
        hypotheses: usize,
        references: usize,
    },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("base score must be positive, got {0}")]
    NonPositiveBase(f64),
    #[error("high score must be positive, got {0}")]
    NonPositiveHigh(f64),
    #[error("no reference log for system log {0:?}")]
    UnmatchedSystem(String),
    #[error("no system log for reference log {0:?}")]
    UnmatchedReference(String),
    #[error("duplicate log id {0:?}")]
    DuplicateId(String),
    #[error("log {id:?}: system reads {system} source tokens, reference reads {reference}")]
    SourceLenMismatch {
        id: String,
        system: usize,
        reference: usize,
    },
    #[error("reference log {0:?} is not a streaming log")]
    ReferenceNotStreaming(String),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line count mismatch: {left_path} has {left} lines, {right_path} has {right} lines")]
    LineCountMismatch {
        left_path: PathBuf,
        left: usize,
        right_path: PathBuf,
        right: usize,
    },
    #[error("{path}:{line}: {source}")]
    Alignment {
        path: PathBuf,
        line: usize,
        source: AlignmentError,
    },
    #[error("{path}:{line}: {source}")]
    Log {
        path: PathBuf,
        line: usize,
        source: LogError,
    },
    #[error("duplicate pair id {0:?}")]
    DuplicateId(String),
    #[error("pair count {pairs} differs from alignment count {alignments}")]
    Unpaired { pairs: usize, alignments: usize },
    #[error("{0}")]
    Metric(#[from] MetricError),
}
