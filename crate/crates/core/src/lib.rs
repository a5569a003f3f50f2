//! Evaluation metrics and data tooling for simultaneous machine translation.
//!
//! * [`stream`]: READ/WRITE stream logs and their JSONL encoding.
//! * [`monotonicity`]: Pharaoh alignments and Average Anticipation (AA).
//! * [`latency`]: Average Lagging, Normalized Erasure, wait-k schedules and
//!   protocol validation.
//! * [`quality`]: corpus BLEU, Norm-Score, drop rate and BLEU-Stream.
//! * [`corpus`]: streaming corpus scoring, monotonic subset extraction and
//!   dataset statistics.
//! * [`annotation`]: the streaming annotation session state machine and
//!   acceptability ratings.

pub mod annotation;
pub mod corpus;
pub mod error;
pub mod fixtures;
pub mod latency;
pub mod monotonicity;
pub mod quality;
pub mod report;
pub mod stream;
pub mod tokens;

pub use error::{AlignmentError, CorpusError, LogError, MetricError, QualityError, TokenError};
pub use latency::{
    al, al_exact, delays_from_log, erasure, ne, ne_exact, stable_delays, trace_from_log,
    validate_actions, validate_log, waitk_path, DelayProfile, HypothesisTrace, Violation,
};
pub use monotonicity::{aa, is_monotonic, parse_pharaoh, Alignment};
pub use quality::{bleu_stream, corpus_bleu, drop_rate, norm_score, BleuScore, Smoothing};
pub use report::MetricReport;
pub use stream::{parse_stream_log, serialize_stream_log, Action, Mode, StreamLog};
pub use tokens::{SentencePair, TokenSeq};
