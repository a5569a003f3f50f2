//! The worked streaming-annotation example (English "And this made me sad"
//! annotated into Chinese), used across tests and docs.

use crate::stream::{Action, Mode, StreamLog};
use crate::tokens::TokenSeq;

pub const EXAMPLE_SOURCE: [&str; 5] = ["And", "this", "made", "me", "sad"];
pub const EXAMPLE_TARGET: [&str; 4] = ["这", "使", "我", "难过"];

/// Canonical JSONL encoding of [`example_log`].
pub const EXAMPLE_LINE: &str = r#"{"id":"example","mode":"streaming","actions":[["R","And"],["R","this"],["W","这"],["R","made"],["W","使"],["R","me"],["W","我"],["R","sad"],["W","难过"]]}"#;

pub fn example_source() -> TokenSeq {
    TokenSeq::new(EXAMPLE_SOURCE).expect("fixture tokens are valid")
}

/// R(And) R(this) W(这) R(made) W(使) R(me) W(我) R(sad) W(难过)
pub fn example_log() -> StreamLog {
    let mut actions = vec![Action::Read("And".into())];
    for (src, tgt) in EXAMPLE_SOURCE[1..].iter().zip(EXAMPLE_TARGET) {
        actions.push(Action::Read((*src).into()));
        actions.push(Action::Write(tgt.into()));
    }
    StreamLog::new("example", Mode::Streaming, actions).expect("fixture log is valid")
}
