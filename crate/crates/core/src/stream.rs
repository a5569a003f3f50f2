//! Stream logs: the per-sentence record of READ/WRITE (or READ/snapshot)
//! actions, and their one-line JSON encoding.
//!
//! ```text
//! {"id":"s1","mode":"streaming","actions":[["R","And"],["W","这"]]}
//! {"id":"s2","mode":"retranslation","actions":[["R","a"],["H",["x"]],["R","b"],["H",["x","y"]]]}
//! ```
//!
//! Serialization is canonical: keys in the order above, no whitespace, no
//! escaping of non-ASCII text. Parsing a canonical line and serializing it
//! again reproduces the same bytes.

use std::fmt;

use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::error::{LogError, TokenError};
use crate::tokens::{check_token, TokenSeq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Streaming,
    Retranslation,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Streaming => "streaming",
            Mode::Retranslation => "retranslation",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = LogError;

    fn from_str(s: &str) -> Result<Self, LogError> {
        match s {
            "streaming" => Ok(Mode::Streaming),
            "retranslation" => Ok(Mode::Retranslation),
            other => Err(LogError::UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Read(String),
    Write(String),
    Snapshot(TokenSeq),
}

impl Action {
    pub fn read(token: impl Into<String>) -> Result<Self, TokenError> {
        let token = token.into();
        check_token(&token)?;
        Ok(Action::Read(token))
    }

    pub fn write(token: impl Into<String>) -> Result<Self, TokenError> {
        let token = token.into();
        check_token(&token)?;
        Ok(Action::Write(token))
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Action::Read(_) => "R",
            Action::Write(_) => "W",
            Action::Snapshot(_) => "H",
        }
    }

    pub fn is_read(&self) -> bool {
        matches!(self, Action::Read(_))
    }

    fn from_value(index: usize, value: &Value) -> Result<Action, LogError> {
        let bad = |reason: &str| LogError::BadAction {
            index,
            reason: reason.to_string(),
        };
        let pair = match value.as_array() {
            Some(p) if p.len() == 2 => p,
            _ => return Err(bad("expected a 2-element [tag, payload] array")),
        };
        let tag = pair[0].as_str().ok_or_else(|| bad("tag must be a string"))?;
        let token_err = |source| LogError::Token { index, source };
        match tag {
            "R" | "W" => {
                let tok = pair[1]
                    .as_str()
                    .ok_or_else(|| bad("payload must be a string token"))?;
                check_token(tok).map_err(token_err)?;
                Ok(if tag == "R" {
                    Action::Read(tok.to_string())
                } else {
                    Action::Write(tok.to_string())
                })
            }
            "H" => {
                let items = pair[1]
                    .as_array()
                    .ok_or_else(|| bad("snapshot payload must be an array of tokens"))?;
                let mut toks = Vec::with_capacity(items.len());
                for item in items {
                    let t = item
                        .as_str()
                        .ok_or_else(|| bad("snapshot tokens must be strings"))?;
                    toks.push(t.to_string());
                }
                Ok(Action::Snapshot(TokenSeq::new(toks).map_err(token_err)?))
            }
            other => Err(bad(&format!("unknown tag {other:?}"))),
        }
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(2))?;
        seq.serialize_element(self.tag())?;
        match self {
            Action::Read(t) | Action::Write(t) => seq.serialize_element(t)?,
            Action::Snapshot(h) => seq.serialize_element(h)?,
        }
        seq.end()
    }
}

/// Every structural rule violation in an action sequence, in order.
///
/// Rules: non-empty; first action is a Read; streaming logs hold only
/// Read/Write; retranslation logs hold only Read/Snapshot, with at most one
/// Snapshot after each Read.
pub fn structural_violations(mode: Mode, actions: &[Action]) -> Vec<LogError> {
    let mut out = Vec::new();
    if actions.is_empty() {
        out.push(LogError::NoActions);
        return out;
    }
    if !actions[0].is_read() {
        out.push(LogError::FirstNotRead { index: 0 });
    }
    let mut snapshot_since_read = false;
    for (index, action) in actions.iter().enumerate() {
        let allowed = matches!(
            (mode, action),
            (_, Action::Read(_))
                | (Mode::Streaming, Action::Write(_))
                | (Mode::Retranslation, Action::Snapshot(_))
        );
        if !allowed {
            out.push(LogError::ModeMismatch {
                index,
                tag: action.tag(),
                mode: mode.as_str(),
            });
        }
        match action {
            Action::Read(_) => snapshot_since_read = false,
            Action::Snapshot(_) => {
                if snapshot_since_read {
                    out.push(LogError::RepeatedSnapshot { index });
                }
                snapshot_since_read = true;
            }
            Action::Write(_) => {}
        }
    }
    out
}

/// A validated stream log. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamLog {
    id: String,
    mode: Mode,
    actions: Vec<Action>,
}

impl StreamLog {
    pub fn new(id: impl Into<String>, mode: Mode, actions: Vec<Action>) -> Result<Self, LogError> {
        if let Some(err) = structural_violations(mode, &actions).into_iter().next() {
            return Err(err);
        }
        Ok(StreamLog {
            id: id.into(),
            mode,
            actions,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    /// Same log under a different id.
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn read_count(&self) -> usize {
        self.actions.iter().filter(|a| a.is_read()).count()
    }

    pub fn write_count(&self) -> usize {
        self.actions
            .iter()
            .filter(|a| matches!(a, Action::Write(_)))
            .count()
    }

    /// Source tokens in the order they were read.
    pub fn read_tokens(&self) -> impl Iterator<Item = &str> {
        self.actions.iter().filter_map(|a| match a {
            Action::Read(t) => Some(t.as_str()),
            _ => None,
        })
    }

    /// Target tokens in the order they were written (streaming mode).
    pub fn written_tokens(&self) -> impl Iterator<Item = &str> {
        self.actions.iter().filter_map(|a| match a {
            Action::Write(t) => Some(t.as_str()),
            _ => None,
        })
    }

    /// The output visible once `reads` source tokens have been read and
    /// before the next Read: all Writes so far in streaming mode, the most
    /// recent snapshot in retranslation mode (empty if none yet).
    pub fn partial_output(&self, reads: usize) -> TokenSeq {
        let mut seen = 0usize;
        let mut written = Vec::new();
        let mut snapshot: Option<&TokenSeq> = None;
        for action in &self.actions {
            match action {
                Action::Read(_) => {
                    if seen == reads {
                        break;
                    }
                    seen += 1;
                }
                Action::Write(t) => written.push(t.clone()),
                Action::Snapshot(h) => snapshot = Some(h),
            }
        }
        match self.mode {
            Mode::Streaming => TokenSeq::new(written).expect("tokens validated at construction"),
            Mode::Retranslation => snapshot.cloned().unwrap_or_default(),
        }
    }

    /// `partial_output(p)` for every `p` in `1..=read_count()`, in one pass.
    pub fn partial_outputs(&self) -> Vec<TokenSeq> {
        let mut out = Vec::with_capacity(self.read_count());
        let mut current = TokenSeq::empty();
        let mut reads = 0usize;
        for action in &self.actions {
            match action {
                Action::Read(_) => {
                    if reads > 0 {
                        out.push(current.clone());
                    }
                    reads += 1;
                }
                Action::Write(t) => current.push(t.clone()).expect("tokens validated at construction"),
                Action::Snapshot(h) => current = h.clone(),
            }
        }
        out.push(current);
        out
    }
}

impl Serialize for StreamLog {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("StreamLog", 3)?;
        st.serialize_field("id", &self.id)?;
        st.serialize_field("mode", self.mode.as_str())?;
        st.serialize_field("actions", &self.actions)?;
        st.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLog {
    id: String,
    mode: String,
    actions: Vec<Value>,
}

/// Parses one JSONL record.
pub fn parse_stream_log(line: &str) -> Result<StreamLog, LogError> {
    let raw: RawLog =
        serde_json::from_str(line).map_err(|e| LogError::Malformed(e.to_string()))?;
    let mode: Mode = raw.mode.parse()?;
    let actions = raw
        .actions
        .iter()
        .enumerate()
        .map(|(i, v)| Action::from_value(i, v))
        .collect::<Result<Vec<_>, _>>()?;
    StreamLog::new(raw.id, mode, actions)
}

/// Canonical one-line encoding, without the trailing newline.
pub fn serialize_stream_log(log: &StreamLog) -> String {
    serde_json::to_string(log).expect("stream log serialization is infallible")
}

/// Parses a JSONL document, skipping blank lines. Errors carry the 1-based
/// line number.
pub fn parse_stream_logs(text: &str) -> Result<Vec<StreamLog>, (usize, LogError)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| parse_stream_log(l).map_err(|e| (n + 1, e)))
        .collect()
}
