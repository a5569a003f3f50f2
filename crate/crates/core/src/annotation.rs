//! Streaming annotation sessions and acceptability ratings.
//!
//! A session starts with the first source token already read. From then on
//! the annotator either reads the next source token or writes one target
//! token. Written tokens are final: the type has no operation that edits or
//! removes them. A session can only be finished once the whole source has
//! been read; writes stay legal until then.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::TokenError;
use crate::stream::{serialize_stream_log, Action, Mode, StreamLog};
use crate::tokens::TokenSeq;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("source sentence is empty")]
    EmptySource,
    #[error("session is finished")]
    Finished,
    #[error("all words read")]
    SourceExhausted,
    #[error("illegal token: {0}")]
    IllegalToken(#[from] TokenError),
    #[error("{remaining} source tokens unread")]
    Unread { remaining: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Active,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSession {
    id: String,
    source: TokenSeq,
    reads_done: usize,
    written: TokenSeq,
    events: Vec<Action>,
    state: SessionState,
}

impl AnnotationSession {
    pub fn new(id: impl Into<String>, source: TokenSeq) -> Result<Self, SessionError> {
        if source.is_empty() {
            return Err(SessionError::EmptySource);
        }
        let first = source[0].clone();
        Ok(AnnotationSession {
            id: id.into(),
            source,
            reads_done: 1,
            written: TokenSeq::empty(),
            events: vec![Action::Read(first)],
            state: SessionState::Active,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn source(&self) -> &TokenSeq {
        &self.source
    }

    pub fn reads_done(&self) -> usize {
        self.reads_done
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    /// The source tokens the annotator has seen so far, and no more.
    pub fn exposed(&self) -> &[String] {
        &self.source[..self.reads_done]
    }

    pub fn written(&self) -> &TokenSeq {
        &self.written
    }

    pub fn events(&self) -> &[Action] {
        &self.events
    }

    pub fn finishable(&self) -> bool {
        self.state == SessionState::Active && self.reads_done == self.source.len()
    }

    fn ensure_active(&self) -> Result<(), SessionError> {
        match self.state {
            SessionState::Active => Ok(()),
            SessionState::Finished => Err(SessionError::Finished),
        }
    }

    /// Exposes the next source token.
    pub fn read(&mut self) -> Result<&str, SessionError> {
        self.ensure_active()?;
        if self.reads_done == self.source.len() {
            return Err(SessionError::SourceExhausted);
        }
        let token = self.source[self.reads_done].clone();
        self.reads_done += 1;
        self.events.push(Action::Read(token));
        Ok(&self.source[self.reads_done - 1])
    }

    /// Appends one target token and returns the whole target stream.
    pub fn write(&mut self, token: &str) -> Result<&TokenSeq, SessionError> {
        self.ensure_active()?;
        self.written.push(token)?;
        self.events.push(Action::Write(token.to_string()));
        Ok(&self.written)
    }

    pub fn finish(&mut self) -> Result<StreamLog, SessionError> {
        self.ensure_active()?;
        let remaining = self.source.len() - self.reads_done;
        if remaining > 0 {
            return Err(SessionError::Unread { remaining });
        }
        self.state = SessionState::Finished;
        Ok(self.log())
    }

    /// The events so far as a streaming log.
    pub fn log(&self) -> StreamLog {
        StreamLog::new(self.id.clone(), Mode::Streaming, self.events.clone())
            .expect("session events start with a read")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RatingError {
    #[error("score {0} outside 1..=5")]
    OutOfRange(i64),
    #[error("no ratings")]
    NoRatings,
    #[error("threshold {0} outside 1..=5")]
    BadThreshold(i64),
}

pub const MIN_SCORE: i64 = 1;
pub const MAX_SCORE: i64 = 5;
pub const DEFAULT_ACCEPT_THRESHOLD: i64 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub item_id: String,
    pub rater_id: String,
    pub score: i64,
}

impl RatingRecord {
    pub fn new(
        item_id: impl Into<String>,
        rater_id: impl Into<String>,
        score: i64,
    ) -> Result<Self, RatingError> {
        if !(MIN_SCORE..=MAX_SCORE).contains(&score) {
            return Err(RatingError::OutOfRange(score));
        }
        Ok(RatingRecord {
            item_id: item_id.into(),
            rater_id: rater_id.into(),
            score,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterAp {
    pub items: usize,
    pub acceptable: usize,
    pub ap: f64,
}

/// Acceptability rates. An item is acceptable when the mean of its raters'
/// scores is at least the threshold; `per_rater` applies the same threshold
/// to each rater's own scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub threshold: i64,
    pub items: usize,
    pub acceptable: usize,
    pub ap: f64,
    pub mean_score: f64,
    pub per_rater: IndexMap<String, RaterAp>,
}

/// AP over rating records. A later record from the same rater for the same
/// item replaces the earlier one.
pub fn ap_rate(records: &[RatingRecord], threshold: i64) -> Result<ApReport, RatingError> {
    if !(MIN_SCORE..=MAX_SCORE).contains(&threshold) {
        return Err(RatingError::BadThreshold(threshold));
    }
    if records.is_empty() {
        return Err(RatingError::NoRatings);
    }
    let mut latest: IndexMap<(&str, &str), i64> = IndexMap::new();
    for r in records {
        latest.insert((r.item_id.as_str(), r.rater_id.as_str()), r.score);
    }
    let mut by_item: IndexMap<&str, (i64, i64)> = IndexMap::new();
    let mut by_rater: IndexMap<&str, (usize, usize)> = IndexMap::new();
    for (&(item, rater), &score) in &latest {
        let e = by_item.entry(item).or_default();
        e.0 += score;
        e.1 += 1;
        let r = by_rater.entry(rater).or_default();
        r.0 += 1;
        if score >= threshold {
            r.1 += 1;
        }
    }
    // mean >= threshold, compared without division
    let acceptable = by_item
        .values()
        .filter(|(sum, n)| *sum >= threshold * n)
        .count();
    let items = by_item.len();
    let mean_score = by_item
        .values()
        .map(|(sum, n)| *sum as f64 / *n as f64)
        .sum::<f64>()
        / items as f64;
    let per_rater = by_rater
        .into_iter()
        .map(|(rater, (items, acceptable))| {
            (
                rater.to_string(),
                RaterAp {
                    items,
                    acceptable,
                    ap: acceptable as f64 / items as f64,
                },
            )
        })
        .collect();
    Ok(ApReport {
        threshold,
        items,
        acceptable,
        ap: acceptable as f64 / items as f64,
        mean_score,
        per_rater,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unfinished sessions: {}", unfinished.join(", "))]
pub struct ExportError {
    pub unfinished: Vec<String>,
}

/// Exported annotations: one reference line and one JSONL log per session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationExport {
    pub references: String,
    pub logs: String,
}

/// Exports finished sessions in the given order.
pub fn export_annotations<'a, I>(sessions: I) -> Result<AnnotationExport, ExportError>
where
    I: IntoIterator<Item = &'a AnnotationSession>,
{
    let sessions: Vec<&AnnotationSession> = sessions.into_iter().collect();
    let unfinished: Vec<String> = sessions
        .iter()
        .filter(|s| s.state != SessionState::Finished)
        .map(|s| s.id.clone())
        .collect();
    if !unfinished.is_empty() {
        return Err(ExportError { unfinished });
    }
    let mut references = String::new();
    let mut logs = String::new();
    for s in sessions {
        references.push_str(&s.written.to_string());
        references.push('\n');
        logs.push_str(&serialize_stream_log(&s.log()));
        logs.push('\n');
    }
    Ok(AnnotationExport { references, logs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{example_log, example_source, EXAMPLE_TARGET};
    use crate::latency::{delays_from_log, validate_log};

    fn example_session() -> AnnotationSession {
        let mut s = AnnotationSession::new("example", example_source()).unwrap();
        for tgt in EXAMPLE_TARGET {
            s.read().unwrap();
            s.write(tgt).unwrap();
        }
        s
    }

    #[test]
    fn create_exposes_first_token() {
        let s = AnnotationSession::new("a", example_source()).unwrap();
        assert_eq!(s.exposed(), ["And"]);
        assert_eq!(s.reads_done(), 1);
        assert_eq!(
            AnnotationSession::new("b", TokenSeq::empty()),
            Err(SessionError::EmptySource)
        );
    }

    #[test]
    fn read_then_write() {
        let mut s = AnnotationSession::new("a", example_source()).unwrap();
        assert_eq!(s.read().unwrap(), "this");
        assert_eq!(s.write("这").unwrap().tokens(), ["这"]);
        s.write("个").unwrap();
        assert_eq!(s.written().tokens(), ["这", "个"]);
    }

    #[test]
    fn read_past_end() {
        let mut s = AnnotationSession::new("a", TokenSeq::from_line("x")).unwrap();
        assert_eq!(s.read(), Err(SessionError::SourceExhausted));
        assert_eq!(SessionError::SourceExhausted.to_string(), "all words read");
    }

    #[test]
    fn illegal_tokens() {
        let mut s = AnnotationSession::new("a", example_source()).unwrap();
        assert!(matches!(s.write(""), Err(SessionError::IllegalToken(_))));
        assert!(matches!(s.write("a b"), Err(SessionError::IllegalToken(_))));
        assert_eq!(s.events().len(), 1);
    }

    #[test]
    fn finish_example() {
        let mut s = example_session();
        let log = s.finish().unwrap();
        assert_eq!(log.actions(), example_log().actions());
        assert_eq!(log.actions().len(), 9);
        assert!(validate_log(&log, Some(&example_source())).is_empty());
        assert_eq!(delays_from_log(&log).unwrap().delays(), &[2, 3, 4, 5]);
        assert_eq!(s.write("x"), Err(SessionError::Finished));
        assert_eq!(s.read(), Err(SessionError::Finished));
        assert_eq!(s.finish(), Err(SessionError::Finished));
    }

    #[test]
    fn finish_too_early() {
        let mut s = AnnotationSession::new("a", example_source()).unwrap();
        s.read().unwrap();
        let err = s.finish().unwrap_err();
        assert_eq!(err, SessionError::Unread { remaining: 3 });
        assert_eq!(err.to_string(), "3 source tokens unread");
        assert_eq!(s.state(), SessionState::Active);
    }

    #[test]
    fn ap_examples() {
        let recs: Vec<_> = [5, 4, 3, 2, 1]
            .iter()
            .enumerate()
            .map(|(i, &s)| RatingRecord::new(format!("i{i}"), "r", s).unwrap())
            .collect();
        let ap = ap_rate(&recs, 3).unwrap();
        assert_eq!(ap.ap, 0.6);
        assert_eq!(ap.acceptable, 3);
        assert_eq!(ap.per_rater["r"].ap, 0.6);

        let recs: Vec<_> = (0..4).map(|i| RatingRecord::new(format!("i{i}"), "r", 3).unwrap()).collect();
        assert_eq!(ap_rate(&recs, 3).unwrap().ap, 1.0);
        assert_eq!(ap_rate(&[], 3), Err(RatingError::NoRatings));
        assert_eq!(RatingRecord::new("i", "r", 6), Err(RatingError::OutOfRange(6)));
        assert_eq!(RatingRecord::new("i", "r", 0), Err(RatingError::OutOfRange(0)));
    }

    #[test]
    fn ap_mean_over_raters() {
        let r = |i: &str, who: &str, s| RatingRecord::new(i, who, s).unwrap();
        // item a: mean 3 (acceptable), item b: mean 8/3 (not)
        let recs = vec![
            r("a", "x", 2), r("a", "y", 3), r("a", "z", 4),
            r("b", "x", 2), r("b", "y", 3), r("b", "z", 3),
        ];
        let ap = ap_rate(&recs, 3).unwrap();
        assert_eq!(ap.items, 2);
        assert_eq!(ap.acceptable, 1);
        assert_eq!(ap.per_rater["x"].ap, 0.0);
        assert_eq!(ap.per_rater["z"].ap, 1.0);
        // re-rating replaces
        let mut recs = recs;
        recs.push(r("b", "x", 5));
        assert_eq!(ap_rate(&recs, 3).unwrap().acceptable, 2);
    }

    #[test]
    fn export_example() {
        let mut s = example_session();
        s.finish().unwrap();
        let e = export_annotations([&s]).unwrap();
        assert_eq!(e.references, "这 使 我 难过\n");
        assert_eq!(e.logs, format!("{}\n", crate::fixtures::EXAMPLE_LINE));
        assert_eq!(export_annotations([&s]).unwrap(), e);

        let open = AnnotationSession::new("open", example_source()).unwrap();
        let err = export_annotations([&s, &open]).unwrap_err();
        assert_eq!(err.unfinished, vec!["open".to_string()]);
    }
}
