//! Session registry with journaled state changes.
//!
//! Each mutation is applied to a copy of the session, appended to the
//! journal, and only then committed. A failed append therefore leaves the
//! in-memory state untouched, and the journal never records an event that
//! the state machine rejected. Per-session mutexes serialize actions on one
//! session; different sessions proceed independently.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use indexmap::IndexMap;
use monoeval_core::annotation::{
    ap_rate, export_annotations, AnnotationExport, AnnotationSession, ApReport, RatingRecord,
    SessionError, SessionState,
};
use monoeval_core::stream::{Action, StreamLog};
use monoeval_core::TokenSeq;
use parking_lot::{Mutex, RwLock};
use serde::Serialize;

use crate::error::StoreError;
use crate::journal::{Durability, Journal, SessionEvent};

/// What the annotator is allowed to see of a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub state: SessionState,
    pub source_len: usize,
    pub reads_done: usize,
    pub exposed: Vec<String>,
    pub target_stream: Vec<String>,
    pub actions: Vec<Action>,
    pub finishable: bool,
}

impl SessionView {
    fn of(s: &AnnotationSession) -> Self {
        SessionView {
            session_id: s.id().to_string(),
            state: s.state(),
            source_len: s.source().len(),
            reads_done: s.reads_done(),
            exposed: s.exposed().to_vec(),
            target_stream: s.written().tokens().to_vec(),
            actions: s.events().to_vec(),
            finishable: s.finishable(),
        }
    }
}

type Slot = Arc<Mutex<AnnotationSession>>;

pub struct SessionStore {
    journal: Option<Journal>,
    sessions: RwLock<IndexMap<String, Slot>>,
    ratings: Mutex<Vec<RatingRecord>>,
    next_id: AtomicU64,
}

fn session_id(n: u64) -> String {
    format!("s{n:06}")
}

fn apply(session: &mut AnnotationSession, event: &SessionEvent) -> Result<(), SessionError> {
    match event {
        SessionEvent::Create { .. } => unreachable!("create is handled by the caller"),
        SessionEvent::Read => session.read().map(drop),
        SessionEvent::Write { token } => session.write(token).map(drop),
        SessionEvent::Finish => session.finish().map(drop),
    }
}

impl SessionStore {
    /// A store with no persistence.
    pub fn in_memory() -> Self {
        SessionStore {
            journal: None,
            sessions: RwLock::new(IndexMap::new()),
            ratings: Mutex::new(Vec::new()),
            next_id: AtomicU64::new(1),
        }
    }

    /// Opens (or creates) a journal directory and replays it.
    pub fn open(dir: &std::path::Path, durability: Durability) -> Result<Self, StoreError> {
        let journal = Journal::open(dir, durability)?;
        let mut sessions = IndexMap::new();
        let mut max_seq = 0u64;
        for id in journal.session_ids()? {
            let session = replay_session(&journal, &id)?;
            if let Some(n) = id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                max_seq = max_seq.max(n);
            }
            sessions.insert(id, Arc::new(Mutex::new(session)));
        }
        let ratings = journal.read_ratings()?;
        Ok(SessionStore {
            journal: Some(journal),
            sessions: RwLock::new(sessions),
            ratings: Mutex::new(ratings),
            next_id: AtomicU64::new(max_seq + 1),
        })
    }

    fn slot(&self, id: &str) -> Result<Slot, StoreError> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    fn record(&self, id: &str, event: &SessionEvent) -> Result<(), StoreError> {
        match &self.journal {
            Some(j) => j.append_session(id, event),
            None => Ok(()),
        }
    }

    pub fn create(&self, source: TokenSeq) -> Result<SessionView, StoreError> {
        let id = session_id(self.next_id.fetch_add(1, Ordering::SeqCst));
        let session = AnnotationSession::new(id.clone(), source)?;
        self.record(
            &id,
            &SessionEvent::Create {
                session_id: id.clone(),
                source: session.source().tokens().to_vec(),
            },
        )?;
        let view = SessionView::of(&session);
        self.sessions.write().insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    fn mutate<T>(
        &self,
        id: &str,
        event: SessionEvent,
        out: impl FnOnce(&AnnotationSession) -> T,
    ) -> Result<T, StoreError> {
        let slot = self.slot(id)?;
        let mut guard = slot.lock();
        let mut next = guard.clone();
        apply(&mut next, &event)?;
        self.record(id, &event)?;
        *guard = next;
        Ok(out(&guard))
    }

    /// Reads the next source token; returns it.
    pub fn read(&self, id: &str) -> Result<String, StoreError> {
        self.mutate(id, SessionEvent::Read, |s| {
            s.exposed().last().expect("at least one read").clone()
        })
    }

    /// Writes one target token; returns the target stream.
    pub fn write(&self, id: &str, token: &str) -> Result<Vec<String>, StoreError> {
        self.mutate(
            id,
            SessionEvent::Write {
                token: token.to_string(),
            },
            |s| s.written().tokens().to_vec(),
        )
    }

    pub fn finish(&self, id: &str) -> Result<StreamLog, StoreError> {
        self.mutate(id, SessionEvent::Finish, AnnotationSession::log)
    }

    pub fn view(&self, id: &str) -> Result<SessionView, StoreError> {
        Ok(SessionView::of(&self.slot(id)?.lock()))
    }

    /// Views of every session in creation order.
    pub fn list(&self) -> Vec<SessionView> {
        let slots: Vec<Slot> = self.sessions.read().values().cloned().collect();
        slots.iter().map(|s| SessionView::of(&s.lock())).collect()
    }

    /// Snapshot copies of every session in creation order.
    pub fn sessions(&self) -> Vec<AnnotationSession> {
        let slots: Vec<Slot> = self.sessions.read().values().cloned().collect();
        slots.iter().map(|s| s.lock().clone()).collect()
    }

    pub fn rate(&self, item_id: &str, rater_id: &str, score: i64) -> Result<RatingRecord, StoreError> {
        let record = RatingRecord::new(item_id, rater_id, score)?;
        let mut ratings = self.ratings.lock();
        if let Some(j) = &self.journal {
            j.append_rating(&record)?;
        }
        ratings.push(record.clone());
        Ok(record)
    }

    pub fn ratings(&self) -> Vec<RatingRecord> {
        self.ratings.lock().clone()
    }

    pub fn ap(&self, threshold: i64) -> Result<ApReport, StoreError> {
        Ok(ap_rate(&self.ratings.lock(), threshold)?)
    }

    /// References and logs for every session; fails listing unfinished ones.
    pub fn export(&self) -> Result<AnnotationExport, StoreError> {
        let sessions = self.sessions();
        Ok(export_annotations(&sessions)?)
    }
}

fn replay_session(journal: &Journal, id: &str) -> Result<AnnotationSession, StoreError> {
    let path = journal.root().join("sessions").join(format!("{id}.jsonl"));
    let bad = |message: String| StoreError::Replay {
        path: path.clone(),
        message,
    };
    let events = journal.read_session(id)?;
    let mut iter = events.iter();
    let mut session = match iter.next() {
        Some(SessionEvent::Create { session_id, source }) if session_id == id => {
            let source = TokenSeq::new(source.clone()).map_err(|e| bad(e.to_string()))?;
            AnnotationSession::new(session_id.clone(), source).map_err(|e| bad(e.to_string()))?
        }
        _ => return Err(bad("journal must start with a create event for this session".into())),
    };
    for (n, event) in iter.enumerate() {
        if matches!(event, SessionEvent::Create { .. }) {
            return Err(bad(format!("event {}: repeated create", n + 2)));
        }
        apply(&mut session, event).map_err(|e| bad(format!("event {}: {e}", n + 2)))?;
    }
    Ok(session)
}
