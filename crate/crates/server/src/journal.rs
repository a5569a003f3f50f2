//! Append-only JSONL journals.
//!
//! Layout under the journal directory:
//!
//! ```text
//! sessions/<session_id>.jsonl   one event per line, first line is "create"
//! ratings.jsonl                 one rating record per line
//! ```
//!
//! Every event is written with a single `write_all` of the full line
//! (including the newline) on a file opened in append mode. A line without
//! its trailing newline can only be the result of a crash mid-write and is
//! ignored on replay.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use monoeval_core::annotation::RatingRecord;
use serde::{Deserialize, Serialize};

use crate::error::StoreError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum SessionEvent {
    Create {
        session_id: String,
        source: Vec<String>,
    },
    Read,
    Write {
        token: String,
    },
    Finish,
}

/// Whether each append is followed by `fsync`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Durability {
    Sync,
    Flush,
}

#[derive(Debug)]
pub struct Journal {
    root: PathBuf,
    durability: Durability,
}

impl Journal {
    pub fn open(root: &Path, durability: Durability) -> Result<Self, StoreError> {
        let sessions = root.join("sessions");
        fs::create_dir_all(&sessions).map_err(|e| StoreError::io(&sessions, e))?;
        Ok(Journal {
            root: root.to_path_buf(),
            durability,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.jsonl"))
    }

    fn ratings_path(&self) -> PathBuf {
        self.root.join("ratings.jsonl")
    }

    fn append(&self, path: &Path, value: &impl Serialize) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(value).expect("journal events serialize");
        line.push('\n');
        let write = || -> io::Result<()> {
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            f.write_all(line.as_bytes())?;
            match self.durability {
                Durability::Sync => f.sync_data(),
                Durability::Flush => f.flush(),
            }
        };
        write().map_err(|e| StoreError::io(path, e))
    }

    pub fn append_session(&self, id: &str, event: &SessionEvent) -> Result<(), StoreError> {
        self.append(&self.session_path(id), event)
    }

    pub fn append_rating(&self, record: &RatingRecord) -> Result<(), StoreError> {
        self.append(&self.ratings_path(), record)
    }

    /// Session ids with a journal file, sorted.
    pub fn session_ids(&self) -> Result<Vec<String>, StoreError> {
        let dir = self.root.join("sessions");
        let mut ids = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| StoreError::io(&dir, e))? {
            let path = entry.map_err(|e| StoreError::io(&dir, e))?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn read_session(&self, id: &str) -> Result<Vec<SessionEvent>, StoreError> {
        read_lines(&self.session_path(id))
    }

    pub fn read_ratings(&self) -> Result<Vec<RatingRecord>, StoreError> {
        let path = self.ratings_path();
        if !path.exists() {
            return Ok(Vec::new());
        }
        read_lines(&path)
    }
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, StoreError> {
    let mut text = String::new();
    io::Read::read_to_string(
        &mut File::open(path).map_err(|e| StoreError::io(path, e))?,
        &mut text,
    )
    .map_err(|e| StoreError::io(path, e))?;
    let complete = match text.rfind('\n') {
        Some(end) => &text[..=end],
        None => "",
    };
    if complete.len() < text.len() {
        tracing::warn!(path = %path.display(), "ignoring torn final journal line");
    }
    complete
        .lines()
        .enumerate()
        .map(|(n, line)| {
            serde_json::from_str(line).map_err(|e| StoreError::Journal {
                path: path.to_path_buf(),
                line: n + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_encoding() {
        let e = SessionEvent::Write { token: "这".into() };
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"event":"write","token":"这"}"#
        );
        assert_eq!(serde_json::to_string(&SessionEvent::Read).unwrap(), r#"{"event":"read"}"#);
    }

    #[test]
    fn torn_line_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let j = Journal::open(dir.path(), Durability::Flush).unwrap();
        j.append_session("s1", &SessionEvent::Read).unwrap();
        let path = j.session_path("s1");
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(br#"{"event":"wri"#).unwrap();
        assert_eq!(j.read_session("s1").unwrap(), vec![SessionEvent::Read]);
    }

    #[test]
    fn corrupt_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let j = Journal::open(dir.path(), Durability::Flush).unwrap();
        fs::write(j.session_path("s1"), "{\"event\":\"read\"}\nnot json\n").unwrap();
        assert!(matches!(
            j.read_session("s1"),
            Err(StoreError::Journal { line: 2, .. })
        ));
    }
}
