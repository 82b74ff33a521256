//! Append-only session logs with periodic full-state snapshots.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use scicafe_core::session::{replay, replay_onto, Event, ReplayError, SessionId, SessionState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::AckEcho;

/// One log line: an event plus the command echo that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub event: Event,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ack: Option<AckEcho>,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("storage full")]
    Full,
    #[error("{session}: line {line} is corrupt: {reason}")]
    Corrupt {
        session: SessionId,
        line: usize,
        reason: String,
    },
    #[error("{session}: {source}")]
    Replay {
        session: SessionId,
        source: ReplayError,
    },
    #[error("session id {0:?} is not storable")]
    InvalidId(String),
}

/// A final line that was cut short by a crash and dropped on recovery.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TornTail {
    pub line: usize,
    pub bytes: usize,
}

#[derive(Debug, Clone)]
pub struct Recovered {
    pub state: SessionState,
    pub records: Vec<Record>,
    pub snapshot_seq: Option<u64>,
    /// Events folded on top of the snapshot (or from scratch).
    pub replayed: usize,
    pub torn: Option<TornTail>,
}

pub trait EventStore: Send + Sync {
    fn append(&self, session: &SessionId, records: &[Record]) -> Result<(), StoreError>;
    fn write_snapshot(&self, state: &SessionState) -> Result<(), StoreError>;
    /// `None` when the session has no events.
    fn load(&self, session: &SessionId) -> Result<Option<Recovered>, StoreError>;
    fn sessions(&self) -> Result<Vec<SessionId>, StoreError>;
}

pub fn is_storable_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    seq: u64,
    state: SessionState,
}

/// Rebuilds state from an optional snapshot plus the records after it.
pub fn recover(
    session: &SessionId,
    snapshot: Option<SessionState>,
    records: Vec<Record>,
    torn: Option<TornTail>,
) -> Result<Option<Recovered>, StoreError> {
    let Some(last) = records.last() else {
        return Ok(None);
    };
    let last_seq = last.event.seq;
    let snapshot = snapshot.filter(|s| s.last_seq <= last_seq && s.id == *session);
    let replay_err = |source| StoreError::Replay {
        session: session.clone(),
        source,
    };
    let (state, snapshot_seq, replayed) = match snapshot {
        Some(mut state) => {
            let from = state.last_seq;
            let tail: Vec<Event> = records
                .iter()
                .filter(|r| r.event.seq > from)
                .map(|r| r.event.clone())
                .collect();
            replay_onto(&mut state, &tail).map_err(replay_err)?;
            (state, Some(from), tail.len())
        }
        None => {
            let events: Vec<Event> = records.iter().map(|r| r.event.clone()).collect();
            (replay(&events).map_err(replay_err)?, None, events.len())
        }
    };
    Ok(Some(Recovered {
        state,
        records,
        snapshot_seq,
        replayed,
        torn,
    }))
}

/// `<root>/sessions/<id>/events.jsonl` and `snapshot.json`.
pub struct FileStore {
    root: PathBuf,
    sync: bool,
    handles: Mutex<HashMap<SessionId, File>>,
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("sessions"))?;
        Ok(Self {
            root,
            sync: false,
            handles: Mutex::new(HashMap::new()),
        })
    }

    /// fsync after every append batch.
    pub fn with_sync(mut self, sync: bool) -> Self {
        self.sync = sync;
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn session_dir(&self, session: &SessionId) -> Result<PathBuf, StoreError> {
        if !is_storable_id(session.as_str()) {
            return Err(StoreError::InvalidId(session.as_str().to_owned()));
        }
        Ok(self.root.join("sessions").join(session.as_str()))
    }

    pub fn log_path(&self, session: &SessionId) -> Result<PathBuf, StoreError> {
        Ok(self.session_dir(session)?.join("events.jsonl"))
    }

    fn read_log(&self, session: &SessionId) -> Result<(Vec<Record>, Option<TornTail>), StoreError> {
        let path = self.log_path(session)?;
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok((Vec::new(), None)),
            Err(e) => return Err(e.into()),
        };
        let mut records = Vec::new();
        let mut good_len = 0;
        let mut torn = None;
        let mut start = 0;
        let mut line_no = 0;
        while start < bytes.len() {
            line_no += 1;
            let end = bytes[start..].iter().position(|b| *b == b'\n').map(|p| start + p);
            let chunk = &bytes[start..end.unwrap_or(bytes.len())];
            let parsed = std::str::from_utf8(chunk)
                .map_err(|e| e.to_string())
                .and_then(|s| serde_json::from_str::<Record>(s).map_err(|e| e.to_string()));
            let is_last = end.is_none_or(|e| e + 1 >= bytes.len());
            match (parsed, end) {
                (Ok(r), Some(e)) => {
                    records.push(r);
                    good_len = e + 1;
                    start = e + 1;
                }
                (_, _) if is_last => {
                    torn = Some(TornTail {
                        line: line_no,
                        bytes: bytes.len() - good_len,
                    });
                    break;
                }
                (Err(reason), _) => {
                    return Err(StoreError::Corrupt {
                        session: session.clone(),
                        line: line_no,
                        reason,
                    })
                }
                (Ok(_), None) => unreachable!("an unterminated line is always last"),
            }
        }
        if let Some(t) = &torn {
            tracing::warn!(session = %session, line = t.line, bytes = t.bytes, "truncating torn log tail");
            self.handles.lock().unwrap_or_else(|e| e.into_inner()).remove(session);
            OpenOptions::new().write(true).open(&path)?.set_len(good_len as u64)?;
        }
        Ok((records, torn))
    }
}

fn write_full(file: &mut File, data: &[u8]) -> Result<(), StoreError> {
    file.write_all(data).map_err(|e| {
        if e.kind() == io::ErrorKind::StorageFull {
            StoreError::Full
        } else {
            StoreError::Io(e)
        }
    })
}

impl EventStore for FileStore {
    fn append(&self, session: &SessionId, records: &[Record]) -> Result<(), StoreError> {
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, r).map_err(io::Error::other)?;
            buf.push(b'\n');
        }
        let mut handles = self.handles.lock().unwrap_or_else(|e| e.into_inner());
        if !handles.contains_key(session) {
            let dir = self.session_dir(session)?;
            fs::create_dir_all(&dir)?;
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(dir.join("events.jsonl"))?;
            handles.insert(session.clone(), file);
        }
        let file = handles.get_mut(session).expect("inserted above");
        write_full(file, &buf)?;
        if self.sync {
            file.sync_data()?;
        }
        Ok(())
    }

    fn write_snapshot(&self, state: &SessionState) -> Result<(), StoreError> {
        let dir = self.session_dir(&state.id)?;
        fs::create_dir_all(&dir)?;
        let tmp = dir.join("snapshot.json.tmp");
        let snap = Snapshot {
            seq: state.last_seq,
            state: state.clone(),
        };
        let mut file = File::create(&tmp)?;
        write_full(&mut file, &serde_json::to_vec(&snap).map_err(io::Error::other)?)?;
        file.sync_data()?;
        fs::rename(tmp, dir.join("snapshot.json"))?;
        Ok(())
    }

    fn load(&self, session: &SessionId) -> Result<Option<Recovered>, StoreError> {
        let (records, torn) = self.read_log(session)?;
        let snap_path = self.session_dir(session)?.join("snapshot.json");
        let snapshot = match fs::read(&snap_path) {
            Ok(bytes) => match serde_json::from_slice::<Snapshot>(&bytes) {
                Ok(s) if s.seq == s.state.last_seq => Some(s.state),
                _ => {
                    tracing::warn!(session = %session, "ignoring unreadable snapshot");
                    None
                }
            },
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        recover(session, snapshot, records, torn)
    }

    fn sessions(&self) -> Result<Vec<SessionId>, StoreError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.root.join("sessions"))? {
            let entry = entry?;
            if entry.path().join("events.jsonl").is_file() {
                if let Some(name) = entry.file_name().to_str() {
                    out.push(SessionId::new(name));
                }
            }
        }
        out.sort();
        Ok(out)
    }
}

#[derive(Default)]
struct MemSession {
    records: Vec<Record>,
    snapshot: Option<SessionState>,
}

/// In-memory store; can be told to start failing after some appends.
#[derive(Default)]
pub struct MemoryStore {
    sessions: Mutex<HashMap<SessionId, MemSession>>,
    fail_after: Mutex<Option<usize>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends beyond the next `n` batches fail with [`StoreError::Full`].
    pub fn fail_after(&self, n: usize) {
        *self.fail_after.lock().unwrap_or_else(|e| e.into_inner()) = Some(n);
    }

    pub fn records(&self, session: &SessionId) -> Vec<Record> {
        self.sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(session)
            .map(|s| s.records.clone())
            .unwrap_or_default()
    }

    pub fn snapshot_seq(&self, session: &SessionId) -> Option<u64> {
        self.sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(session)
            .and_then(|s| s.snapshot.as_ref().map(|s| s.last_seq))
    }
}

impl EventStore for MemoryStore {
    fn append(&self, session: &SessionId, records: &[Record]) -> Result<(), StoreError> {
        {
            let mut budget = self.fail_after.lock().unwrap_or_else(|e| e.into_inner());
            match budget.as_mut() {
                Some(0) => return Err(StoreError::Full),
                Some(n) => *n -= 1,
                None => {}
            }
        }
        let mut sessions = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        sessions
            .entry(session.clone())
            .or_default()
            .records
            .extend_from_slice(records);
        Ok(())
    }

    fn write_snapshot(&self, state: &SessionState) -> Result<(), StoreError> {
        let mut sessions = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        sessions.entry(state.id.clone()).or_default().snapshot = Some(state.clone());
        Ok(())
    }

    fn load(&self, session: &SessionId) -> Result<Option<Recovered>, StoreError> {
        let (records, snapshot) = {
            let sessions = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
            match sessions.get(session) {
                Some(s) => (s.records.clone(), s.snapshot.clone()),
                None => return Ok(None),
            }
        };
        recover(session, snapshot, records, None)
    }

    fn sessions(&self) -> Result<Vec<SessionId>, StoreError> {
        let sessions = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        let mut ids: Vec<SessionId> = sessions
            .iter()
            .filter(|(_, s)| !s.records.is_empty())
            .map(|(id, _)| id.clone())
            .collect();
        ids.sort();
        Ok(ids)
    }
}
