//! Session persistence: a manifest of session metadata plus one append-only event log
//! per session.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use fraudaware_core::personalize::FeedbackBundle;
use fraudaware_core::session::{append_events, read_log, SessionEvent, SessionId};

use crate::error::ApiError;

/// Public metadata of a live session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSession {
    pub session_id: SessionId,
    pub user_age: u32,
    pub scenario_id: String,
    /// Unix seconds.
    pub created_at: u64,
    pub current_tick: u32,
}

#[derive(Debug, Clone)]
pub struct StoredSession {
    pub meta: ApiSession,
    pub events: Vec<SessionEvent>,
}

pub trait EventStore: Send + Sync {
    /// Creates or updates the session's metadata.
    fn put_meta(&self, meta: &ApiSession) -> Result<(), ApiError>;
    fn append(&self, session: &SessionId, events: &[SessionEvent]) -> Result<(), ApiError>;
    fn append_feedback(&self, session: &SessionId, bundle: &FeedbackBundle) -> Result<(), ApiError>;
    /// Every stored session, ordered by id.
    fn load(&self) -> Result<Vec<StoredSession>, ApiError>;
}

#[derive(Default)]
struct MemoryInner {
    sessions: BTreeMap<SessionId, StoredSession>,
    feedback: BTreeMap<SessionId, Vec<FeedbackBundle>>,
}

/// Volatile store for tests and bot runs.
#[derive(Default)]
pub struct MemoryStore {
    inner: Mutex<MemoryInner>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn feedback(&self, session: &SessionId) -> Vec<FeedbackBundle> {
        self.inner.lock().expect("store lock").feedback.get(session).cloned().unwrap_or_default()
    }
}

impl EventStore for MemoryStore {
    fn put_meta(&self, meta: &ApiSession) -> Result<(), ApiError> {
        let mut g = self.inner.lock().expect("store lock");
        g.sessions
            .entry(meta.session_id.clone())
            .and_modify(|s| s.meta = meta.clone())
            .or_insert_with(|| StoredSession { meta: meta.clone(), events: Vec::new() });
        Ok(())
    }

    fn append(&self, session: &SessionId, events: &[SessionEvent]) -> Result<(), ApiError> {
        let mut g = self.inner.lock().expect("store lock");
        let s = g.sessions.get_mut(session).ok_or_else(|| ApiError::storage(format!("no stored session {session}")))?;
        s.events.extend_from_slice(events);
        Ok(())
    }

    fn append_feedback(&self, session: &SessionId, bundle: &FeedbackBundle) -> Result<(), ApiError> {
        self.inner.lock().expect("store lock").feedback.entry(session.clone()).or_default().push(bundle.clone());
        Ok(())
    }

    fn load(&self) -> Result<Vec<StoredSession>, ApiError> {
        Ok(self.inner.lock().expect("store lock").sessions.values().cloned().collect())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    sessions: Vec<ApiSession>,
}

/// Directory-backed store:
///
/// ```text
/// <root>/manifest.json                 session metadata, rewritten atomically
/// <root>/sessions/<id>.jsonl           event log
/// <root>/sessions/<id>.feedback.jsonl  feedback bundles as they change
/// ```
pub struct FileStore {
    root: PathBuf,
    manifest: Mutex<BTreeMap<SessionId, ApiSession>>,
}

pub const DATA_DIR_ENV: &str = "FRAUDAWARE_DATA_DIR";

fn io_err(path: &Path, e: impl std::fmt::Display) -> ApiError {
    ApiError::storage(format!("{}: {e}", path.display()))
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ApiError> {
        let root = root.into();
        let sessions = root.join("sessions");
        fs::create_dir_all(&sessions).map_err(|e| io_err(&sessions, e))?;
        let path = root.join("manifest.json");
        let manifest = if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
            let m: Manifest = serde_json::from_str(&text).map_err(|e| io_err(&path, e))?;
            if m.version != 1 {
                return Err(io_err(&path, format!("unsupported manifest version {}", m.version)));
            }
            m.sessions.into_iter().map(|s| (s.session_id.clone(), s)).collect()
        } else {
            BTreeMap::new()
        };
        Ok(Self { root, manifest: Mutex::new(manifest) })
    }

    /// Opens the directory named by `FRAUDAWARE_DATA_DIR`, if set.
    pub fn from_env() -> Option<Result<Self, ApiError>> {
        std::env::var_os(DATA_DIR_ENV).map(|d| Self::open(PathBuf::from(d)))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn log_path(&self, id: &SessionId, suffix: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{id}{suffix}"))
    }

    fn write_manifest(&self, sessions: &BTreeMap<SessionId, ApiSession>) -> Result<(), ApiError> {
        let path = self.root.join("manifest.json");
        let tmp = self.root.join("manifest.json.tmp");
        let m = Manifest { version: 1, sessions: sessions.values().cloned().collect() };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        fs::write(&tmp, text).map_err(|e| io_err(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| io_err(&path, e))
    }

    fn open_append(path: &Path) -> Result<BufWriter<File>, ApiError> {
        OpenOptions::new().create(true).append(true).open(path).map(BufWriter::new).map_err(|e| io_err(path, e))
    }
}

impl EventStore for FileStore {
    fn put_meta(&self, meta: &ApiSession) -> Result<(), ApiError> {
        let mut g = self.manifest.lock().expect("manifest lock");
        g.insert(meta.session_id.clone(), meta.clone());
        self.write_manifest(&g)
    }

    fn append(&self, session: &SessionId, events: &[SessionEvent]) -> Result<(), ApiError> {
        let path = self.log_path(session, ".jsonl");
        let mut w = Self::open_append(&path)?;
        append_events(&mut w, events).map_err(|e| io_err(&path, e))?;
        w.flush().map_err(|e| io_err(&path, e))?;
        w.get_ref().sync_data().map_err(|e| io_err(&path, e))
    }

    fn append_feedback(&self, session: &SessionId, bundle: &FeedbackBundle) -> Result<(), ApiError> {
        let path = self.log_path(session, ".feedback.jsonl");
        let mut w = Self::open_append(&path)?;
        let line = serde_json::to_string(bundle).expect("bundle serializes");
        writeln!(w, "{line}").and_then(|_| w.flush()).map_err(|e| io_err(&path, e))
    }

    fn load(&self) -> Result<Vec<StoredSession>, ApiError> {
        let g = self.manifest.lock().expect("manifest lock");
        g.values()
            .map(|meta| {
                let path = self.log_path(&meta.session_id, ".jsonl");
                let events = if path.exists() {
                    let f = File::open(&path).map_err(|e| io_err(&path, e))?;
                    read_log(BufReader::new(f)).map_err(|e| io_err(&path, e))?
                } else {
                    Vec::new()
                };
                Ok(StoredSession { meta: meta.clone(), events })
            })
            .collect()
    }
}
