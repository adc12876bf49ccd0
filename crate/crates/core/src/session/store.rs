//! Session documents and the session store.
//!
//! A document is JSON of the form `{"schema_version": 1, "session": {...}}`.
//! Derived columns are not trusted on read; they are recomputed from the
//! stored counts.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde_json::Value;

use super::{ExperimentSession, SessionId};
use crate::error::{Error, Result};
use crate::rng::RNG_ALGORITHM;

pub const SCHEMA_VERSION: u64 = 1;

impl ExperimentSession {
    /// Serializes the full session, seed and generation cursor included.
    pub fn to_document(&self) -> String {
        let doc = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "session": self,
        });
        serde_json::to_string_pretty(&doc).expect("session serializes")
    }

    pub fn from_document(text: &str) -> Result<Self> {
        let doc: Value =
            serde_json::from_str(text).map_err(|e| Error::Integrity(format!("malformed document: {e}")))?;
        let version = doc
            .get("schema_version")
            .ok_or_else(|| Error::Integrity("missing schema_version".into()))?
            .as_u64()
            .ok_or_else(|| Error::Integrity("schema_version is not an unsigned integer".into()))?;
        if version != SCHEMA_VERSION {
            return Err(Error::UnsupportedSchema {
                found: version,
                supported: SCHEMA_VERSION,
            });
        }
        let body = doc
            .get("session")
            .cloned()
            .ok_or_else(|| Error::Integrity("missing session body".into()))?;
        let mut session: ExperimentSession =
            serde_json::from_value(body).map_err(|e| Error::Integrity(format!("invalid session body: {e}")))?;
        if session.rng_algorithm != RNG_ALGORITHM {
            return Err(Error::Integrity(format!(
                "session was drawn with '{}', this build uses '{RNG_ALGORITHM}'",
                session.rng_algorithm
            )));
        }
        session.check_integrity()?;
        session.recompute_all().map_err(|e| Error::Integrity(e.to_string()))?;
        Ok(session)
    }
}

pub type SharedSession = Arc<Mutex<ExperimentSession>>;

/// In-memory sessions, optionally mirrored to one document per session in
/// a directory. Mutations of one session are serialized by its mutex.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<SessionId, SharedSession>>,
    dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_directory(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            sessions: RwLock::default(),
            dir: Some(dir),
        })
    }

    pub fn directory(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path_for(&self, id: &SessionId) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{id}.json")))
    }

    fn write_through(&self, session: &ExperimentSession) -> Result<()> {
        if let Some(path) = self.path_for(session.id()) {
            let tmp = path.with_extension("json.tmp");
            fs::write(&tmp, session.to_document())?;
            fs::rename(tmp, path)?;
        }
        Ok(())
    }

    /// Stores (or replaces) a session.
    pub fn save_session(&self, session: &ExperimentSession) -> Result<()> {
        self.write_through(session)?;
        let mut map = self.sessions.write().expect("store lock poisoned");
        match map.get(session.id()) {
            Some(shared) => *shared.lock().expect("session lock poisoned") = session.clone(),
            None => {
                map.insert(session.id().clone(), Arc::new(Mutex::new(session.clone())));
            }
        }
        Ok(())
    }

    fn shared(&self, id: &str) -> Result<SharedSession> {
        let id = SessionId::parse(id)?;
        if let Some(s) = self.sessions.read().expect("store lock poisoned").get(&id) {
            return Ok(Arc::clone(s));
        }
        let path = self.path_for(&id).ok_or_else(|| Error::NotFound(id.to_string()))?;
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::NotFound(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        let session = ExperimentSession::from_document(&text)?;
        if session.id() != &id {
            return Err(Error::Integrity(format!(
                "document {} holds session {}",
                path.display(),
                session.id()
            )));
        }
        let mut map = self.sessions.write().expect("store lock poisoned");
        Ok(Arc::clone(
            map.entry(id).or_insert_with(|| Arc::new(Mutex::new(session))),
        ))
    }

    /// A copy of the stored session.
    pub fn load_session(&self, id: &str) -> Result<ExperimentSession> {
        let shared = self.shared(id)?;
        let guard = shared.lock().expect("session lock poisoned");
        Ok(guard.clone())
    }

    /// Applies `f` to the stored session under its lock and persists the
    /// result when `f` succeeds.
    pub fn update<T>(&self, id: &str, f: impl FnOnce(&mut ExperimentSession) -> Result<T>) -> Result<T> {
        let shared = self.shared(id)?;
        let mut guard = shared.lock().expect("session lock poisoned");
        let out = f(&mut guard)?;
        self.write_through(&guard)?;
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("store lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
