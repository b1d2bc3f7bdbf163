//! Thing Description directory with CRUDL, TTL expiry and path queries.

mod path;

pub use path::{CmpOp, Filter, MalformedExpression, PathExpr, Step};

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wot::{TdError, ThingDescription};

/// Time source in seconds. Injected so expiry is testable.
pub trait Clock: Send + Sync {
    fn now(&self) -> f64;
}

#[derive(Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Default)]
pub struct ManualClock {
    now: Mutex<f64>,
}

impl ManualClock {
    pub fn new(start: f64) -> Self {
        Self { now: Mutex::new(start) }
    }

    pub fn advance(&self, seconds: f64) {
        *self.now.lock().unwrap_or_else(|e| e.into_inner()) += seconds;
    }

    pub fn set(&self, t: f64) {
        *self.now.lock().unwrap_or_else(|e| e.into_inner()) = t;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> f64 {
        *self.now.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectoryEntry {
    pub td: ThingDescription,
    pub registered_at: f64,
    pub updated_at: f64,
    #[serde(default)]
    pub ttl_s: Option<f64>,
}

impl DirectoryEntry {
    pub fn is_expired(&self, now: f64) -> bool {
        self.ttl_s.is_some_and(|ttl| now > self.updated_at + ttl)
    }
}

#[derive(Debug, Error)]
pub enum DirectoryError {
    #[error("thing {0} is already registered")]
    DuplicateId(String),
    #[error("no live entry for {0}")]
    UnknownId(String),
    #[error("invalid thing description: {0}")]
    InvalidTd(#[from] TdError),
    #[error("ttl must be positive and finite, got {0}")]
    InvalidTtl(f64),
    #[error(transparent)]
    Malformed(#[from] MalformedExpression),
    #[error("persistence failed: {0}")]
    Io(String),
}

impl DirectoryError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::DuplicateId(_) => "duplicate_id",
            Self::UnknownId(_) => "unknown_id",
            Self::InvalidTd(_) => "invalid_td",
            Self::InvalidTtl(_) => "invalid_ttl",
            Self::Malformed(_) => "malformed_expression",
            Self::Io(_) => "io_error",
        }
    }
}

/// In-memory registry. Readers take a shared lock, so a query never sees a
/// half-applied write.
pub struct Directory {
    entries: RwLock<BTreeMap<String, DirectoryEntry>>,
    clock: Arc<dyn Clock>,
}

impl Default for Directory {
    fn default() -> Self {
        Self::new(Arc::new(SystemClock))
    }
}

impl Directory {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        Self {
            entries: RwLock::new(BTreeMap::new()),
            clock,
        }
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, BTreeMap<String, DirectoryEntry>> {
        self.entries.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, BTreeMap<String, DirectoryEntry>> {
        self.entries.write().unwrap_or_else(|e| e.into_inner())
    }

    pub fn register(&self, td: ThingDescription, ttl_s: Option<f64>) -> Result<DirectoryEntry, DirectoryError> {
        td.validate()?;
        if let Some(ttl) = ttl_s {
            if !(ttl > 0.0 && ttl.is_finite()) {
                return Err(DirectoryError::InvalidTtl(ttl));
            }
        }
        let now = self.clock.now();
        let mut map = self.write();
        if map.get(&td.id).is_some_and(|e| !e.is_expired(now)) {
            return Err(DirectoryError::DuplicateId(td.id));
        }
        let entry = DirectoryEntry {
            td,
            registered_at: now,
            updated_at: now,
            ttl_s,
        };
        map.insert(entry.td.id.clone(), entry.clone());
        Ok(entry)
    }

    /// Replaces the document of a live entry and refreshes its TTL window.
    pub fn update(&self, td: ThingDescription) -> Result<DirectoryEntry, DirectoryError> {
        td.validate()?;
        let now = self.clock.now();
        let mut map = self.write();
        match map.get_mut(&td.id) {
            Some(e) if !e.is_expired(now) => {
                e.updated_at = now.max(e.registered_at);
                e.td = td;
                Ok(e.clone())
            }
            _ => Err(DirectoryError::UnknownId(td.id)),
        }
    }

    /// Refreshes the TTL window without changing the document.
    pub fn touch(&self, id: &str) -> Result<DirectoryEntry, DirectoryError> {
        let now = self.clock.now();
        let mut map = self.write();
        match map.get_mut(id) {
            Some(e) if !e.is_expired(now) => {
                e.updated_at = now.max(e.registered_at);
                Ok(e.clone())
            }
            _ => Err(DirectoryError::UnknownId(id.to_string())),
        }
    }

    pub fn get(&self, id: &str) -> Result<ThingDescription, DirectoryError> {
        self.entry(id).map(|e| e.td)
    }

    pub fn entry(&self, id: &str) -> Result<DirectoryEntry, DirectoryError> {
        let now = self.clock.now();
        match self.read().get(id) {
            Some(e) if !e.is_expired(now) => Ok(e.clone()),
            _ => Err(DirectoryError::UnknownId(id.to_string())),
        }
    }

    pub fn delete(&self, id: &str) -> Result<(), DirectoryError> {
        let now = self.clock.now();
        let mut map = self.write();
        match map.remove(id) {
            Some(e) if !e.is_expired(now) => Ok(()),
            _ => Err(DirectoryError::UnknownId(id.to_string())),
        }
    }

    /// Live documents ordered by id.
    pub fn list(&self) -> Vec<ThingDescription> {
        let now = self.clock.now();
        self.read()
            .values()
            .filter(|e| !e.is_expired(now))
            .map(|e| e.td.clone())
            .collect()
    }

    /// Live documents in which `expression` selects at least one node,
    /// ordered by id.
    pub fn query(&self, expression: &str) -> Result<Vec<ThingDescription>, DirectoryError> {
        let expr = PathExpr::parse(expression)?;
        let now = self.clock.now();
        Ok(self
            .read()
            .values()
            .filter(|e| !e.is_expired(now) && expr.matches(&e.td.to_value()))
            .map(|e| e.td.clone())
            .collect())
    }

    /// Drops expired entries; returns how many were removed.
    pub fn purge_expired(&self) -> usize {
        let now = self.clock.now();
        let mut map = self.write();
        let before = map.len();
        map.retain(|_, e| !e.is_expired(now));
        before - map.len()
    }

    pub fn len(&self) -> usize {
        self.list().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn save(&self, path: &Path) -> Result<(), DirectoryError> {
        let entries: Vec<DirectoryEntry> = self.read().values().cloned().collect();
        let text = serde_json::to_string_pretty(&entries).map_err(|e| DirectoryError::Io(e.to_string()))?;
        fs::write(path, text).map_err(|e| DirectoryError::Io(e.to_string()))
    }

    pub fn load(path: &Path, clock: Arc<dyn Clock>) -> Result<Self, DirectoryError> {
        let text = fs::read_to_string(path).map_err(|e| DirectoryError::Io(e.to_string()))?;
        let entries: Vec<DirectoryEntry> =
            serde_json::from_str(&text).map_err(|e| DirectoryError::Io(e.to_string()))?;
        let dir = Self::new(clock);
        {
            let mut map = dir.write();
            for e in entries {
                e.td.validate()?;
                map.insert(e.td.id.clone(), e);
            }
        }
        Ok(dir)
    }
}
