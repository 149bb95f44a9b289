use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{FocusAreaSet, MaskKey};
use crate::error::{Error, Result};
use crate::grid::GridMap;
use crate::io::write_atomic;

/// Precomputed focus masks keyed by (map hash, start, goal, G).
///
/// Entries live in memory as serialized JSON and, when a directory is
/// configured, on disk as `<fingerprint>.json`. All access goes through one
/// lock.
#[derive(Debug, Default)]
pub struct MaskCache {
    dir: Option<PathBuf>,
    entries: Mutex<HashMap<String, String>>,
    builds: AtomicUsize,
    hits: AtomicUsize,
}

impl MaskCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()), ..Self::default() }
    }

    /// Number of times the builder closure has run.
    pub fn builds(&self) -> usize {
        self.builds.load(Ordering::SeqCst)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn get_or_build<F>(&self, map: &GridMap, key: MaskKey, build: F) -> Result<FocusAreaSet>
    where
        F: FnOnce() -> Result<FocusAreaSet>,
    {
        let fp = key.fingerprint();
        let mut entries = self.entries.lock().expect("mask cache lock poisoned");
        if let Some(json) = entries.get(&fp) {
            self.hits.fetch_add(1, Ordering::SeqCst);
            return FocusAreaSet::from_json(json, map);
        }
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{fp}.json"));
            if path.exists() {
                let json = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let set = FocusAreaSet::from_json(&json, map)?;
                if set.key() == Some(&key) {
                    self.hits.fetch_add(1, Ordering::SeqCst);
                    entries.insert(fp, json);
                    return Ok(set);
                }
            }
        }
        self.builds.fetch_add(1, Ordering::SeqCst);
        let mut set = build()?;
        set.set_key(key);
        let json = set.to_json();
        if let Some(dir) = &self.dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            write_atomic(&dir.join(format!("{fp}.json")), json.as_bytes())?;
        }
        entries.insert(fp, json);
        Ok(set)
    }
}
