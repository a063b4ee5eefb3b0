use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::hf::ScfResult;
use crate::molio::pubchem::write_atomic;
use crate::reassembly::Fingerprint;

/// A stored energy. The canonical input string is kept so that a hash
/// collision or a hand-edited file is detected on read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub hash: String,
    pub canonical: String,
    pub energy: f64,
    pub converged: bool,
    pub method: String,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub s_squared: Option<f64>,
    /// Seconds since the Unix epoch at which the record was written.
    pub timestamp: u64,
}

impl CacheRecord {
    pub fn from_scf(fp: &Fingerprint, r: &ScfResult) -> Self {
        Self {
            hash: fp.hash.clone(),
            canonical: fp.canonical.clone(),
            energy: r.total_energy,
            converged: r.converged,
            method: r.method.clone(),
            iterations: r.iterations,
            final_gradient_norm: r.final_gradient_norm,
            s_squared: r.s_squared,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }
}

/// Content-addressed energy store: one JSON file per fingerprint under
/// `<root>/<first two hex digits>/<hash>.json`.
#[derive(Debug)]
pub struct DiskCache {
    root: PathBuf,
    writes: Mutex<()>,
}

impl DiskCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            writes: Mutex::new(()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, fp: &Fingerprint) -> PathBuf {
        self.root.join(&fp.hash[..2]).join(format!("{}.json", fp.hash))
    }

    /// The stored record, or None on a miss. Unreadable, unparsable or
    /// mismatched files count as misses and are logged.
    pub fn get(&self, fp: &Fingerprint) -> Option<CacheRecord> {
        let path = self.path_for(fp);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!("cache: cannot read {}: {e}", path.display());
                return None;
            }
        };
        match serde_json::from_slice::<CacheRecord>(&bytes) {
            Ok(r) if r.hash == fp.hash && r.canonical == fp.canonical => Some(r),
            Ok(_) => {
                log::warn!("cache: {} does not match its key; ignoring", path.display());
                None
            }
            Err(e) => {
                log::warn!("cache: corrupt record {}: {e}; ignoring", path.display());
                None
            }
        }
    }

    /// Atomic, idempotent store.
    pub fn put(&self, record: &CacheRecord) -> std::io::Result<()> {
        let path = self.root.join(&record.hash[..2]).join(format!("{}.json", record.hash));
        let bytes = serde_json::to_vec_pretty(record).map_err(std::io::Error::other)?;
        let _guard = self.writes.lock().unwrap_or_else(|e| e.into_inner());
        write_atomic(&path, &bytes)
    }
}
