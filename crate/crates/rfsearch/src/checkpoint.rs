//! Versioned, hash-checked checkpoint documents.
//!
//! ```text
//! { "schema_version": 1, "content_hash": "<sha256 hex>", "checkpoint": { "backends": …, "state": … } }
//! ```
//!
//! The hash covers the compact JSON serialization of `checkpoint`, so the
//! file may be reformatted freely but not edited.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rfsearch_core::search::SearchState;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::Backends;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub backends: Backends,
    pub state: SearchState,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint {path}: {source}")]
    IoError { path: PathBuf, source: io::Error },
    #[error("checkpoint {path}: schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    VersionMismatch { path: PathBuf, found: u64 },
    #[error("checkpoint {path} is corrupt: {reason}")]
    CorruptCheckpoint { path: PathBuf, reason: String },
}

fn content_hash(body: &Checkpoint) -> String {
    let bytes = serde_json::to_vec(body).expect("checkpoint serializes");
    hex::encode(Sha256::digest(bytes))
}

pub fn to_document(body: &Checkpoint) -> Value {
    serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "content_hash": content_hash(body),
        "checkpoint": body,
    })
}

/// Write via a temporary sibling and rename, so a crash mid-write never
/// leaves a truncated checkpoint at `path`.
pub fn save_checkpoint(body: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    let io_err = |source| CheckpointError::IoError {
        path: path.to_owned(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let text = serde_json::to_string_pretty(&to_document(body)).expect("checkpoint serializes");
    let tmp = path.with_extension("ckpt.tmp");
    fs::write(&tmp, text).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::IoError {
        path: path.to_owned(),
        source,
    })?;
    parse_checkpoint(&bytes).map_err(|e| match e {
        Parsed::Version(found) => CheckpointError::VersionMismatch {
            path: path.to_owned(),
            found,
        },
        Parsed::Corrupt(reason) => CheckpointError::CorruptCheckpoint {
            path: path.to_owned(),
            reason,
        },
    })
}

enum Parsed {
    Version(u64),
    Corrupt(String),
}

fn parse_checkpoint(bytes: &[u8]) -> Result<Checkpoint, Parsed> {
    let mut doc: Value = serde_json::from_slice(bytes).map_err(|e| Parsed::Corrupt(e.to_string()))?;
    let version = doc["schema_version"]
        .as_u64()
        .ok_or_else(|| Parsed::Corrupt("missing schema_version".into()))?;
    if version != SCHEMA_VERSION {
        return Err(Parsed::Version(version));
    }
    let stored = doc["content_hash"]
        .as_str()
        .ok_or_else(|| Parsed::Corrupt("missing content_hash".into()))?
        .to_owned();
    let body: Checkpoint = serde_json::from_value(doc["checkpoint"].take()).map_err(|e| Parsed::Corrupt(e.to_string()))?;
    let actual = content_hash(&body);
    if actual != stored {
        return Err(Parsed::Corrupt(format!("content hash {actual} does not match recorded {stored}")));
    }
    Ok(body)
}
