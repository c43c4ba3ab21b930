//! Run manifests: every artifact-producing command snapshots its resolved
//! configuration and stamps outputs with a content hash of that snapshot.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// 64-bit FNV-1a over a byte stream.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Content hash of a JSON-serializable value, rendered as `fnv64:<hex>`.
pub fn content_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("hashable value must serialize");
    format!("fnv64:{:016x}", fnv1a(&bytes))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Path of the config file the command was launched with, if any.
    pub config_path: Option<String>,
    /// Fully resolved configuration after flag overrides.
    pub resolved: serde_json::Value,
    /// Content hash of `resolved`; artifacts reference this.
    pub hash: String,
    /// Unix timestamp; pinned to 0 in deterministic-compute mode.
    pub created_unix: u64,
}

/// Env var that pins timestamps (and anything else wall-clock dependent)
/// so repeated runs produce byte-identical artifacts.
pub const DETERMINISTIC_ENV: &str = "HISTOFUSE_DETERMINISTIC";

pub fn deterministic_mode() -> bool {
    std::env::var(DETERMINISTIC_ENV)
        .map(|v| v != "0" && !v.is_empty())
        .unwrap_or(false)
}

impl RunManifest {
    pub fn new(config_path: Option<&Path>, resolved: serde_json::Value) -> Self {
        let hash = content_hash(&resolved);
        let created_unix = if deterministic_mode() {
            0
        } else {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        };
        RunManifest {
            config_path: config_path.map(|p| p.display().to_string()),
            resolved,
            hash,
            created_unix,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}
