//! Run manifest: a deterministic record of what a batch run did, written
//! next to its outputs. Contains no timestamps so identical inputs and
//! configuration reproduce identical bytes.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// One capture that could not be processed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureNote {
    pub capture_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the effective configuration.
    pub config_hash: String,
    pub captures_in: usize,
    pub captures_with_detections: usize,
    /// Captures processed successfully but containing no canopy instances.
    pub captures_empty: usize,
    pub captures_failed: usize,
    /// Total result rows written.
    pub trees_out: usize,
    pub failures: Vec<FailureNote>,
}

impl RunManifest {
    /// Every capture must be accounted for exactly once.
    pub fn balanced(&self) -> bool {
        self.captures_with_detections + self.captures_empty + self.captures_failed
            == self.captures_in
            && self.failures.len() == self.captures_failed
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        debug_assert!(self.balanced(), "manifest accounting out of balance");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn balance_check() {
        let mut m = RunManifest {
            command: "process".into(),
            config_hash: "ab".into(),
            captures_in: 5,
            captures_with_detections: 3,
            captures_empty: 1,
            captures_failed: 1,
            trees_out: 7,
            failures: vec![FailureNote {
                capture_id: "c9".into(),
                error: "bad png".into(),
            }],
        };
        assert!(m.balanced());
        m.captures_empty = 2;
        assert!(!m.balanced());
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("manifest.json");
        let m = RunManifest {
            command: "process".into(),
            config_hash: "cd".into(),
            captures_in: 1,
            captures_with_detections: 1,
            captures_empty: 0,
            captures_failed: 0,
            trees_out: 2,
            failures: vec![],
        };
        m.write(&p).unwrap();
        let first = std::fs::read(&p).unwrap();
        assert_eq!(RunManifest::read(&p).unwrap(), m);
        m.write(&p).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), first);
    }
}
