//! Run manifest: everything needed to regenerate a run's outputs
//! bit-identically, plus checksums to verify that a regeneration matched.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Verbatim echo of the effective configuration (after defaults).
    pub config: String,
    pub seed: u64,
    pub wall_clock_seconds: f64,
    /// Output filename -> SHA-256 (hex). BTreeMap keeps key order stable.
    pub checksums: BTreeMap<String, String>,
    /// Named random-stream seeds used by the run.
    pub seed_registry: BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn new(config: String, seed: u64) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seed,
            wall_clock_seconds: 0.0,
            checksums: BTreeMap::new(),
            seed_registry: BTreeMap::new(),
        }
    }

    /// Record the checksum of a produced output file.
    pub fn record(&mut self, path: &Path) -> Result<()> {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.checksums.insert(name, sha256_file(path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .expect("manifest serialization cannot fail");
        std::fs::write(path, json + "\n")?;
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("curve.csv");
        std::fs::write(&data, "t,value\n0,1\n").unwrap();
        let mut m = RunManifest::new("k = 3\n".into(), 7);
        m.record(&data).unwrap();
        m.seed_registry.insert("trajectory".into(), 7);
        let path = dir.path().join("manifest.json");
        m.write(&path).unwrap();
        let back: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back.checksums["curve.csv"], m.checksums["curve.csv"]);
        assert_eq!(back.seed, 7);
        assert_eq!(back.config, "k = 3\n");
    }
}
