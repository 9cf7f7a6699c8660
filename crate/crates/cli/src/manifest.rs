use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
const LOCK_FILE: &str = ".lock";

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(digest(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub command: String,
    pub sha256: String,
    /// Digest of every file and config section that fed this artifact.
    pub inputs: BTreeMap<String, String>,
    pub seed_dependent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub artifacts: BTreeMap<String, ArtifactRecord>,
}

impl Manifest {
    pub fn load_or_new(run_dir: &Path, seed: u64) -> CliResult<Self> {
        let path = run_dir.join(MANIFEST_FILE);
        let mut m = if path.is_file() {
            let text = std::fs::read_to_string(&path)?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Runtime(format!("corrupt manifest {}: {e}", path.display())))?
        } else {
            Manifest {
                format_version: MANIFEST_VERSION,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                artifacts: BTreeMap::new(),
            }
        };
        m.seed = seed;
        Ok(m)
    }

    pub fn save(&self, run_dir: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(run_dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}

/// Exclusive claim on a run directory, released on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
    _file: File,
}

impl RunLock {
    pub fn acquire(run_dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(run_dir)?;
        let path = run_dir.join(LOCK_FILE);
        let file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => CliError::Runtime(format!(
                    "run directory {} is locked by another process (remove {} if stale)",
                    run_dir.display(),
                    path.display()
                )),
                _ => CliError::Runtime(format!("{}: {e}", path.display())),
            })?;
        Ok(RunLock { path, _file: file })
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let a = RunLock::acquire(dir.path()).unwrap();
        assert!(RunLock::acquire(dir.path()).is_err());
        drop(a);
        assert!(RunLock::acquire(dir.path()).is_ok());
    }

    #[test]
    fn digest_known_value() {
        assert_eq!(
            digest(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
