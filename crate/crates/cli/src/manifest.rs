//! One `manifest.json` per output directory, recording what produced each file.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub config: serde_json::Value,
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub program_hash: String,
    /// Stage name to the configuration it ran with.
    pub stages: BTreeMap<String, StageRecord>,
    /// Path relative to the directory, to SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{dir}: no {MANIFEST}")]
    Missing { dir: PathBuf },
    #[error("{dir}: {file} does not match its recorded hash")]
    HashMismatch { dir: PathBuf, file: String },
    #[error("{dir}: program {found} differs from {expected}")]
    ProgramMismatch {
        dir: PathBuf,
        expected: String,
        found: String,
    },
}

pub fn sha256_file(path: &Path) -> Result<String, ManifestError> {
    let bytes = fs::read(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self, ManifestError> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Err(ManifestError::Missing { dir: dir.to_path_buf() });
        }
        let text = fs::read_to_string(&path).map_err(|source| ManifestError::Io {
            path: path.clone(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ManifestError::Json { path, source })
    }

    /// Recompute every recorded hash.
    pub fn verify(&self, dir: &Path) -> Result<(), ManifestError> {
        for (file, hash) in &self.outputs {
            let p = dir.join(file);
            if !p.exists() || sha256_file(&p)? != *hash {
                return Err(ManifestError::HashMismatch {
                    dir: dir.to_path_buf(),
                    file: file.clone(),
                });
            }
        }
        Ok(())
    }

    /// Fail if `dir` already holds results for another program.
    pub fn check_dir(dir: &Path, program_hash: &str) -> Result<(), ManifestError> {
        match Self::load(dir) {
            Ok(m) if m.program_hash != program_hash => Err(ManifestError::ProgramMismatch {
                dir: dir.to_path_buf(),
                expected: m.program_hash,
                found: program_hash.to_string(),
            }),
            Ok(_) | Err(ManifestError::Missing { .. }) => Ok(()),
            Err(e) => Err(e),
        }
    }

    /// Add a stage and its outputs to `dir`'s manifest, creating it if needed.
    /// A directory holds results for one program only.
    pub fn record(
        dir: &Path,
        program_hash: &str,
        stage: &str,
        config: serde_json::Value,
        started_unix: u64,
        outputs: &[PathBuf],
    ) -> Result<(), ManifestError> {
        let mut m = match Self::load(dir) {
            Ok(m) => m,
            Err(ManifestError::Missing { .. }) => RunManifest {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                program_hash: program_hash.to_string(),
                stages: BTreeMap::new(),
                outputs: BTreeMap::new(),
            },
            Err(e) => return Err(e),
        };
        if m.program_hash != program_hash {
            return Err(ManifestError::ProgramMismatch {
                dir: dir.to_path_buf(),
                expected: m.program_hash,
                found: program_hash.to_string(),
            });
        }
        m.tool_version = env!("CARGO_PKG_VERSION").to_string();
        for p in outputs {
            let rel = p.strip_prefix(dir).unwrap_or(p);
            let key = rel.to_string_lossy().replace('\\', "/");
            m.outputs.insert(key, sha256_file(p)?);
        }
        m.stages.insert(
            stage.to_string(),
            StageRecord {
                config,
                started_unix,
                finished_unix: now_unix(),
            },
        );
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&m).expect("manifests serialize");
        fs::write(&path, text + "\n").map_err(|source| ManifestError::Io { path, source })
    }
}

/// Every regular file under `dir`, except the manifest, sorted.
pub fn files_under(dir: &Path) -> Result<Vec<PathBuf>, ManifestError> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let rd = fs::read_dir(&d).map_err(|source| ManifestError::Io {
            path: d.clone(),
            source,
        })?;
        for e in rd {
            let p = e
                .map_err(|source| ManifestError::Io {
                    path: d.clone(),
                    source,
                })?
                .path();
            if p.is_dir() {
                stack.push(p);
            } else if p != dir.join(MANIFEST) {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}
