//! `--config` files: TOML or JSON, flat keys named after the long flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub program: Option<PathBuf>,
    pub descs: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mode: Option<String>,
    pub budget_execs: Option<u64>,
    pub budget_secs: Option<f64>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub relation_prob: Option<f64>,
    pub epoch: Option<u64>,
    pub max_threads: Option<usize>,
    pub max_calls_per_thread: Option<usize>,
    pub scenarios: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("PARAMFUZZ_SEED={0:?} is not an unsigned integer")]
    BadSeedEnv(String),
}

impl FileConfig {
    /// `.json` files are read as JSON; anything else as TOML.
    pub fn load(path: &Path) -> Result<Self, ConfigFileError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parse = |msg: String| ConfigFileError::Parse {
            path: path.to_path_buf(),
            msg,
        };
        if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| parse(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| parse(e.to_string()))
        }
    }
}

/// Seed from the flag, then the config file, then `PARAMFUZZ_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, file: &FileConfig, env: Option<&str>) -> Result<u64, ConfigFileError> {
    if let Some(s) = flag.or(file.seed) {
        return Ok(s);
    }
    match env {
        Some(v) => v.trim().parse().map_err(|_| ConfigFileError::BadSeedEnv(v.to_string())),
        None => Ok(0),
    }
}
