//! Corpus and crash database, and their on-disk layout.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::TestCase;
use crate::dmir::EdgeId;
use crate::vkernel::{CoverageMap, KernelState};

/// A minimized case and the edges it first contributed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    #[serde(flatten)]
    pub case: TestCase,
    pub edges: CoverageMap,
    /// Everything the case covers; recomputed on load.
    #[serde(skip)]
    pub coverage: CoverageMap,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
    hits: HashMap<EdgeId, u32>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: no longer reproduces its edges")]
    Stale { path: String },
    #[error("{path}: no longer triggers `{title}`")]
    NotReproduced { path: String, title: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add(&mut self, entry: CorpusEntry) {
        for &e in entry.coverage.edges() {
            *self.hits.entry(e).or_default() += 1;
        }
        self.entries.push(entry);
    }

    /// Selection weights: the sum over an entry's edges of one over the
    /// number of entries covering that edge, so holders of rare edges win.
    pub fn weights(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|en| {
                let w: f64 = en
                    .coverage
                    .edges()
                    .iter()
                    .map(|e| 1.0 / self.hits.get(e).copied().unwrap_or(1) as f64)
                    .sum();
                w.max(1e-9)
            })
            .collect()
    }

    /// Write `dir/NNN.case.json` per entry.
    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (i, e) in self.entries.iter().enumerate() {
            let p = dir.join(format!("{i:03}.case.json"));
            let text = serde_json::to_string_pretty(e).expect("corpus entries serialize");
            fs::write(&p, text + "\n").map_err(io_err(&p))?;
        }
        Ok(())
    }

    /// Load a saved corpus, replaying every entry against `state`.
    pub fn load(dir: &Path, state: &mut KernelState) -> Result<Self, CorpusError> {
        let mut names: Vec<_> = fs::read_dir(dir)
            .map_err(io_err(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".case.json"))
            .collect();
        names.sort();
        let mut c = Corpus::default();
        for p in names {
            let text = fs::read_to_string(&p).map_err(io_err(&p))?;
            let mut e: CorpusEntry = serde_json::from_str(&text).map_err(|source| CorpusError::Json {
                path: p.display().to_string(),
                source,
            })?;
            e.coverage = state.run_case(&e.case).coverage;
            if !e.coverage.is_superset(&e.edges) {
                return Err(CorpusError::Stale {
                    path: p.display().to_string(),
                });
            }
            c.add(e);
        }
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashRecord {
    pub title: String,
    /// Execution index at which the title first appeared.
    pub first_exec: u64,
    pub first_seed: u64,
    pub count: u64,
    pub first_case: TestCase,
    pub reproducer: TestCase,
}

/// Crashes keyed by title.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashDb {
    pub crashes: BTreeMap<String, CrashRecord>,
}

impl CrashDb {
    pub fn titles(&self) -> BTreeSet<String> {
        self.crashes.keys().cloned().collect()
    }

    /// Write `dir/<title>/repro.case.json` and `dir/<title>/crash.json`.
    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (title, rec) in &self.crashes {
            let d = dir.join(title);
            fs::create_dir_all(&d).map_err(io_err(&d))?;
            let p = d.join("repro.case.json");
            fs::write(&p, rec.reproducer.to_json() + "\n").map_err(io_err(&p))?;
            let p = d.join("crash.json");
            let text = serde_json::to_string_pretty(rec).expect("crash records serialize");
            fs::write(&p, text + "\n").map_err(io_err(&p))?;
        }
        Ok(())
    }

    /// Load saved crashes and check that each reproducer still triggers its title.
    pub fn load(dir: &Path, state: &mut KernelState) -> Result<Self, CorpusError> {
        let mut db = CrashDb::default();
        if !dir.exists() {
            return Ok(db);
        }
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for e in fs::read_dir(&d).map_err(io_err(&d))? {
                let p = e.map_err(io_err(&d))?.path();
                if p.is_dir() {
                    stack.push(p);
                } else if p.file_name().is_some_and(|n| n == "crash.json") {
                    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
                    let rec: CrashRecord = serde_json::from_str(&text).map_err(|source| CorpusError::Json {
                        path: p.display().to_string(),
                        source,
                    })?;
                    if state.run_case(&rec.reproducer).title() != Some(rec.title.as_str()) {
                        return Err(CorpusError::NotReproduced {
                            path: p.display().to_string(),
                            title: rec.title,
                        });
                    }
                    db.crashes.insert(rec.title.clone(), rec);
                }
            }
        }
        Ok(db)
    }
}
