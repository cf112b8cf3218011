//! Pinned scenarios: a program, a case, and the outcomes it must produce.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::{CaseLimits, TestCase};
use crate::dmir::{self, DmirError};
use crate::vkernel::{boot, BootError, Exploration};

/// Runs allowed to the interleaving enumerator per scenario.
pub const EXPLORE_LIMIT: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Program file, relative to the directory holding the scenarios' parent.
    pub program: String,
    pub case: TestCase,
    /// Title the case must produce under its own schedule seed.
    pub expect_title: Option<String>,
    /// Exact verdict set over all interleavings; `None` is a clean run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_verdicts: Option<BTreeSet<Option<String>>>,
    /// Every serialization of the threads runs clean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub serial_clean: Option<bool>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Dmir { path: PathBuf, source: DmirError },
    #[error("{path}: {source}")]
    Boot { path: PathBuf, source: BootError },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScenarioOutcome {
    pub name: String,
    pub title: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exploration: Option<Exploration>,
    pub failures: Vec<String>,
}

impl ScenarioOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Every `*.scenario.json` in `dir`, sorted by file name.
pub fn load_scenarios(dir: &Path) -> Result<Vec<Scenario>, ScenarioError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ScenarioError::Io { path, source }
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".scenario.json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).map_err(io_err(&p))?;
            serde_json::from_str(&text).map_err(|source| ScenarioError::Json { path: p, source })
        })
        .collect()
}

/// The orders in which the threads could run one after another without
/// breaking handle references.
fn serializations(case: &TestCase) -> Vec<TestCase> {
    fn permute(rest: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(cur.clone());
        }
        for i in 0..rest.len() {
            let t = rest.remove(i);
            cur.push(t);
            permute(rest, cur, out);
            cur.pop();
            rest.insert(i, t);
        }
    }
    let mut orders = Vec::new();
    permute(&mut (0..case.threads.len()).collect(), &mut Vec::new(), &mut orders);
    let limits = CaseLimits {
        max_threads: 1,
        max_calls_per_thread: usize::MAX,
    };
    orders
        .into_iter()
        .map(|o| TestCase {
            schedule_seed: case.schedule_seed,
            threads: vec![o.iter().flat_map(|&t| case.threads[t].clone()).collect()],
        })
        .filter(|c| c.validate(&limits).is_ok())
        .collect()
}

/// Run a scenario against the program it names under `corpus_dir`.
pub fn check_scenario(sc: &Scenario, corpus_dir: &Path) -> Result<ScenarioOutcome, ScenarioError> {
    let path = corpus_dir.join(&sc.program);
    let src = fs::read_to_string(&path).map_err(|source| ScenarioError::Io {
        path: path.clone(),
        source,
    })?;
    let program = dmir::parse(&src).map_err(|source| ScenarioError::Dmir {
        path: path.clone(),
        source,
    })?;
    let mut state = boot(&program).map_err(|source| ScenarioError::Boot { path, source })?;

    let mut failures = Vec::new();
    let title = state.run_case(&sc.case).title().map(String::from);
    if title != sc.expect_title {
        failures.push(format!("expected title {:?}, got {:?}", sc.expect_title, title));
    }
    let mut exploration = None;
    if let Some(want) = &sc.expect_verdicts {
        let ex = state.explore(&sc.case, EXPLORE_LIMIT);
        if !ex.complete {
            failures.push(format!("enumeration stopped after {} runs", ex.runs));
        } else if &ex.verdicts != want {
            failures.push(format!("expected verdicts {want:?}, got {:?}", ex.verdicts));
        }
        exploration = Some(ex);
    }
    if sc.serial_clean == Some(true) {
        for s in serializations(&sc.case) {
            let ex = state.explore(&s, EXPLORE_LIMIT);
            if ex.verdicts.iter().any(Option::is_some) {
                failures.push(format!("serial run reaches {:?}", ex.verdicts));
            }
        }
    }
    Ok(ScenarioOutcome {
        name: sc.name.clone(),
        title,
        exploration,
        failures,
    })
}
