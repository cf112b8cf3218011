//! The coverage-guided engine: seed selection, mutation, corpus and crash
//! bookkeeping, and campaigns in three modes.

mod corpus;
mod minimize;
mod mutate;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::{CaseLimits, TestCase};
use crate::descgen::{DescKind, DescMeta, Descriptor};
use crate::dmir::DmirProgram;
use crate::vkernel::{boot_shared, BootError, CoverageMap, KernelState};
use crate::SplitMix64;

pub use corpus::{Corpus, CorpusEntry, CorpusError, CrashDb, CrashRecord};
pub use minimize::{achieves, minimize, MinimizeError, Target};
pub use mutate::{remove_call, Mutator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Device nodes and their ops only.
    Baseline,
    /// Adds parameter writes and `syz_mod_dev`.
    Syzlang,
    /// Adds the relation move: concurrent writes to related devices' parameters.
    SyzlangMutation,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Baseline, Mode::Syzlang, Mode::SyzlangMutation];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Syzlang => "syzlang",
            Mode::SyzlangMutation => "syzlang_mutation",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    pub fn allows(self, kind: DescKind) -> bool {
        self != Mode::Baseline || matches!(kind, DescKind::OpenDev | DescKind::DriverOp)
    }
}

pub const DEFAULT_BUDGET: u64 = 100_000;
pub const DEFAULT_RELATION_PROB: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub mode: Mode,
    pub budget_execs: u64,
    /// Optional wall-clock cap, checked between epochs.
    pub budget_secs: Option<f64>,
    pub workers: usize,
    pub seed: u64,
    pub relation_prob: f64,
    pub limits: CaseLimits,
    /// Executions per worker between merges.
    pub epoch: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            mode: Mode::SyzlangMutation,
            budget_execs: DEFAULT_BUDGET,
            budget_secs: None,
            workers: 1,
            seed: 0,
            relation_prob: DEFAULT_RELATION_PROB,
            limits: CaseLimits::default(),
            epoch: 64,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("workers must be at least 1")]
    NoWorkers,
    #[error("epoch must be at least 1")]
    NoEpoch,
    #[error("relation probability {0} is outside [0, 1]")]
    RelationProb(f64),
    #[error("case limits must allow at least one thread and one call")]
    Limits,
    #[error("descriptors were generated for program {descs}, not {program}")]
    HashMismatch { descs: String, program: String },
    #[error(transparent)]
    Boot(#[from] BootError),
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.workers == 0 {
            return Err(ConfigError::NoWorkers);
        }
        if self.epoch == 0 {
            return Err(ConfigError::NoEpoch);
        }
        if !(0.0..=1.0).contains(&self.relation_prob) {
            return Err(ConfigError::RelationProb(self.relation_prob));
        }
        if self.limits.max_threads == 0 || self.limits.max_calls_per_thread == 0 {
            return Err(ConfigError::Limits);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Virtual time: interpreter steps summed over all executions so far.
    pub time: u64,
    pub execs: u64,
    pub edges: usize,
    pub titles: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub mode: Mode,
    pub seed: u64,
    pub workers: usize,
    pub executions: u64,
    pub corpus_size: usize,
    pub edges: usize,
    pub titles: Vec<String>,
    pub engine_errors: u64,
    pub timeline: Vec<Checkpoint>,
}

impl CampaignReport {
    pub fn coverage_csv(&self) -> String {
        let mut out = String::from("time,execs,edges,titles\n");
        for c in &self.timeline {
            out.push_str(&format!("{},{},{},{}\n", c.time, c.execs, c.edges, c.titles));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Campaign {
    pub report: CampaignReport,
    pub corpus: Corpus,
    pub crashes: CrashDb,
    pub coverage: CoverageMap,
}

impl Campaign {
    /// Write corpus/, crashes/, report.json and coverage.csv under `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| CorpusError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        self.corpus.save(&dir.join("corpus"))?;
        self.crashes.save(&dir.join("crashes"))?;
        let p = dir.join("report.json");
        let text = serde_json::to_string_pretty(&self.report).expect("reports serialize");
        fs::write(&p, text + "\n").map_err(io(&p))?;
        let p = dir.join("coverage.csv");
        fs::write(&p, self.report.coverage_csv()).map_err(io(&p))?;
        Ok(())
    }
}

enum Find {
    Cover {
        case: TestCase,
        coverage: CoverageMap,
        new: CoverageMap,
    },
    Crash {
        title: String,
        case: TestCase,
        reproducer: TestCase,
    },
    Repeat(String),
}

struct Slice {
    finds: Vec<(u64, u64, Find)>,
    steps: u64,
    engine_errors: u64,
}

struct Worker {
    state: KernelState,
    rng: SplitMix64,
}

fn uniform(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

impl Worker {
    fn run(
        &mut self,
        n: u64,
        mutator: &Mutator,
        corpus: &[&TestCase],
        cumulative: &[f64],
        seen: &CoverageMap,
        titles: &BTreeSet<String>,
    ) -> Slice {
        let mut cov = seen.clone();
        let mut titles = titles.clone();
        let mut out = Slice {
            finds: Vec::new(),
            steps: 0,
            engine_errors: 0,
        };
        for j in 0..n {
            let case = if corpus.is_empty() || self.rng.chance(0.02) {
                mutator.generate(&mut self.rng)
            } else {
                let total = *cumulative.last().expect("non-empty");
                let x = uniform(&mut self.rng) * total;
                let i = cumulative.partition_point(|&c| c <= x).min(corpus.len() - 1);
                let mut c = mutator.mutate(corpus[i], corpus, &mut self.rng);
                if self.rng.chance(0.5) {
                    c = mutator.mutate(&c, corpus, &mut self.rng);
                }
                c
            };
            let r = self.state.run_case(&case);
            out.steps += r.steps;
            if let Some(e) = &r.engine_error {
                log::debug!("engine error (ignored): {e}");
                out.engine_errors += 1;
                continue;
            }
            if let Some(t) = r.title() {
                let t = t.to_string();
                if titles.insert(t.clone()) {
                    let target = Target::Title(t.clone());
                    let reproducer = minimize(&mut self.state, &case, &target).unwrap_or_else(|_| case.clone());
                    out.finds.push((j, out.steps, Find::Crash { title: t, case: case.clone(), reproducer }));
                } else {
                    out.finds.push((j, out.steps, Find::Repeat(t)));
                }
            }
            let new: Vec<u32> = r.coverage.edges().iter().copied().filter(|&e| !cov.contains(e)).collect();
            if !new.is_empty() {
                let new = CoverageMap::from_edges(new);
                cov.merge(&r.coverage);
                let target = Target::Edges(new.clone());
                let min = minimize(&mut self.state, &case, &target).unwrap_or_else(|_| case.clone());
                let coverage = self.state.run_case(&min).coverage;
                out.finds.push((j, out.steps, Find::Cover { case: min, coverage, new }));
            }
        }
        out
    }
}

/// Run a fuzzing campaign. With one worker and a fixed seed the result is
/// fully deterministic.
pub fn run_campaign(
    program: Arc<DmirProgram>,
    descs: &[Descriptor],
    meta: &DescMeta,
    config: &CampaignConfig,
) -> Result<Campaign, ConfigError> {
    config.validate()?;
    if meta.program_hash != program.hash {
        return Err(ConfigError::HashMismatch {
            descs: meta.program_hash.clone(),
            program: program.hash.clone(),
        });
    }
    let mutator = Mutator::new(descs, meta, config.mode, config.limits, config.relation_prob);
    let base = boot_shared(program)?;
    let mut master = SplitMix64::new(config.seed);
    let mut workers: Vec<Worker> = (0..config.workers)
        .map(|_| Worker {
            state: base.clone(),
            rng: master.fork(),
        })
        .collect();

    let mut corpus = Corpus::default();
    let mut crashes = CrashDb::default();
    let mut total = CoverageMap::default();
    let mut timeline = Vec::new();
    let mut execs = 0u64;
    let mut time = 0u64;
    let mut engine_errors = 0u64;
    let started = Instant::now();

    while execs < config.budget_execs {
        if config.budget_secs.is_some_and(|s| started.elapsed().as_secs_f64() >= s) {
            break;
        }
        let left = config.budget_execs - execs;
        let per = config.epoch.min(left.div_ceil(config.workers as u64));
        let shares: Vec<u64> = (0..config.workers as u64)
            .map(|w| per.min(left.saturating_sub(w * per)))
            .collect();
        let cases: Vec<&TestCase> = corpus.entries.iter().map(|e| &e.case).collect();
        let cumulative: Vec<f64> = corpus
            .weights()
            .into_iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        let titles = crashes.titles();
        let slices: Vec<Slice> = if workers.len() == 1 {
            vec![workers[0].run(shares[0], &mutator, &cases, &cumulative, &total, &titles)]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = workers
                    .iter_mut()
                    .zip(&shares)
                    .map(|(w, &n)| {
                        let (m, c, cu, t, ti) = (&mutator, &cases, &cumulative, &total, &titles);
                        s.spawn(move || w.run(n, m, c, cu, t, ti))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            })
        };

        let mut offset = 0;
        for (slice, &n) in slices.into_iter().zip(&shares) {
            for (j, steps, find) in slice.finds {
                let at = execs + offset + j + 1;
                let changed = match find {
                    Find::Cover { case, coverage, new } => {
                        let fresh: Vec<u32> = new.edges().iter().copied().filter(|&e| !total.contains(e)).collect();
                        if fresh.is_empty() {
                            false
                        } else {
                            total.merge(&coverage);
                            corpus.add(CorpusEntry {
                                case,
                                edges: CoverageMap::from_edges(fresh),
                                coverage,
                            });
                            true
                        }
                    }
                    Find::Crash { title, case, reproducer } => match crashes.crashes.get_mut(&title) {
                        Some(rec) => {
                            rec.count += 1;
                            false
                        }
                        None => {
                            crashes.crashes.insert(
                                title.clone(),
                                CrashRecord {
                                    title,
                                    first_exec: at,
                                    first_seed: case.schedule_seed,
                                    count: 1,
                                    first_case: case,
                                    reproducer,
                                },
                            );
                            true
                        }
                    },
                    Find::Repeat(title) => {
                        if let Some(rec) = crashes.crashes.get_mut(&title) {
                            rec.count += 1;
                        }
                        false
                    }
                };
                if changed {
                    let t = (time + steps).max(timeline.last().map_or(0, |c: &Checkpoint| c.time));
                    let e = at.max(timeline.last().map_or(0, |c: &Checkpoint| c.execs));
                    timeline.push(Checkpoint {
                        time: t,
                        execs: e,
                        edges: total.len(),
                        titles: crashes.crashes.len(),
                    });
                }
            }
            offset += n;
            time += slice.steps;
            engine_errors += slice.engine_errors;
        }
        execs += offset;
    }
    if execs > 0 {
        let last = Checkpoint {
            time,
            execs,
            edges: total.len(),
            titles: crashes.crashes.len(),
        };
        if timeline.last().map(|c: &Checkpoint| c.execs) != Some(execs) {
            timeline.push(last);
        }
    }

    Ok(Campaign {
        report: CampaignReport {
            mode: config.mode,
            seed: config.seed,
            workers: config.workers,
            executions: execs,
            corpus_size: corpus.len(),
            edges: total.len(),
            titles: crashes.crashes.keys().cloned().collect(),
            engine_errors,
            timeline,
        },
        corpus,
        crashes,
        coverage: total,
    })
}
