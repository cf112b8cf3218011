//! Aggregation of campaign directories into per-mode tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use paramfuzz::fuzzer::{CampaignReport, Mode};
use serde::Serialize;
use thiserror::Error;

use crate::manifest::{ManifestError, RunManifest};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("{path}: {msg}")]
    Malformed { path: PathBuf, msg: String },
    #[error("no campaign directories given")]
    Empty,
}

/// One row of `coverage.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Row {
    pub time: u64,
    pub execs: u64,
    pub edges: u64,
    pub titles: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    #[default]
    Execs,
    Time,
}

impl Axis {
    fn of(self, r: &Row) -> u64 {
        match self {
            Axis::Execs => r.execs,
            Axis::Time => r.time,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Run {
    pub dir: PathBuf,
    pub mode: Mode,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub titles: Vec<String>,
}

pub fn parse_coverage_csv(text: &str, path: &Path) -> Result<Vec<Row>, ReportError> {
    let bad = |msg: String| ReportError::Malformed {
        path: path.to_path_buf(),
        msg,
    };
    let mut lines = text.lines();
    if lines.next() != Some("time,execs,edges,titles") {
        return Err(bad("unexpected header".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let v: Vec<u64> = l
                .split(',')
                .map(|x| x.parse())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(format!("line {}: {e}", i + 2)))?;
            match v[..] {
                [time, execs, edges, titles] => Ok(Row {
                    time,
                    execs,
                    edges,
                    titles,
                }),
                _ => Err(bad(format!("line {}: expected 4 columns", i + 2))),
            }
        })
        .collect()
}

/// Load one campaign directory, verifying its manifest first.
pub fn load_run(dir: &Path) -> Result<(Run, RunManifest), ReportError> {
    let m = RunManifest::load(dir)?;
    m.verify(dir)?;
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read_to_string(&p).map_err(|source| ReportError::Manifest(ManifestError::Io { path: p, source }))
    };
    let rp = dir.join("report.json");
    let report: CampaignReport = serde_json::from_str(&read("report.json")?).map_err(|e| ReportError::Malformed {
        path: rp,
        msg: e.to_string(),
    })?;
    let rows = parse_coverage_csv(&read("coverage.csv")?, &dir.join("coverage.csv"))?;
    Ok((
        Run {
            dir: dir.to_path_buf(),
            mode: report.mode,
            seed: report.seed,
            rows,
            titles: report.titles,
        },
        m,
    ))
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Distribution-free interval for the median from order statistics: the
/// narrowest symmetric pair with at least 95% coverage, or the full range
/// when the sample is too small for that. Returns (lo, hi, coverage).
pub fn median_ci(v: &[f64]) -> (f64, f64, f64) {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let cdf = |k: usize| (0..=k).map(|i| binom(n, i)).sum::<f64>() / 2f64.powi(n as i32);
    let mut k = 0;
    while k < (n - 1) / 2 && cdf(k + 1) <= 0.025 {
        k += 1;
    }
    (s[k], s[n - 1 - k], 1.0 - 2.0 * cdf(k))
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stat {
    pub median: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub confidence: f64,
}

impl Stat {
    pub fn of(v: &[f64]) -> Self {
        let (ci_lo, ci_hi, confidence) = median_ci(v);
        Stat {
            median: median(v),
            ci_lo,
            ci_hi,
            confidence,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeSummary {
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub edges: Stat,
    pub titles: Stat,
    /// Title to the number of runs that found it.
    pub title_hits: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub mode: Mode,
    pub x: u64,
    pub edges: Stat,
    pub titles: Stat,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub program_hash: String,
    pub axis: Axis,
    pub modes: Vec<ModeSummary>,
    pub series: Vec<SeriesPoint>,
}

/// The step function of a run at `x`.
fn at(rows: &[Row], axis: Axis, x: u64) -> (u64, u64) {
    rows.iter()
        .take_while(|r| axis.of(r) <= x)
        .last()
        .map_or((0, 0), |r| (r.edges, r.titles))
}

pub fn aggregate(program_hash: &str, runs: &[Run], axis: Axis) -> Comparison {
    let mut by_mode: BTreeMap<Mode, Vec<&Run>> = BTreeMap::new();
    for r in runs {
        by_mode.entry(r.mode).or_default().push(r);
    }
    let mut modes = Vec::new();
    let mut series = Vec::new();
    for (mode, mut rs) in by_mode {
        rs.sort_by_key(|r| r.seed);
        let last = |f: fn(&Row) -> u64| -> Vec<f64> {
            rs.iter().map(|r| r.rows.last().map_or(0, f) as f64).collect()
        };
        let mut title_hits = BTreeMap::new();
        for r in &rs {
            for t in r.titles.iter().collect::<BTreeSet<_>>() {
                *title_hits.entry(t.clone()).or_default() += 1;
            }
        }
        modes.push(ModeSummary {
            mode,
            seeds: rs.iter().map(|r| r.seed).collect(),
            edges: Stat::of(&last(|r| r.edges)),
            titles: Stat::of(&last(|r| r.titles)),
            title_hits,
        });
        let xs: BTreeSet<u64> = rs.iter().flat_map(|r| r.rows.iter().map(|row| axis.of(row))).collect();
        for x in xs {
            let (e, t): (Vec<f64>, Vec<f64>) = rs
                .iter()
                .map(|r| {
                    let (e, t) = at(&r.rows, axis, x);
                    (e as f64, t as f64)
                })
                .unzip();
            series.push(SeriesPoint {
                mode,
                x,
                edges: Stat::of(&e),
                titles: Stat::of(&t),
            });
        }
    }
    Comparison {
        program_hash: program_hash.to_string(),
        axis,
        modes,
        series,
    }
}

/// Load and aggregate campaign directories. All must share one program.
pub fn compare(dirs: &[PathBuf], axis: Axis) -> Result<Comparison, ReportError> {
    let mut runs = Vec::new();
    let mut hash: Option<String> = None;
    for d in dirs {
        let (run, m) = load_run(d)?;
        match &hash {
            None => hash = Some(m.program_hash),
            Some(h) if *h != m.program_hash => {
                return Err(ManifestError::ProgramMismatch {
                    dir: d.clone(),
                    expected: h.clone(),
                    found: m.program_hash,
                }
                .into())
            }
            Some(_) => {}
        }
        runs.push(run);
    }
    let hash = hash.ok_or(ReportError::Empty)?;
    Ok(aggregate(&hash, &runs, axis))
}

impl Comparison {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "mode,runs,edges_median,edges_lo,edges_hi,titles_median,titles_lo,titles_hi,confidence\n",
        );
        for m in &self.modes {
            out += &format!(
                "{},{},{},{},{},{},{},{},{:.4}\n",
                m.mode.as_str(),
                m.seeds.len(),
                m.edges.median,
                m.edges.ci_lo,
                m.edges.ci_hi,
                m.titles.median,
                m.titles.ci_lo,
                m.titles.ci_hi,
                m.edges.confidence
            );
        }
        out
    }

    pub fn series_csv(&self) -> String {
        let x = match self.axis {
            Axis::Execs => "execs",
            Axis::Time => "time",
        };
        let mut out = format!("mode,{x},edges_median,edges_lo,edges_hi,titles_median,titles_lo,titles_hi\n");
        for p in &self.series {
            out += &format!(
                "{},{},{},{},{},{},{},{}\n",
                p.mode.as_str(),
                p.x,
                p.edges.median,
                p.edges.ci_lo,
                p.edges.ci_hi,
                p.titles.median,
                p.titles.ci_lo,
                p.titles.ci_hi
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn ci_coverage() {
        let five = [5.0, 1.0, 4.0, 2.0, 3.0];
        assert_eq!(median_ci(&five), (1.0, 5.0, 1.0 - 2.0 / 32.0));
        let v: Vec<f64> = (0..20).map(f64::from).collect();
        let (lo, hi, c) = median_ci(&v);
        assert!(c >= 0.95 && lo == 5.0 && hi == 14.0, "{lo} {hi} {c}");
    }

    #[test]
    fn step_function() {
        let rows = [
            Row { time: 5, execs: 1, edges: 2, titles: 0 },
            Row { time: 9, execs: 4, edges: 3, titles: 1 },
        ];
        assert_eq!(at(&rows, Axis::Execs, 0), (0, 0));
        assert_eq!(at(&rows, Axis::Execs, 3), (2, 0));
        assert_eq!(at(&rows, Axis::Time, 9), (3, 1));
    }
}
