//! One function per subcommand. Each returns the process exit code.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use paramfuzz::case::{CaseLimits, TestCase};
use paramfuzz::descgen::{self, parse_descriptors, DescMeta};
use paramfuzz::dmir::{self, DmirProgram};
use paramfuzz::extractor::build_inventory;
use paramfuzz::fuzzer::{run_campaign, CampaignConfig, Mode};
use paramfuzz::relations::relate as relate_program;
use paramfuzz::scenario::{check_scenario, load_scenarios};
use paramfuzz::vkernel::{boot, ExecutionResult, TraceEntry};
use serde::Serialize;

use crate::config::{resolve_seed, FileConfig};
use crate::manifest::{files_under, now_unix, RunManifest, MANIFEST};
use crate::report::{compare, Axis};
use crate::{AxisArg, CheckArgs, FuzzArgs, Invalid, ModeArg, ReplayArgs, ReportArgs, StageArgs, EXIT_SCENARIO};

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> anyhow::Result<T> {
    flag.or(file).ok_or_else(|| Invalid(format!("--{name} is required")).into())
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(d) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("outputs serialize") + "\n"
}

fn load_program(path: &Path) -> anyhow::Result<DmirProgram> {
    let src = read(path)?;
    dmir::parse(&src).with_context(|| format!("parsing {}", path.display()))
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Paths of `program` and `out` for the single-output stages.
fn stage_paths(a: StageArgs, file: &FileConfig) -> anyhow::Result<(PathBuf, PathBuf)> {
    let program = required(a.program, file.program.clone(), "program")?;
    let out = required(a.out, file.out.clone(), "out")?;
    Ok((program, out))
}

fn stage_config(program: &Path) -> serde_json::Value {
    serde_json::json!({ "program": program.display().to_string() })
}

pub fn extract(a: StageArgs, file: &FileConfig) -> anyhow::Result<u8> {
    let started = now_unix();
    let (program, out) = stage_paths(a, file)?;
    let p = load_program(&program)?;
    RunManifest::check_dir(&parent_dir(&out), &p.hash)?;
    write(&out, &to_json(&build_inventory(&p)))?;
    RunManifest::record(&parent_dir(&out), &p.hash, "extract", stage_config(&program), started, &[out])?;
    Ok(0)
}

pub fn relate(a: StageArgs, file: &FileConfig) -> anyhow::Result<u8> {
    let started = now_unix();
    let (program, out) = stage_paths(a, file)?;
    let p = load_program(&program)?;
    RunManifest::check_dir(&parent_dir(&out), &p.hash)?;
    let st = boot(&p)?;
    write(&out, &to_json(&relate_program(&st)))?;
    RunManifest::record(&parent_dir(&out), &p.hash, "relate", stage_config(&program), started, &[out])?;
    Ok(0)
}

/// `descs.szp` -> `descs.meta.json`.
pub fn meta_path(descs: &Path) -> PathBuf {
    descs.with_extension("meta.json")
}

pub fn gen(a: StageArgs, file: &FileConfig) -> anyhow::Result<u8> {
    let started = now_unix();
    let (program, out) = stage_paths(a, file)?;
    let p = load_program(&program)?;
    let st = boot(&p)?;
    let g = descgen::generate(&p, &build_inventory(&p), &relate_program(&st))?;
    let meta = meta_path(&out);
    RunManifest::check_dir(&parent_dir(&out), &p.hash)?;
    write(&out, &descgen::render(&g.descriptors))?;
    write(&meta, &to_json(&g.meta))?;
    RunManifest::record(&parent_dir(&out), &p.hash, "gen", stage_config(&program), started, &[out, meta])?;
    Ok(0)
}

fn mode_of(flag: Option<ModeArg>, file: Option<&str>) -> anyhow::Result<Mode> {
    match (flag, file) {
        (Some(ModeArg::Baseline), _) => Ok(Mode::Baseline),
        (Some(ModeArg::Syzlang), _) => Ok(Mode::Syzlang),
        (Some(ModeArg::SyzlangMutation), _) => Ok(Mode::SyzlangMutation),
        (None, Some(s)) => Mode::from_name(s).ok_or_else(|| Invalid(format!("unknown mode `{s}`")).into()),
        (None, None) => Ok(CampaignConfig::default().mode),
    }
}

/// Campaign settings: flags over the config file over defaults.
pub fn campaign_config(a: &FuzzArgs, file: &FileConfig, seed_env: Option<&str>) -> anyhow::Result<CampaignConfig> {
    let d = CampaignConfig::default();
    let cfg = CampaignConfig {
        mode: mode_of(a.mode, file.mode.as_deref())?,
        budget_execs: a.budget_execs.or(file.budget_execs).unwrap_or(d.budget_execs),
        budget_secs: a.budget_secs.or(file.budget_secs),
        workers: a.workers.or(file.workers).unwrap_or(d.workers),
        seed: resolve_seed(a.seed, file, seed_env)?,
        relation_prob: a.relation_prob.or(file.relation_prob).unwrap_or(d.relation_prob),
        limits: CaseLimits {
            max_threads: a.max_threads.or(file.max_threads).unwrap_or(d.limits.max_threads),
            max_calls_per_thread: a
                .max_calls_per_thread
                .or(file.max_calls_per_thread)
                .unwrap_or(d.limits.max_calls_per_thread),
        },
        epoch: a.epoch.or(file.epoch).unwrap_or(d.epoch),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn fuzz(a: FuzzArgs, file: &FileConfig) -> anyhow::Result<u8> {
    let started = now_unix();
    let seed_env = std::env::var("PARAMFUZZ_SEED").ok();
    let cfg = campaign_config(&a, file, seed_env.as_deref())?;
    let program = required(a.program, file.program.clone(), "program")?;
    let descs = required(a.descs, file.descs.clone(), "descs")?;
    let out = required(a.out, file.out.clone(), "out")?;

    let p = Arc::new(load_program(&program)?);
    let text = read(&descs)?;
    let ds = parse_descriptors(&text).with_context(|| format!("parsing {}", descs.display()))?;
    let meta_file = meta_path(&descs);
    let meta: DescMeta =
        serde_json::from_str(&read(&meta_file)?).with_context(|| format!("parsing {}", meta_file.display()))?;

    RunManifest::check_dir(&out, &p.hash)?;
    for sub in ["corpus", "crashes"] {
        let d = out.join(sub);
        if d.exists() {
            if !out.join(MANIFEST).exists() {
                return Err(Invalid(format!("{} exists and is not a paramfuzz output", d.display())).into());
            }
            fs::remove_dir_all(&d).with_context(|| format!("removing {}", d.display()))?;
        }
    }
    let c = run_campaign(p.clone(), &ds, &meta, &cfg)?;
    c.save(&out)?;
    log::info!(
        "{}: {} execs, {} edges, {} titles",
        cfg.mode.as_str(),
        c.report.executions,
        c.report.edges,
        c.report.titles.len()
    );
    let snapshot = serde_json::json!({
        "program": program.display().to_string(),
        "descs": descs.display().to_string(),
        "campaign": cfg,
    });
    RunManifest::record(&out, &p.hash, "fuzz", snapshot, started, &files_under(&out)?)?;
    Ok(0)
}

fn load_case(path: &Path) -> anyhow::Result<TestCase> {
    let path = if path.is_dir() {
        path.join("repro.case.json")
    } else {
        path.to_path_buf()
    };
    TestCase::from_json(&read(&path)?).with_context(|| format!("parsing {}", path.display()))
}

fn render_result(r: &ExecutionResult, trace: bool, exact: Option<bool>) -> String {
    let mut out = format!("verdict: {}\n", r.title().unwrap_or("none"));
    out += &format!("coverage: {} edges\n", r.coverage.len());
    if let Some(e) = &r.engine_error {
        out += &format!("engine error: {e}\n");
    }
    for (t, sts) in r.statuses.iter().enumerate() {
        let s: Vec<String> = sts
            .iter()
            .map(|c| {
                let main = serde_json::to_value(c.status).expect("statuses serialize");
                let main = main.as_str().unwrap_or_default().to_string();
                match c.param_status {
                    Some(p) => format!("{main}({})", serde_json::to_value(p).expect("statuses serialize").as_str().unwrap_or_default()),
                    None => main,
                }
            })
            .collect();
        out += &format!("thread {t}: {}\n", s.join(" "));
    }
    if let Some(exact) = exact {
        out += &format!("schedule followed: {}\n", if exact { "exactly" } else { "partially" });
    }
    if trace {
        out += "trace:\n";
        for e in &r.trace {
            out += &match e {
                TraceEntry::Thread { thread } => format!("  run thread {thread}\n"),
                TraceEntry::Pick { index, of } => format!("  pick {index} of {of}\n"),
            };
        }
    }
    out
}

pub fn replay(a: ReplayArgs, file: &FileConfig) -> anyhow::Result<u8> {
    let program = required(a.program, file.program.clone(), "program")?;
    let p = load_program(&program)?;
    let case = load_case(&a.case)?;
    case.validate(&CaseLimits {
        max_threads: usize::MAX,
        max_calls_per_thread: usize::MAX,
    })
    .map_err(|e| Invalid(format!("{}: {e}", a.case.display())))?;
    let mut st = boot(&p)?;
    let (r, exact) = match &a.schedule {
        Some(s) => {
            let trace: Vec<TraceEntry> =
                serde_json::from_str(&read(s)?).with_context(|| format!("parsing {}", s.display()))?;
            let (r, exact) = st.replay(&case, &trace);
            (r, Some(exact))
        }
        None => (st.run_case(&case), None),
    };
    if a.json {
        print!("{}", to_json(&r));
    } else {
        print!("{}", render_result(&r, a.trace, exact));
    }
    Ok(0)
}

pub fn report(a: ReportArgs, file: &FileConfig) -> anyhow::Result<u8> {
    let started = now_unix();
    let out = required(a.out, file.out.clone(), "out")?;
    let axis = match a.axis {
        AxisArg::Execs => Axis::Execs,
        AxisArg::Time => Axis::Time,
    };
    let cmp = compare(&a.dirs, axis)?;
    RunManifest::check_dir(&out, &cmp.program_hash)?;
    let files = [
        (out.join("summary.csv"), cmp.summary_csv()),
        (out.join("series.csv"), cmp.series_csv()),
        (out.join("comparison.json"), to_json(&cmp)),
    ];
    for (p, text) in &files {
        write(p, text)?;
    }
    print!("{}", cmp.summary_csv());
    let dirs: Vec<String> = a.dirs.iter().map(|d| d.display().to_string()).collect();
    let outputs: Vec<PathBuf> = files.into_iter().map(|(p, _)| p).collect();
    RunManifest::record(
        &out,
        &cmp.program_hash,
        "report",
        serde_json::json!({ "dirs": dirs, "axis": axis }),
        started,
        &outputs,
    )?;
    Ok(0)
}

/// `./corpus` when present, otherwise the corpus shipped with the sources.
pub fn default_corpus() -> PathBuf {
    let local = PathBuf::from("corpus");
    if local.join("scenarios").is_dir() {
        local
    } else {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
    }
}

pub fn check(a: CheckArgs, file: &FileConfig) -> anyhow::Result<u8> {
    let corpus = a.corpus.or(file.corpus.clone()).unwrap_or_else(default_corpus);
    let dir = a
        .scenarios
        .or(file.scenarios.clone())
        .unwrap_or_else(|| corpus.join("scenarios"));
    let scenarios = load_scenarios(&dir)?;
    if scenarios.is_empty() {
        return Err(Invalid(format!("no scenarios in {}", dir.display())).into());
    }
    let mut outcomes = Vec::new();
    for sc in &scenarios {
        outcomes.push(check_scenario(sc, &corpus)?);
    }
    if a.json {
        print!("{}", to_json(&outcomes));
    } else {
        for o in &outcomes {
            if o.passed() {
                println!("PASS {}", o.name);
            } else {
                println!("FAIL {}: {}", o.name, o.failures.join("; "));
            }
        }
    }
    Ok(if outcomes.iter().all(|o| o.passed()) { 0 } else { EXIT_SCENARIO })
}
