use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn paramfuzz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paramfuzz"))
        .args(args)
        .env_remove("PARAMFUZZ_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = paramfuzz(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    paramfuzz(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every file under `dir` except the manifest.
fn contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn gen(dir: &Path, program: &str) -> PathBuf {
    let descs = dir.join("descs.szp");
    ok(&["gen", s(&corpus(program)), "--out", s(&descs)]);
    descs
}

fn fuzz(program: &str, descs: &Path, mode: &str, seed: u64, execs: u64, out: &Path) {
    ok(&[
        "fuzz",
        "--program",
        s(&corpus(program)),
        "--descs",
        s(descs),
        "--mode",
        mode,
        "--seed",
        &seed.to_string(),
        "--budget-execs",
        &execs.to_string(),
        "--out",
        s(out),
    ]);
}

#[test]
fn static_stages_are_reproducible() {
    let t = tempfile::tempdir().unwrap();
    for run in ["a", "b"] {
        let d = t.path().join(run);
        let p = corpus("bugbench.dmir");
        ok(&["extract", s(&p), "--out", s(&d.join("inventory.json"))]);
        ok(&["relate", s(&p), "--out", s(&d.join("relations.json"))]);
        ok(&["gen", s(&p), "--out", s(&d.join("descs.szp"))]);
    }
    let a = contents(&t.path().join("a"));
    assert_eq!(a.len(), 4);
    assert_eq!(a, contents(&t.path().join("b")));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(t.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["stages"].as_object().unwrap().len(), 3);
    assert_eq!(m["outputs"].as_object().unwrap().len(), 4);
}

#[test]
fn single_worker_campaigns_are_reproducible() {
    let t = tempfile::tempdir().unwrap();
    let descs = gen(t.path(), "bugbench.dmir");
    fuzz("bugbench.dmir", &descs, "syzlang_mutation", 4, 5000, &t.path().join("a"));
    fuzz("bugbench.dmir", &descs, "syzlang_mutation", 4, 5000, &t.path().join("b"));
    let a = contents(&t.path().join("a"));
    assert!(a.keys().any(|k| k.starts_with("corpus/") && k.ends_with(".case.json")));
    assert!(a.keys().any(|k| k.starts_with("crashes/") && k.ends_with("/repro.case.json")));
    assert!(a.contains_key("report.json") && a.contains_key("coverage.csv"));
    assert_eq!(a, contents(&t.path().join("b")));

    fuzz("bugbench.dmir", &descs, "syzlang_mutation", 4, 5000, &t.path().join("a"));
    assert_eq!(a, contents(&t.path().join("a")));
}

#[test]
fn reproducers_replay_their_titles() {
    let t = tempfile::tempdir().unwrap();
    let descs = gen(t.path(), "bugbench.dmir");
    let out = t.path().join("run");
    fuzz("bugbench.dmir", &descs, "syzlang_mutation", 1, 20000, &out);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let titles = report["titles"].as_array().unwrap();
    assert!(!titles.is_empty());
    for title in titles {
        let title = title.as_str().unwrap();
        let dir = out.join("crashes").join(title);
        let text = ok(&["replay", s(&dir), "--program", s(&corpus("bugbench.dmir")), "--trace"]);
        assert!(text.starts_with(&format!("verdict: {title}\n")), "{text}");
        assert!(text.contains("trace:\n"));

        let json = ok(&["replay", s(&dir.join("repro.case.json")), "--program", s(&corpus("bugbench.dmir")), "--json"]);
        let r: serde_json::Value = serde_json::from_str(&json).unwrap();
        let trace = dir.join("trace.json");
        fs::write(&trace, r["trace"].to_string()).unwrap();
        let again = ok(&[
            "replay",
            s(&dir),
            "--program",
            s(&corpus("bugbench.dmir")),
            "--schedule",
            s(&trace),
        ]);
        assert!(again.contains("schedule followed: exactly"), "{again}");
        assert!(again.starts_with(&format!("verdict: {title}\n")));
    }
}

struct Raw {
    edges: f64,
    titles: f64,
}

fn raw_final(dir: &Path) -> Raw {
    let text = fs::read_to_string(dir.join("coverage.csv")).unwrap();
    let last = text.lines().last().unwrap();
    let cols: Vec<f64> = last.split(',').map(|x| x.parse().unwrap()).collect();
    Raw {
        edges: cols[2],
        titles: cols[3],
    }
}

fn med(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[test]
fn report_medians_match_raw_csvs() {
    let t = tempfile::tempdir().unwrap();
    let descs = gen(t.path(), "bugbench.dmir");
    let modes = ["baseline", "syzlang", "syzlang_mutation"];
    let mut dirs = Vec::new();
    for m in modes {
        for seed in 1..=5 {
            let d = t.path().join(format!("{m}-{seed}"));
            fuzz("bugbench.dmir", &descs, m, seed, 1500 + 300 * seed, &d);
            dirs.push(d);
        }
    }
    let out = t.path().join("report");
    let mut args = vec!["report".to_string()];
    args.extend(dirs.iter().map(|d| s(d).to_string()));
    args.extend(["--out".to_string(), s(&out).to_string()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let printed = ok(&args);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(printed, summary);

    let rows: Vec<Vec<&str>> = summary.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for (row, m) in rows.iter().zip(modes) {
        assert_eq!(row[0], m);
        assert_eq!(row[1], "5");
        let raws: Vec<Raw> = (1..=5).map(|seed| raw_final(&t.path().join(format!("{m}-{seed}")))).collect();
        let edges: Vec<f64> = raws.iter().map(|r| r.edges).collect();
        let titles: Vec<f64> = raws.iter().map(|r| r.titles).collect();
        assert_eq!(row[2].parse::<f64>().unwrap(), med(edges.clone()), "{m}");
        assert_eq!(row[5].parse::<f64>().unwrap(), med(titles.clone()), "{m}");
        let min = edges.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = edges.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((row[3].parse::<f64>().unwrap(), row[4].parse::<f64>().unwrap()), (min, max));
    }

    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    let seen: std::collections::BTreeSet<&str> = series.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(seen.len(), 3);

    let again = t.path().join("report2");
    let mut args2: Vec<&str> = args[..args.len() - 1].to_vec();
    args2.push(s(&again));
    ok(&args2);
    assert_eq!(contents(&out), contents(&again));
}

#[test]
fn report_rejects_mixed_programs_and_tampering() {
    let t = tempfile::tempdir().unwrap();
    let bb = t.path().join("bb");
    let lp = t.path().join("lp");
    fs::create_dir_all(&bb).unwrap();
    fs::create_dir_all(&lp).unwrap();
    let d1 = gen(&bb, "bugbench.dmir");
    let d2 = gen(&lp, "loop.dmir");
    fuzz("bugbench.dmir", &d1, "syzlang", 1, 500, &t.path().join("a"));
    fuzz("loop.dmir", &d2, "syzlang", 1, 500, &t.path().join("b"));
    let o = paramfuzz(&["report", s(&t.path().join("a")), s(&t.path().join("b")), "--out", s(&t.path().join("r"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("differs"));

    fs::write(t.path().join("a/coverage.csv"), "time,execs,edges,titles\n").unwrap();
    let o = paramfuzz(&["report", s(&t.path().join("a")), "--out", s(&t.path().join("r"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not match its recorded hash"));
}

#[test]
fn scenario_check_exit_codes() {
    assert!(ok(&["check"]).lines().all(|l| l.starts_with("PASS ")));
    let t = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(corpus("scenarios/seq_tick_div0.scenario.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&src).unwrap();
    v["expect_title"] = "NPD/snd_seq/tick/stmt0".into();
    fs::write(t.path().join("broken.scenario.json"), v.to_string()).unwrap();
    let o = paramfuzz(&["check", "--scenarios", s(t.path()), "--corpus", s(&corpus(""))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL seq_tick_div0"));
}

#[test]
fn config_files_and_seed_sources() {
    let t = tempfile::tempdir().unwrap();
    let descs = gen(t.path(), "bugbench.dmir");
    let prog = corpus("bugbench.dmir");
    fs::write(
        t.path().join("c.toml"),
        format!(
            "program = {:?}\ndescs = {:?}\nmode = \"syzlang\"\nbudget_execs = 800\nseed = 7\n",
            s(&prog),
            s(&descs)
        ),
    )
    .unwrap();
    fs::write(
        t.path().join("c.json"),
        serde_json::json!({"program": prog, "descs": descs, "mode": "syzlang", "budget_execs": 800, "seed": 7}).to_string(),
    )
    .unwrap();
    let run = |cfg: &str, out: &str, extra: &[&str]| {
        let mut args = vec!["fuzz", "--config", cfg, "--out", out];
        args.extend_from_slice(extra);
        ok(&args);
        contents(Path::new(out))
    };
    let p = |n: &str| t.path().join(n).display().to_string();
    let from_toml = run(&p("c.toml"), &p("t"), &[]);
    assert_eq!(from_toml, run(&p("c.json"), &p("j"), &[]));
    fuzz("bugbench.dmir", &descs, "syzlang", 7, 800, &t.path().join("flags"));
    assert_eq!(from_toml, contents(&t.path().join("flags")));

    let overridden = run(&p("c.toml"), &p("o"), &["--seed", "8", "--budget-execs", "900"]);
    let r: serde_json::Value = serde_json::from_slice(&overridden["report.json"]).unwrap();
    assert_eq!((r["seed"].as_u64(), r["executions"].as_u64()), (Some(8), Some(900)));

    let o = Command::new(env!("CARGO_BIN_EXE_paramfuzz"))
        .args(["fuzz", "--program", s(&prog), "--descs", s(&descs), "--budget-execs", "100", "--out", &p("env")])
        .env("PARAMFUZZ_SEED", "31")
        .output()
        .unwrap();
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(t.path().join("env/report.json")).unwrap()).unwrap();
    assert_eq!(r["seed"].as_u64(), Some(31));

    fs::write(t.path().join("bad.toml"), "budget = 3\n").unwrap();
    assert_eq!(code(&["fuzz", "--config", &p("bad.toml"), "--out", &p("x")]), 2);
}

#[test]
fn validation_errors_exit_2() {
    let t = tempfile::tempdir().unwrap();
    let bad = t.path().join("bad.dmir");
    fs::write(&bad, "bus b;\nmodule m { driver d { op f( } }\n").unwrap();
    assert_eq!(code(&["extract", s(&bad), "--out", s(&t.path().join("o.json"))]), 2);
    assert_eq!(code(&["extract", s(&corpus("loop.dmir"))]), 2);

    let shared = t.path().join("shared");
    ok(&["extract", s(&corpus("loop.dmir")), "--out", s(&shared.join("inventory.json"))]);
    let o = shared.join("relations.json");
    assert_eq!(code(&["relate", s(&corpus("rtc.dmir")), "--out", s(&o)]), 2);
    assert!(!o.exists());
    let descs = gen(t.path(), "bugbench.dmir");
    let (bb, lp, w) = (corpus("bugbench.dmir"), corpus("loop.dmir"), t.path().join("w"));
    let base = ["fuzz", "--program", s(&bb), "--descs", s(&descs)];
    let with = |extra: &[&str]| {
        let mut a = base.to_vec();
        a.extend_from_slice(extra);
        a.extend_from_slice(&["--out", s(t.path())]);
        code(&a)
    };
    assert_eq!(with(&["--relation-prob", "1.5"]), 2);
    assert_eq!(with(&["--workers", "0"]), 2);
    assert_eq!(with(&["--mode", "bogus"]), 2);
    let wrong = ["fuzz", "--program", s(&lp), "--descs", s(&descs), "--out", s(&w)];
    assert_eq!(code(&wrong), 2);
}
