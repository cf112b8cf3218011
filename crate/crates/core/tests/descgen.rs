mod common;

use std::collections::{BTreeMap, BTreeSet};

use paramfuzz::descgen::{generate, parse_descriptors, render, ArgRole, DescKind, Generated, Generator};
use paramfuzz::dmir::{flatten_attrs_with_dirs, AttrMode, DmirProgram};
use paramfuzz::extractor::build_inventory;
use paramfuzz::relations::relate;
use paramfuzz::vkernel::{boot, KernelState};

fn gen(p: &DmirProgram) -> (KernelState, Generated) {
    let st = boot(p).unwrap();
    let g = generate(p, &build_inventory(p), &relate(&st)).unwrap();
    (st, g)
}

/// `#` stands for a non-empty run of digits.
fn matches(pattern: &str, path: &str) -> bool {
    let (p, s) = (pattern.as_bytes(), path.as_bytes());
    let (mut i, mut j) = (0, 0);
    while i < p.len() {
        if p[i] == b'#' {
            let start = j;
            while j < s.len() && s[j].is_ascii_digit() {
                j += 1;
            }
            if j == start {
                return false;
            }
        } else {
            if j >= s.len() || s[j] != p[i] {
                return false;
            }
            j += 1;
        }
        i += 1;
    }
    j == s.len()
}

fn expand<'a>(patterns: &[String], files: &'a [String]) -> BTreeSet<&'a str> {
    files
        .iter()
        .filter(|f| patterns.iter().any(|p| matches(p, f)))
        .map(String::as_str)
        .collect()
}

/// (driver, attribute) -> concrete files across the driver's instances.
fn attr_files(p: &DmirProgram, st: &KernelState) -> BTreeMap<(String, String), BTreeSet<String>> {
    let mut out: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    for n in &st.tree().nodes {
        let d = p.driver(&n.driver).unwrap();
        for (dirs, a) in flatten_attrs_with_dirs(d) {
            if a.mode != AttrMode::Rw {
                continue;
            }
            let mut path = n.sysfs_path.clone();
            for g in dirs {
                path = format!("{path}/{g}");
            }
            out.entry((d.name.clone(), a.fname.clone()))
                .or_default()
                .insert(format!("{path}/{}", a.fname));
        }
    }
    out
}

#[test]
fn text_form_is_a_fixpoint() {
    for f in common::corpus() {
        let (_, g) = gen(&f.program);
        let text = render(&g.descriptors);
        let back = parse_descriptors(&text).unwrap_or_else(|e| panic!("{}: {e}", f.name));
        assert_eq!(back, g.descriptors, "{}", f.name);
        assert_eq!(render(&back), text);
    }
}

#[test]
fn merged_paths_cover_exactly_their_instances() {
    for f in common::corpus() {
        let (st, g) = gen(&f.program);
        let files = st.sys_files().to_vec();
        let devnodes: Vec<String> = st.devnode_paths().into_iter().map(String::from).collect();
        let want = attr_files(&f.program, &st);
        let mut covered: BTreeMap<&str, usize> = BTreeMap::new();

        for d in &g.descriptors {
            let Some(Generator::Paths(pats)) = d.arg(ArgRole::ParamPath).map(|a| &a.generator) else {
                if let Some(Generator::Paths(pats)) = d.arg(ArgRole::DevPath).map(|a| &a.generator) {
                    let drv = d.driver.as_deref().unwrap();
                    let got = expand(pats, &devnodes);
                    let exp: BTreeSet<&str> = st
                        .tree()
                        .nodes
                        .iter()
                        .filter(|n| n.driver == drv)
                        .filter_map(|n| n.devnode_path.as_deref())
                        .collect();
                    assert_eq!(got, exp, "{}: {}", f.name, d.name);
                }
                continue;
            };
            assert_eq!(d.kind, DescKind::WriteParam);
            let got = expand(pats, &files);
            for x in &got {
                *covered.entry(x).or_default() += 1;
            }
            match &d.driver {
                Some(drv) => {
                    let hit = want
                        .iter()
                        .any(|((wd, _), fs)| wd == drv && fs.iter().map(String::as_str).collect::<BTreeSet<_>>() == got);
                    assert!(hit, "{}: {} -> {got:?}", f.name, d.name);
                }
                None => {
                    assert_eq!(got.len(), 1, "{}: {}", f.name, d.name);
                    assert!(got.iter().all(|x| x.starts_with("/sys/module/")));
                }
            }
        }
        for fs in want.values() {
            for x in fs {
                assert_eq!(covered.get(x.as_str()), Some(&1), "{}: {x}", f.name);
            }
        }
        for x in files.iter().filter(|x| x.contains("/parameters/")) {
            assert_eq!(covered.get(x.as_str()), Some(&1), "{}: {x}", f.name);
        }
    }
}

#[test]
fn pseudo_call_choices_belong_to_the_driver() {
    for f in common::corpus() {
        let (st, g) = gen(&f.program);
        let files = st.sys_files().to_vec();
        let want = attr_files(&f.program, &st);
        for d in g.descriptors.iter().filter(|d| d.kind == DescKind::SyzModDev) {
            let drv = d.driver.as_deref().unwrap();
            let module = f.program.module_of_driver(drv).unwrap();
            let Some(Generator::Choice(choices)) = d.arg(ArgRole::ParamPath).map(|a| &a.generator) else {
                panic!("{}", d.name)
            };
            for (pat, spec) in choices {
                let got = expand(std::slice::from_ref(pat), &files);
                let own_attr = want.iter().any(|((wd, _), fs)| wd == drv && fs.iter().any(|x| got.contains(x.as_str())));
                let own_param = pat.starts_with(&format!("/sys/module/{}/parameters/", module.name));
                assert!(own_attr || own_param, "{}: {} {pat}", f.name, d.name);
                assert!(spec.is_well_formed());
            }
        }
    }
}

#[test]
fn generation_is_deterministic() {
    for f in common::corpus() {
        let (_, a) = gen(&f.program);
        let (_, b) = gen(&f.program);
        assert_eq!(render(&a.descriptors), render(&b.descriptors));
        assert_eq!(serde_json::to_string(&a.meta).unwrap(), serde_json::to_string(&b.meta).unwrap());
    }
}
