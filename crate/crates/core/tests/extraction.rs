mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use paramfuzz::dmir::{flatten_attrs_with_dirs, AttrMode};
use paramfuzz::extractor::{build_inventory, collect_module_params, identify_store_functions, ValueKind};
use common::golden::golden;

#[test]
fn inventories_match_golden_files() {
    for f in common::corpus() {
        let g = golden(&f.name);
        let inv = build_inventory(&f.program);
        let got: Vec<(String, String, String)> = inv
            .attribute_records
            .iter()
            .map(|r| {
                let kind = r.value_spec.as_ref().unwrap().kind.as_str().to_string();
                (r.driver.clone(), r.fname.clone(), kind)
            })
            .collect();
        assert_eq!(got, g.attributes, "{}", f.name);
        let params: Vec<(String, String, String)> = inv
            .module_params
            .iter()
            .map(|p| (p.module.clone(), p.name.clone(), p.ptype.as_str().to_string()))
            .collect();
        assert_eq!(params, g.params, "{}", f.name);
    }
}

#[test]
fn store_functions_match_flattened_declarations() {
    for f in common::corpus() {
        let oracle: BTreeSet<(String, String)> = f
            .program
            .drivers()
            .flat_map(|(_, d)| {
                flatten_attrs_with_dirs(d)
                    .into_iter()
                    .filter(|(_, a)| a.mode == AttrMode::Rw && a.store.is_some())
                    .map(|(_, a)| (d.name.clone(), a.fname.clone()))
            })
            .collect();
        let got: BTreeSet<(String, String)> = identify_store_functions(&f.program)
            .into_iter()
            .map(|r| (r.driver, r.fname))
            .collect();
        assert_eq!(got, oracle, "{}", f.name);
    }
}

#[test]
fn corpus_has_required_breadth() {
    let files = common::corpus();
    assert!(files.len() >= 12);
    let mut attrs = 0;
    let mut nested = 0;
    let mut params = 0;
    let mut kinds = BTreeSet::new();
    for f in &files {
        for (_, d) in f.program.drivers() {
            for (dirs, a) in flatten_attrs_with_dirs(d) {
                if a.mode == AttrMode::Rw {
                    attrs += 1;
                    nested += usize::from(!dirs.is_empty());
                }
            }
        }
        params += collect_module_params(&f.program).len();
        for r in build_inventory(&f.program).attribute_records {
            kinds.insert(r.value_spec.unwrap().kind);
        }
    }
    assert!(attrs >= 40, "{attrs}");
    assert!(nested >= 5, "{nested}");
    assert!(params >= 10, "{params}");
    assert_eq!(kinds, ValueKind::ALL.into_iter().collect());
}

#[test]
fn extraction_is_fast_and_deterministic() {
    let files = common::corpus();
    let t = Instant::now();
    let a: Vec<String> = files
        .iter()
        .map(|f| serde_json::to_string(&build_inventory(&f.program)).unwrap())
        .collect();
    assert!(t.elapsed().as_secs_f64() < 1.0);
    let b: Vec<String> = files
        .iter()
        .map(|f| serde_json::to_string(&build_inventory(&f.program)).unwrap())
        .collect();
    assert_eq!(a, b);
}

#[test]
fn specs_are_well_formed() {
    for f in common::corpus() {
        for r in build_inventory(&f.program).attribute_records {
            let s = r.value_spec.unwrap();
            assert!(s.is_well_formed(), "{}/{}: {s:?}", r.driver, r.fname);
        }
    }
}
