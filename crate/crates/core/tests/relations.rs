mod common;

use std::collections::BTreeSet;

use paramfuzz::dmir;
use common::relations::{check_join, check_tree};
use paramfuzz::relations::{build_relation_tree, map_params_to_drivers, related_params};
use paramfuzz::vkernel::boot;
use proptest::prelude::*;

#[test]
fn corpus_trees_and_joins() {
    for f in common::corpus() {
        let st = boot(&f.program).unwrap();
        check_tree(&f.program, &build_relation_tree(&st));
        check_join(&f.program);
    }
}

#[test]
fn hub_topology() {
    let p = common::load("hub_disconnect_npd");
    let t = build_relation_tree(&boot(&p).unwrap());
    assert_eq!(t.buses, ["usb"]);
    let hub = t.index_of("hub0").unwrap();
    assert_eq!(t.parent(hub), None);
    let mut kids: Vec<&str> = t.children(hub).iter().map(|&c| t.nodes[c].id.as_str()).collect();
    kids.sort();
    assert_eq!(kids, ["port1", "port2"]);
    let p1 = t.index_of("port1").unwrap();
    assert!(t.nodes[p1].sysfs_path.starts_with(&format!("{}/", t.nodes[hub].sysfs_path)));
    assert_eq!(t.siblings(p1), [t.index_of("port2").unwrap()]);

    let map = map_params_to_drivers(&boot(&p).unwrap());
    let rel = related_params(&t, &map, "hub0");
    assert!(rel.contains(&"/sys/usb/hub0/port1/power/disable".to_string()));
    assert!(rel.contains(&"/sys/module/usbcore/parameters/autosuspend".to_string()));
    let rel = related_params(&t, &map, "port2");
    assert!(rel.contains(&"/sys/usb/hub0/power_level".to_string()));
    assert!(rel.contains(&"/sys/usb/hub0/port1/power/disable".to_string()));
}

/// A random topology over three drivers in two modules. `devnode` picks
/// per device: 0 = its own id, 1 = an unrelated name, 2 = another id.
fn program(parents: &[usize], drivers: &[usize], devnode: &[(u8, usize)]) -> String {
    let mut s = String::from(
        r#"bus b0;
bus b1;
module ma {
  param p1: int = 0;
  param p2: bool = false;
  driver da devnode {
    field x: int = 0;
    attr "a" rw { store { return OK; } }
    group g { group h { attr "c" rw { store { return OK; } } } }
    attr "r" ro { show { return OK; } }
  }
  driver db {
    field x: int = 0;
    attr "x" rw { store { return OK; } }
  }
}
module mb {
  param q: uint = 1;
  driver dc devnode {
    field x: int = 0;
    group k { attr "y" rw { store { return OK; } } }
  }
}
"#,
    );
    let names = ["da", "db", "dc"];
    let mut used = BTreeSet::new();
    for (i, (&par, &drv)) in parents.iter().zip(drivers).enumerate() {
        let parent = if par <= 1 || i == 0 {
            format!("b{}", par % 2)
        } else {
            format!("n{}", par % i)
        };
        let drv = names[drv % 3];
        s += &format!("device n{i}: driver={drv}, parent={parent}");
        if drv != "db" {
            let (kind, other) = devnode[i];
            let mut name = match kind % 3 {
                0 => format!("n{i}"),
                1 => format!("z{i}"),
                _ => format!("n{}", other % parents.len()),
            };
            if !used.insert(name.clone()) {
                name = format!("dup{i}");
                used.insert(name.clone());
            }
            s += &format!(", devnode=\"{name}\"");
        }
        s += ";\n";
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_topologies(
        shape in (1usize..12).prop_flat_map(|n| (
            proptest::collection::vec(0usize..16, n),
            proptest::collection::vec(0usize..3, n),
            proptest::collection::vec((0u8..3, 0usize..16), n),
        ))
    ) {
        let (parents, drivers, devnode) = shape;
        let src = program(&parents, &drivers, &devnode);
        let p = dmir::parse(&src).unwrap();
        let st = boot(&p).unwrap();
        check_tree(&p, &build_relation_tree(&st));
        check_join(&p);
    }
}
