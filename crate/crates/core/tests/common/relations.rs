//! Relation oracles computed from the declarations alone.

use std::collections::{BTreeMap, BTreeSet};

use paramfuzz::dmir::{flatten_attrs_with_dirs, AttrMode, DmirProgram};
use paramfuzz::relations::{map_params_to_drivers, RelationTree};
use paramfuzz::vkernel::boot;

/// sysfs directory of every declared device, from the declarations alone.
pub fn declared_paths(p: &DmirProgram) -> BTreeMap<String, (String, String)> {
    let parent: BTreeMap<&str, &str> = p.devices.iter().map(|d| (d.id.as_str(), d.parent.as_str())).collect();
    p.devices
        .iter()
        .map(|d| {
            let mut chain = vec![d.id.as_str()];
            let mut cur = d.parent.as_str();
            while let Some(&up) = parent.get(cur) {
                chain.push(cur);
                cur = up;
            }
            chain.reverse();
            (d.id.clone(), (cur.to_string(), format!("/sys/{cur}/{}", chain.join("/"))))
        })
        .collect()
}

pub type Entry = (String, String, String, String);

/// The name join done by brute force over the declarations.
pub fn brute_join(p: &DmirProgram) -> (BTreeSet<Entry>, usize) {
    let paths = declared_paths(p);
    let mut out = BTreeSet::new();
    let mut unmatched = 0;
    for d in &p.devices {
        let Some(n) = &d.devnode else { continue };
        let hits: Vec<_> = p.devices.iter().filter(|m| &m.id == n).collect();
        let [m] = hits.as_slice() else {
            unmatched += 1;
            continue;
        };
        let dir = &paths[&m.id].1;
        let drv = p.driver(&m.driver).unwrap();
        let dev = format!("/dev/{n}");
        for (dirs, a) in flatten_attrs_with_dirs(drv) {
            if a.mode == AttrMode::Rw {
                let mut path = dir.clone();
                for g in dirs {
                    path = format!("{path}/{g}");
                }
                out.insert((dev.clone(), format!("{path}/{}", a.fname), m.driver.clone(), m.id.clone()));
            }
        }
        let module = p.module_of_driver(&m.driver).unwrap();
        for prm in &module.params {
            out.insert((
                dev.clone(),
                format!("/sys/module/{}/parameters/{}", module.name, prm.name),
                m.driver.clone(),
                m.id.clone(),
            ));
        }
    }
    (out, unmatched)
}

pub fn check_tree(p: &DmirProgram, t: &RelationTree) {
    let paths = declared_paths(p);
    let nodes: BTreeSet<(String, String, String, String)> = t
        .nodes
        .iter()
        .map(|n| (n.id.clone(), n.driver.clone(), n.bus.clone(), n.sysfs_path.clone()))
        .collect();
    let want: BTreeSet<_> = p
        .devices
        .iter()
        .map(|d| {
            let (bus, path) = paths[&d.id].clone();
            (d.id.clone(), d.driver.clone(), bus, path)
        })
        .collect();
    assert_eq!(nodes, want);
    let edges: BTreeSet<(String, String)> = p.devices.iter().map(|d| (d.parent.clone(), d.id.clone())).collect();
    assert_eq!(t.edge_set(), edges);

    for i in 0..t.nodes.len() {
        for &c in t.children(i) {
            assert_eq!(t.parent(c), Some(i));
        }
        for j in t.siblings(i) {
            assert_ne!(i, j);
            assert!(t.siblings(j).contains(&i));
            assert_eq!(t.parent(i), t.parent(j));
        }
        assert!(t.neighborhood(i).contains(&i));
    }
}

pub fn check_join(p: &DmirProgram) {
    let st = boot(p).unwrap();
    let map = map_params_to_drivers(&st);
    let got: BTreeSet<Entry> = map
        .entries
        .iter()
        .map(|e| (e.devnode_path.clone(), e.param_path.clone(), e.driver.clone(), e.device.clone()))
        .collect();
    let (want, unmatched) = brute_join(p);
    assert_eq!(got, want);
    assert_eq!(map.warnings.len(), unmatched);
    let files: BTreeSet<&str> = st.sys_files().iter().map(String::as_str).collect();
    let devs: BTreeSet<&str> = st.devnode_paths().into_iter().collect();
    for e in &map.entries {
        assert!(files.contains(e.param_path.as_str()), "{}", e.param_path);
        assert!(devs.contains(e.devnode_path.as_str()), "{}", e.devnode_path);
    }
}

