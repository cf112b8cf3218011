//! Device relations recovered from the virtual filesystem: the per-bus
//! device tree, and which parameter files belong to which /dev entry.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::vkernel::{KernelState, NodeKind, Vfs};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationNode {
    pub id: String,
    pub driver: String,
    pub bus: String,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub sysfs_path: String,
    /// Writable attribute files in this device's directory, group
    /// subdirectories included. Sorted.
    pub attrs: Vec<String>,
}

/// Devices rooted at their buses, in depth-first discovery order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationTree {
    pub buses: Vec<String>,
    pub nodes: Vec<RelationNode>,
}

impl RelationTree {
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.nodes[i].parent
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.nodes[i].children
    }

    /// Devices sharing the parent of `i` (or its bus, for bus-attached ones).
    pub fn siblings(&self, i: usize) -> Vec<usize> {
        let n = &self.nodes[i];
        match n.parent {
            Some(p) => self.nodes[p].children.iter().copied().filter(|&c| c != i).collect(),
            None => (0..self.nodes.len())
                .filter(|&j| j != i && self.nodes[j].parent.is_none() && self.nodes[j].bus == n.bus)
                .collect(),
        }
    }

    /// Device `i` with its parent, children and siblings, sorted.
    pub fn neighborhood(&self, i: usize) -> Vec<usize> {
        let mut out: BTreeSet<usize> = BTreeSet::from([i]);
        out.extend(self.parent(i));
        out.extend(self.children(i));
        out.extend(self.siblings(i));
        out.into_iter().collect()
    }

    /// (parent id or bus, child id) pairs.
    pub fn edge_set(&self) -> BTreeSet<(String, String)> {
        self.nodes
            .iter()
            .map(|n| {
                let p = match n.parent {
                    Some(p) => self.nodes[p].id.clone(),
                    None => n.bus.clone(),
                };
                (p, n.id.clone())
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSource {
    DeviceAttr,
    ModuleParam,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamEntry {
    pub devnode_path: String,
    pub param_path: String,
    pub source: ParamSource,
    pub driver: String,
    pub device: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamDriverMap {
    /// Sorted by (devnode_path, param_path).
    pub entries: Vec<ParamEntry>,
    /// Device nodes that matched no device directory, or more than one.
    pub warnings: Vec<String>,
}

impl ParamDriverMap {
    pub fn for_device<'a>(&'a self, device: &'a str) -> impl Iterator<Item = &'a ParamEntry> + 'a {
        self.entries.iter().filter(move |e| e.device == device)
    }
}

/// Everything `relate` produces for one program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relations {
    pub program_hash: String,
    pub tree: RelationTree,
    pub map: ParamDriverMap,
}

pub fn relate(state: &KernelState) -> Relations {
    let tree = build_relation_tree(state);
    let map = map_params_to_drivers(state);
    Relations {
        program_hash: state.program().hash.clone(),
        tree,
        map,
    }
}

fn uevent_driver(vfs: &Vfs, dir: usize) -> Option<String> {
    let (_, f) = vfs.children(dir).find(|(n, _)| *n == "uevent")?;
    match &vfs.node(f).kind {
        NodeKind::Info { content } => content
            .lines()
            .find_map(|l| l.strip_prefix("DRIVER="))
            .map(str::to_string),
        _ => None,
    }
}

/// Depth-first walk of `/sys/<bus>`. A directory holding a `uevent` file
/// is a device; other directories are attribute groups.
pub fn build_relation_tree(state: &KernelState) -> RelationTree {
    let vfs = state.vfs();
    let mut tree = RelationTree::default();
    let Some(sys) = vfs.lookup("/sys") else {
        return tree;
    };
    let buses: Vec<(String, usize)> = vfs
        .children(sys)
        .filter(|(n, id)| *n != "module" && vfs.is_dir(*id))
        .map(|(n, id)| (n.to_string(), id))
        .collect();

    fn walk(vfs: &Vfs, dir: usize, bus: &str, owner: Option<usize>, tree: &mut RelationTree) {
        for (name, id) in vfs.children(dir) {
            match &vfs.node(id).kind {
                NodeKind::Dir => match uevent_driver(vfs, id) {
                    Some(driver) => {
                        let me = tree.nodes.len();
                        tree.nodes.push(RelationNode {
                            id: name.to_string(),
                            driver,
                            bus: bus.to_string(),
                            parent: owner,
                            children: Vec::new(),
                            sysfs_path: vfs.path_of(id),
                            attrs: Vec::new(),
                        });
                        if let Some(p) = owner {
                            tree.nodes[p].children.push(me);
                        }
                        walk(vfs, id, bus, Some(me), tree);
                    }
                    None => walk(vfs, id, bus, owner, tree),
                },
                NodeKind::AttrFile { writable: true, .. } => {
                    if let Some(o) = owner {
                        tree.nodes[o].attrs.push(vfs.path_of(id));
                    }
                }
                _ => {}
            }
        }
    }

    for (bus, id) in &buses {
        tree.buses.push(bus.clone());
        walk(vfs, *id, bus, None, &mut tree);
    }
    for n in &mut tree.nodes {
        n.attrs.sort();
    }
    tree
}

/// Join /dev entries to device directories by name, then attach each
/// device's writable attributes and its module's parameters.
pub fn map_params_to_drivers(state: &KernelState) -> ParamDriverMap {
    let vfs = state.vfs();
    let tree = build_relation_tree(state);
    let mut by_name: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, n) in tree.nodes.iter().enumerate() {
        by_name.entry(n.id.as_str()).or_default().push(i);
    }
    // driver -> module, from /sys/module/<m>/drivers/<d>.
    let mut module_of: BTreeMap<String, String> = BTreeMap::new();
    if let Some(mdir) = vfs.lookup("/sys/module") {
        for (m, mid) in vfs.children(mdir) {
            if let Some((_, ddir)) = vfs.children(mid).find(|(n, _)| *n == "drivers") {
                for (d, _) in vfs.children(ddir) {
                    module_of.insert(d.to_string(), m.to_string());
                }
            }
        }
    }

    let mut map = ParamDriverMap::default();
    let Some(dev) = vfs.lookup("/dev") else {
        return map;
    };
    for (name, _) in vfs.children(dev) {
        let devnode_path = format!("/dev/{name}");
        let hits = by_name.get(name).map(Vec::as_slice).unwrap_or_default();
        let node = match hits {
            [i] => &tree.nodes[*i],
            [] => {
                map.warnings.push(format!("{devnode_path}: no device directory named `{name}`"));
                continue;
            }
            _ => {
                map.warnings.push(format!(
                    "{devnode_path}: {} device directories named `{name}`",
                    hits.len()
                ));
                continue;
            }
        };
        let entry = |param_path: String, source| ParamEntry {
            devnode_path: devnode_path.clone(),
            param_path,
            source,
            driver: node.driver.clone(),
            device: node.id.clone(),
        };
        for a in &node.attrs {
            map.entries.push(entry(a.clone(), ParamSource::DeviceAttr));
        }
        if let Some(m) = module_of.get(&node.driver) {
            let pdir = format!("/sys/module/{m}/parameters");
            for p in vfs.list(&pdir).unwrap_or_default() {
                map.entries.push(entry(format!("{pdir}/{p}"), ParamSource::ModuleParam));
            }
        }
    }
    map.entries.sort();
    map
}

/// Parameter files of `device` and of its parent, children and siblings:
/// each device's writable attributes plus whatever the map attaches to it.
pub fn related_params(tree: &RelationTree, map: &ParamDriverMap, device: &str) -> Vec<String> {
    let Some(i) = tree.index_of(device) else {
        return Vec::new();
    };
    let mut out = BTreeSet::new();
    for j in tree.neighborhood(i) {
        let n = &tree.nodes[j];
        out.extend(n.attrs.iter().cloned());
        out.extend(map.for_device(&n.id).map(|e| e.param_path.clone()));
    }
    out.into_iter().collect()
}
