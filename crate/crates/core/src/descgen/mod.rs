//! Call descriptions generated from the extraction and relation outputs,
//! including the `syz_mod_dev` pseudo-call that writes a parameter and
//! then opens a device node.

mod text;
pub mod values;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dmir::{ArgType, DmirProgram, ParamType};
use crate::extractor::{Inventory, ValueKind, ValueSpec};
use crate::relations::{related_params, Relations};
use crate::vkernel::wildcard_match;

pub use text::{parse_descriptors, render, DescParseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescKind {
    OpenDev,
    DriverOp,
    WriteParam,
    SyzModDev,
}

impl DescKind {
    pub const ALL: [DescKind; 4] = [
        DescKind::OpenDev,
        DescKind::DriverOp,
        DescKind::WriteParam,
        DescKind::SyzModDev,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DescKind::OpenDev => "open_dev",
            DescKind::DriverOp => "driver_op",
            DescKind::WriteParam => "write_param",
            DescKind::SyzModDev => "syz_mod_dev",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgRole {
    Fd,
    ParamPath,
    ParamVal,
    DevPath,
    RngSeed,
    Flags,
    OpArg,
}

impl ArgRole {
    pub const ALL: [ArgRole; 7] = [
        ArgRole::Fd,
        ArgRole::ParamPath,
        ArgRole::ParamVal,
        ArgRole::DevPath,
        ArgRole::RngSeed,
        ArgRole::Flags,
        ArgRole::OpArg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ArgRole::Fd => "fd",
            ArgRole::ParamPath => "param_path",
            ArgRole::ParamVal => "param_val",
            ArgRole::DevPath => "dev_path",
            ArgRole::RngSeed => "rng_seed",
            ArgRole::Flags => "flags",
            ArgRole::OpArg => "op_arg",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// A handle produced by an earlier call.
    Handle,
    /// One of these path patterns.
    Paths(Vec<String>),
    /// A value drawn from a spec.
    Value(ValueSpec),
    /// A parameter path paired with the spec for its value.
    Choice(Vec<(String, ValueSpec)>),
    /// Value for whichever path the `Choice` argument picked.
    ByPath,
    Seed,
    Flags,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgSpec {
    pub role: ArgRole,
    /// Argument name; only op arguments have one.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub generator: Generator,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Descriptor {
    pub name: String,
    pub kind: DescKind,
    pub driver: Option<String>,
    /// Op invoked by a driver_op descriptor.
    pub op: Option<String>,
    pub arg_specs: Vec<ArgSpec>,
    pub produces_handle: bool,
    pub consumes_handle: bool,
}

impl Descriptor {
    pub fn arg(&self, role: ArgRole) -> Option<&ArgSpec> {
        self.arg_specs.iter().find(|a| a.role == role)
    }

    pub fn paths(&self, role: ArgRole) -> &[String] {
        match self.arg(role).map(|a| &a.generator) {
            Some(Generator::Paths(p)) => p,
            _ => &[],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelatedParam {
    pub path: String,
    /// The write_param descriptor whose pattern covers `path`.
    pub desc: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceMeta {
    pub id: String,
    pub driver: String,
    pub related: Vec<RelatedParam>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescMeta {
    pub program_hash: String,
    /// Descriptor name to the devices it can reach.
    pub targets: BTreeMap<String, Vec<String>>,
    pub devices: Vec<DeviceMeta>,
}

impl DescMeta {
    pub fn device(&self, id: &str) -> Option<&DeviceMeta> {
        self.devices.iter().find(|d| d.id == id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generated {
    pub descriptors: Vec<Descriptor>,
    pub meta: DescMeta,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("program identity mismatch: {what} has {found}, program has {expected}")]
    HashMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },
}

/// Full-range spec for a module parameter or op argument type.
pub fn type_spec(t: ParamType) -> ValueSpec {
    match t {
        ParamType::Uint => ValueSpec::range(ValueKind::UintRange, 0, u32::MAX as i64),
        ParamType::Int => ValueSpec::range(ValueKind::IntRange, i32::MIN as i64, i32::MAX as i64),
        ParamType::Bool => ValueSpec::simple(ValueKind::Bool),
        ParamType::String => ValueSpec::simple(ValueKind::AnyString),
    }
}

fn arg_spec(t: ArgType) -> ValueSpec {
    type_spec(match t {
        ArgType::Uint => ParamType::Uint,
        ArgType::Int => ParamType::Int,
        ArgType::String => ParamType::String,
    })
}

/// Collapse instance paths into `#` patterns: path components that differ
/// between instances have their digit runs replaced by `#`.
pub fn merge_paths(paths: &[String]) -> Vec<String> {
    let mut by_depth: BTreeMap<usize, Vec<Vec<&str>>> = BTreeMap::new();
    for p in paths {
        let parts: Vec<&str> = p.split('/').collect();
        by_depth.entry(parts.len()).or_default().push(parts);
    }
    let mut out = BTreeSet::new();
    for group in by_depth.values() {
        let varies: Vec<bool> = (0..group[0].len())
            .map(|i| group.iter().any(|g| g[i] != group[0][i]))
            .collect();
        for g in group {
            let parts: Vec<String> = g
                .iter()
                .zip(&varies)
                .map(|(c, v)| if *v { hash_digits(c) } else { c.to_string() })
                .collect();
            out.insert(parts.join("/"));
        }
    }
    out.into_iter().collect()
}

fn hash_digits(s: &str) -> String {
    let mut out = String::new();
    let mut in_digits = false;
    for c in s.chars() {
        if c.is_ascii_digit() {
            if !in_digits {
                out.push('#');
            }
            in_digits = true;
        } else {
            out.push(c);
            in_digits = false;
        }
    }
    out
}

fn check_hash(what: &'static str, expected: &str, found: &str) -> Result<(), GenError> {
    if expected == found {
        Ok(())
    } else {
        Err(GenError::HashMismatch {
            what,
            expected: expected.to_string(),
            found: found.to_string(),
        })
    }
}

fn path_gen(role: ArgRole, paths: Vec<String>) -> ArgSpec {
    ArgSpec {
        role,
        name: String::new(),
        generator: Generator::Paths(paths),
    }
}

fn simple(role: ArgRole, generator: Generator) -> ArgSpec {
    ArgSpec {
        role,
        name: String::new(),
        generator,
    }
}

/// Build descriptors for every driver with at least one device instance,
/// plus one write descriptor per module parameter.
pub fn generate(program: &DmirProgram, inventory: &Inventory, relations: &Relations) -> Result<Generated, GenError> {
    check_hash("inventory", &program.hash, &inventory.program_hash)?;
    check_hash("relations", &program.hash, &relations.program_hash)?;
    let tree = &relations.tree;

    let mut instances: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, n) in tree.nodes.iter().enumerate() {
        instances.entry(n.driver.as_str()).or_default().push(i);
    }
    let mut owners: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in &inventory.attribute_records {
        if instances.contains_key(r.driver.as_str()) {
            owners.entry(r.fname.as_str()).or_default().insert(r.driver.as_str());
        }
    }

    let mut descs = Vec::new();
    let mut targets: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let param_write = |module: &str, name: &str, ptype: ParamType| Descriptor {
        name: format!("write$param${module}${name}"),
        kind: DescKind::WriteParam,
        driver: None,
        op: None,
        arg_specs: vec![
            path_gen(ArgRole::ParamPath, vec![format!("/sys/module/{module}/parameters/{name}")]),
            simple(ArgRole::ParamVal, Generator::Value(type_spec(ptype))),
        ],
        produces_handle: false,
        consumes_handle: false,
    };

    for (m, d) in program.drivers() {
        let Some(inst) = instances.get(d.name.as_str()) else {
            continue;
        };
        let ids: Vec<String> = inst.iter().map(|&i| tree.nodes[i].id.clone()).collect();
        let devnodes: Vec<String> = program
            .devices
            .iter()
            .filter(|x| x.driver == d.name)
            .filter_map(|x| x.devnode.as_ref().map(|n| format!("/dev/{n}")))
            .collect();
        let dev_patterns = merge_paths(&devnodes);

        let mut choice = Vec::new();
        let mut writes = Vec::new();
        for r in inventory.attribute_records.iter().filter(|r| r.driver == d.name) {
            let suffix = format!("/{}", r.fname);
            let concrete: Vec<String> = inst
                .iter()
                .filter_map(|&i| tree.nodes[i].attrs.iter().find(|a| a.ends_with(&suffix)).cloned())
                .collect();
            if concrete.is_empty() {
                continue;
            }
            let patterns = merge_paths(&concrete);
            let spec = r
                .value_spec
                .clone()
                .unwrap_or_else(|| ValueSpec::undetermined("not analyzed"));
            for p in &patterns {
                choice.push((p.clone(), spec.clone()));
            }
            let qualified = owners.get(r.fname.as_str()).is_some_and(|o| o.len() > 1);
            let name = if qualified {
                format!("write${}${}", d.name, r.fname)
            } else {
                format!("write${}", r.fname)
            };
            targets.insert(name.clone(), ids.clone());
            writes.push(Descriptor {
                name,
                kind: DescKind::WriteParam,
                driver: Some(d.name.clone()),
                op: None,
                arg_specs: vec![
                    path_gen(ArgRole::ParamPath, patterns),
                    simple(ArgRole::ParamVal, Generator::Value(spec)),
                ],
                produces_handle: false,
                consumes_handle: false,
            });
        }
        for prm in &m.params {
            choice.push((
                format!("/sys/module/{}/parameters/{}", m.name, prm.name),
                type_spec(prm.ptype),
            ));
        }

        if d.devnode && !dev_patterns.is_empty() {
            let with_nodes: Vec<String> = program
                .devices
                .iter()
                .filter(|x| x.driver == d.name && x.devnode.is_some())
                .map(|x| x.id.clone())
                .collect();
            let open = format!("open${}", d.name);
            targets.insert(open.clone(), with_nodes.clone());
            descs.push(Descriptor {
                name: open,
                kind: DescKind::OpenDev,
                driver: Some(d.name.clone()),
                op: None,
                arg_specs: vec![
                    path_gen(ArgRole::DevPath, dev_patterns.clone()),
                    simple(ArgRole::Flags, Generator::Flags),
                ],
                produces_handle: true,
                consumes_handle: false,
            });
            for o in &d.ops {
                let mut args = vec![simple(ArgRole::Fd, Generator::Handle)];
                for a in &o.args {
                    args.push(ArgSpec {
                        role: ArgRole::OpArg,
                        name: a.name.clone(),
                        generator: Generator::Value(arg_spec(a.atype)),
                    });
                }
                let name = format!("{}${}", o.name, d.name);
                targets.insert(name.clone(), with_nodes.clone());
                descs.push(Descriptor {
                    name,
                    kind: DescKind::DriverOp,
                    driver: Some(d.name.clone()),
                    op: Some(o.name.clone()),
                    arg_specs: args,
                    produces_handle: false,
                    consumes_handle: true,
                });
            }
            let smd = format!("syz_mod_dev${}", d.name);
            targets.insert(smd.clone(), with_nodes);
            descs.push(Descriptor {
                name: smd,
                kind: DescKind::SyzModDev,
                driver: Some(d.name.clone()),
                op: None,
                arg_specs: vec![
                    simple(ArgRole::ParamPath, Generator::Choice(choice)),
                    simple(ArgRole::ParamVal, Generator::ByPath),
                    path_gen(ArgRole::DevPath, dev_patterns),
                    simple(ArgRole::RngSeed, Generator::Seed),
                    simple(ArgRole::Flags, Generator::Flags),
                ],
                produces_handle: true,
                consumes_handle: false,
            });
        }
        descs.extend(writes);
    }
    for p in &inventory.module_params {
        descs.push(param_write(&p.module, &p.name, p.ptype));
    }

    let writes: Vec<&Descriptor> = descs.iter().filter(|d| d.kind == DescKind::WriteParam).collect();
    let devices = tree
        .nodes
        .iter()
        .map(|n| DeviceMeta {
            id: n.id.clone(),
            driver: n.driver.clone(),
            related: related_params(tree, &relations.map, &n.id)
                .into_iter()
                .filter_map(|path| {
                    let w = writes
                        .iter()
                        .find(|w| w.paths(ArgRole::ParamPath).iter().any(|p| wildcard_match(p, &path)))?;
                    Some(RelatedParam {
                        path,
                        desc: w.name.clone(),
                    })
                })
                .collect(),
        })
        .collect();

    Ok(Generated {
        descriptors: descs,
        meta: DescMeta {
            program_hash: program.hash.clone(),
            targets,
            devices,
        },
    })
}
