//! Offline information collection: writable attributes and their store
//! functions, accepted values, module parameters, and how far runtime
//! parameters reach into driver control flow.

mod impact;
mod values;

use serde::{Deserialize, Serialize};

use crate::dmir::{self, AttrMember, AttrMode, BlockId, DmirProgram, Literal, ParamType};

pub use impact::{impact_count, ImpactCounts, ImpactReport};
pub use values::extract_valid_values;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    StringSet,
    UintRange,
    IntRange,
    Bool,
    Formatted,
    AnyString,
    IgnoresInput,
    Undetermined,
}

impl ValueKind {
    pub const ALL: [ValueKind; 8] = [
        ValueKind::StringSet,
        ValueKind::UintRange,
        ValueKind::IntRange,
        ValueKind::Bool,
        ValueKind::Formatted,
        ValueKind::AnyString,
        ValueKind::IgnoresInput,
        ValueKind::Undetermined,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::StringSet => "string_set",
            ValueKind::UintRange => "uint_range",
            ValueKind::IntRange => "int_range",
            ValueKind::Bool => "bool",
            ValueKind::Formatted => "formatted",
            ValueKind::AnyString => "any_string",
            ValueKind::IgnoresInput => "ignores_input",
            ValueKind::Undetermined => "undetermined",
        }
    }
}

/// What a store function accepts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ValueSpec {
    pub kind: ValueKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strings: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl ValueSpec {
    pub fn simple(kind: ValueKind) -> Self {
        Self {
            kind,
            strings: None,
            lo: None,
            hi: None,
            format: None,
            reason: None,
        }
    }

    pub fn string_set(strings: Vec<String>) -> Self {
        Self {
            strings: Some(strings),
            ..Self::simple(ValueKind::StringSet)
        }
    }

    pub fn range(kind: ValueKind, lo: i64, hi: i64) -> Self {
        Self {
            lo: Some(lo),
            hi: Some(hi),
            ..Self::simple(kind)
        }
    }

    pub fn formatted(fmt: &str) -> Self {
        Self {
            format: Some(fmt.to_string()),
            ..Self::simple(ValueKind::Formatted)
        }
    }

    pub fn undetermined(reason: &str) -> Self {
        Self {
            reason: Some(reason.to_string()),
            ..Self::simple(ValueKind::Undetermined)
        }
    }

    /// Check the type invariants.
    pub fn is_well_formed(&self) -> bool {
        match self.kind {
            ValueKind::StringSet => self.strings.as_ref().is_some_and(|s| !s.is_empty()),
            ValueKind::UintRange | ValueKind::IntRange => {
                matches!((self.lo, self.hi), (Some(l), Some(h)) if l <= h)
            }
            ValueKind::Formatted => self.format.is_some(),
            ValueKind::Undetermined => self.reason.is_some(),
            _ => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeRecord {
    pub driver: String,
    pub fname: String,
    /// Id of the store block's top-level block.
    pub store_ref: BlockId,
    pub writable: bool,
    pub value_spec: Option<ValueSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleParamRecord {
    pub module: String,
    pub name: String,
    pub ptype: ParamType,
    pub default: Literal,
}

/// One record per writable attribute, found by walking each driver's
/// declarations recursively through attribute groups. Sorted by (driver, fname).
pub fn identify_store_functions(program: &DmirProgram) -> Vec<AttributeRecord> {
    fn walk(driver: &str, members: &[AttrMember], out: &mut Vec<AttributeRecord>) {
        for m in members {
            match m {
                AttrMember::Group(g) => walk(driver, &g.members, out),
                AttrMember::Attr(a) => {
                    if a.mode != AttrMode::Rw {
                        continue;
                    }
                    if let Some(store) = &a.store {
                        out.push(AttributeRecord {
                            driver: driver.to_string(),
                            fname: a.fname.clone(),
                            store_ref: store.block.id,
                            writable: true,
                            value_spec: None,
                        });
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for (_, d) in program.drivers() {
        walk(&d.name, &d.members, &mut out);
    }
    out.sort_by(|a, b| (&a.driver, &a.fname).cmp(&(&b.driver, &b.fname)));
    out
}

/// Every declared module parameter, sorted by (module, name).
pub fn collect_module_params(program: &DmirProgram) -> Vec<ModuleParamRecord> {
    let mut out: Vec<ModuleParamRecord> = program
        .modules
        .iter()
        .flat_map(|m| {
            m.params.iter().map(move |p| ModuleParamRecord {
                module: m.name.clone(),
                name: p.name.clone(),
                ptype: p.ptype,
                default: p.default.clone(),
            })
        })
        .collect();
    out.sort_by(|a, b| (&a.module, &a.name).cmp(&(&b.module, &b.name)));
    out
}

/// The attribute declaration a record refers to.
pub fn record_attr<'p>(program: &'p DmirProgram, rec: &AttributeRecord) -> Option<&'p dmir::AttrDecl> {
    let d = program.driver(&rec.driver)?;
    dmir::flatten_attrs(d).into_iter().find(|a| a.fname == rec.fname)
}

/// Everything `extract` produces for one program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inventory {
    pub program_hash: String,
    pub attribute_records: Vec<AttributeRecord>,
    pub module_params: Vec<ModuleParamRecord>,
    pub impact_report: ImpactReport,
}

pub fn build_inventory(program: &DmirProgram) -> Inventory {
    let mut records = identify_store_functions(program);
    for r in &mut records {
        r.value_spec = Some(extract_valid_values(program, r));
    }
    Inventory {
        program_hash: program.hash.clone(),
        attribute_records: records,
        module_params: collect_module_params(program),
        impact_report: impact_count(program),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmir::parse;

    #[test]
    fn ro_excluded_and_nesting_found() {
        let p = parse(
            r#"module m { driver d { field x: int = 0;
                attr "b" ro { show { return OK; } }
                attr "a" rw { store { return OK; } }
                group g { group h { attr "deep" rw { store { return OK; } } } } } }"#,
        )
        .unwrap();
        let recs = identify_store_functions(&p);
        let names: Vec<_> = recs.iter().map(|r| r.fname.as_str()).collect();
        assert_eq!(names, ["a", "deep"]);
        // Oracle: writable entries of the flattened list.
        let d = p.driver("d").unwrap();
        let oracle: Vec<_> = dmir::flatten_attrs(d)
            .into_iter()
            .filter(|a| a.mode == AttrMode::Rw)
            .map(|a| a.fname.as_str())
            .collect();
        let mut sorted = oracle.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert!(recs.iter().all(|r| r.writable && r.value_spec.is_none()));
    }

    #[test]
    fn empty_program() {
        let p = parse("bus b;").unwrap();
        assert!(identify_store_functions(&p).is_empty());
        assert!(collect_module_params(&p).is_empty());
    }

    #[test]
    fn params_sorted_and_qualified() {
        let p = parse(
            r#"module z { param pal: string = "--"; param a: uint = 1; }
               module b { param pal: bool = true; }"#,
        )
        .unwrap();
        let recs = collect_module_params(&p);
        let keys: Vec<_> = recs.iter().map(|r| (r.module.as_str(), r.name.as_str())).collect();
        assert_eq!(keys, [("b", "pal"), ("z", "a"), ("z", "pal")]);
        assert_eq!(recs[2].ptype, ParamType::String);
        assert_eq!(recs[2].default, Literal::Str("--".into()));
    }

    #[test]
    fn inventory_is_deterministic() {
        let src = r#"module m { param v: int = -3; driver d { field x: int = 0;
            attr "a" rw { store { let v = kstrtoint(buf); self.x = v; return OK; } } } }"#;
        let a = serde_json::to_string(&build_inventory(&parse(src).unwrap())).unwrap();
        let b = serde_json::to_string(&build_inventory(&parse(src).unwrap())).unwrap();
        assert_eq!(a, b);
    }
}
