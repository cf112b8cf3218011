//! How many branches and basic blocks each class of runtime input controls.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::dmir::{self, Block, BodyKind, DmirProgram, Expr, Place, StmtKind};

use super::values::stmt_exprs;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactCounts {
    pub affected_if: u32,
    pub affected_switch: u32,
    pub affected_basic_blocks: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub op_args: ImpactCounts,
    pub module_params: ImpactCounts,
    pub device_attrs: ImpactCounts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Source {
    OpArgs,
    ModuleParams,
    DeviceAttrs,
}

/// Count `if`/`switch` statements whose condition depends on each input
/// class, plus the distinct blocks nested under them. Taint is
/// flow-insensitive within a body and never crosses bodies.
pub fn impact_count(program: &DmirProgram) -> ImpactReport {
    // Fields some store block writes, matched by name for `parent.` reads.
    let attr_fields: BTreeSet<&str> = program
        .drivers()
        .flat_map(|(_, d)| dmir::store_written_fields(d))
        .collect();
    let mut report = ImpactReport::default();
    for (src, out) in [
        (Source::OpArgs, &mut report.op_args),
        (Source::ModuleParams, &mut report.module_params),
        (Source::DeviceAttrs, &mut report.device_attrs),
    ] {
        for b in program.bodies() {
            let own: BTreeSet<&str> = dmir::store_written_fields(b.driver);
            let args: Vec<&str> = if b.kind == BodyKind::Op {
                b.driver
                    .op(b.name)
                    .map(|o| o.args.iter().map(|a| a.name.as_str()).collect())
                    .unwrap_or_default()
            } else {
                Vec::new()
            };
            let is_source = |p: &Place| match (src, p) {
                (Source::OpArgs, Place::Local(n)) => args.contains(&n.as_str()),
                (Source::ModuleParams, Place::Param { .. }) => true,
                (Source::DeviceAttrs, Place::SelfField(f)) => own.contains(f.as_str()),
                (Source::DeviceAttrs, Place::ParentField(f)) => attr_fields.contains(f.as_str()),
                _ => false,
            };
            let tainted = taint(&b.body.block, &is_source);
            let mut blocks = HashSet::new();
            count(&b.body.block, &is_source, &tainted, out, &mut blocks);
            out.affected_basic_blocks += blocks.len() as u32;
        }
    }
    report
}

fn expr_tainted(e: &Expr, is_source: &dyn Fn(&Place) -> bool, tainted: &HashSet<&str>) -> bool {
    let mut hit = false;
    e.for_each_place(&mut |p| {
        hit |= is_source(p) || matches!(p, Place::Local(n) if tainted.contains(n.as_str()));
    });
    hit
}

/// Locals that (transitively) hold source-derived data.
fn taint<'a>(block: &'a Block, is_source: &dyn Fn(&Place) -> bool) -> HashSet<&'a str> {
    let mut tainted = HashSet::new();
    loop {
        let before = tainted.len();
        block.for_each_stmt(&mut |s| {
            let dests: Vec<&str> = match &s.kind {
                StmtKind::Let { dests, .. } => dests.iter().map(String::as_str).collect(),
                StmtKind::Assign {
                    target: Place::Local(n),
                    ..
                } => vec![n.as_str()],
                StmtKind::EachByte { var, .. } => vec![var.as_str()],
                _ => return,
            };
            if stmt_exprs(s)
                .into_iter()
                .any(|e| expr_tainted(e, is_source, &tainted))
            {
                tainted.extend(dests);
            }
        });
        if tainted.len() == before {
            return tainted;
        }
    }
}

fn count<'a>(
    block: &'a Block,
    is_source: &dyn Fn(&Place) -> bool,
    tainted: &HashSet<&str>,
    out: &mut ImpactCounts,
    blocks: &mut HashSet<u32>,
) {
    for s in &block.stmts {
        let hit = match &s.kind {
            StmtKind::If { cond, .. } if expr_tainted(cond, is_source, tainted) => {
                out.affected_if += 1;
                true
            }
            StmtKind::Switch { scrutinee, .. } if expr_tainted(scrutinee, is_source, tainted) => {
                out.affected_switch += 1;
                true
            }
            _ => false,
        };
        s.for_each_child_block(|b| {
            if hit {
                b.for_each_block(&mut |inner| {
                    blocks.insert(inner.id);
                });
            }
            count(b, is_source, tainted, out, blocks);
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmir::parse;

    #[test]
    fn op_arg_branch() {
        let p = parse("module m { driver d { field x: int = 0; op f(a: int) { if (a > 0) { self.x = 1; } return OK; } } }")
            .unwrap();
        let r = impact_count(&p);
        assert_eq!(
            r.op_args,
            ImpactCounts {
                affected_if: 1,
                affected_switch: 0,
                affected_basic_blocks: 1
            }
        );
        assert_eq!(r.module_params, ImpactCounts::default());
        assert_eq!(r.device_attrs, ImpactCounts::default());
    }

    #[test]
    fn param_branch() {
        let p = parse(
            "module m { param verbose: bool = false; driver d { field x: int = 0;
               op f() { if (param.m.verbose) { self.x = 1; } else { self.x = 2; } return OK; } } }",
        )
        .unwrap();
        let r = impact_count(&p);
        assert_eq!(r.module_params.affected_if, 1);
        assert_eq!(r.module_params.affected_basic_blocks, 2);
        assert_eq!(r.op_args, ImpactCounts::default());
    }

    #[test]
    fn nested_blocks_deduplicated() {
        let p = parse(
            "module m { driver d { field mode: int = 0;
               attr \"m\" rw { store { let v = kstrtoint(buf); self.mode = v; return OK; } }
               op f(a: int) {
                 let t = self.mode + 1;
                 if (t > 2) { switch (self.mode) { case 1: { } default: { } } }
                 return OK; } } }",
        )
        .unwrap();
        let r = impact_count(&p);
        assert_eq!(r.device_attrs.affected_if, 1);
        assert_eq!(r.device_attrs.affected_switch, 1);
        // then-block, case block, default block.
        assert_eq!(r.device_attrs.affected_basic_blocks, 3);
    }
}
