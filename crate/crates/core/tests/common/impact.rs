//! A second, deliberately naive implementation of the impact count: flatten
//! every body into statements tagged with their enclosing statements,
//! recompute taint by fixpoint over the flat list, then recount.

use std::collections::{BTreeSet, HashSet};

use paramfuzz::dmir::{self, Block, BodyKind, DmirProgram, Expr, LetValue, Place, Stmt, StmtKind};
use paramfuzz::extractor::{ImpactCounts, ImpactReport};

#[derive(Clone, Copy, PartialEq)]
enum Src {
    Arg,
    Param,
    Attr,
}

struct Flat<'a> {
    stmt: &'a Stmt,
    /// Statement ids enclosing this one, outermost first.
    enclosing: Vec<u32>,
}

/// (block id, enclosing statement ids) for every block of a body.
fn flatten<'a>(b: &'a Block, enclosing: &[u32], stmts: &mut Vec<Flat<'a>>, blocks: &mut Vec<(u32, Vec<u32>)>) {
    blocks.push((b.id, enclosing.to_vec()));
    for s in &b.stmts {
        stmts.push(Flat {
            stmt: s,
            enclosing: enclosing.to_vec(),
        });
        let mut inner = enclosing.to_vec();
        inner.push(s.id);
        let children: Vec<&Block> = match &s.kind {
            StmtKind::If {
                then_block, else_block, ..
            } => std::iter::once(then_block).chain(else_block.iter()).collect(),
            StmtKind::Switch { cases, default, .. } => cases.iter().map(|c| &c.block).chain(default.iter()).collect(),
            StmtKind::ListIter { body, .. } | StmtKind::EachByte { body, .. } => vec![body],
            _ => vec![],
        };
        for c in children {
            flatten(c, &inner, stmts, blocks);
        }
    }
}

fn places(e: &Expr, out: &mut Vec<Place>) {
    match e {
        Expr::Place(p) => out.push(p.clone()),
        Expr::Unary(_, a) => places(a, out),
        Expr::Binary(_, a, b) => {
            places(a, out);
            places(b, out);
        }
        _ => {}
    }
}

/// Places read by the statement itself, not by nested blocks.
fn reads(s: &Stmt) -> Vec<Place> {
    let mut out = Vec::new();
    match &s.kind {
        StmtKind::Let { value, .. } => match value {
            LetValue::Expr(e) => places(e, &mut out),
            LetValue::Helper(h) => places(&h.arg, &mut out),
        },
        StmtKind::Assign { value, .. } => places(value, &mut out),
        StmtKind::If { cond, .. } => places(cond, &mut out),
        StmtKind::Switch { scrutinee, .. } => places(scrutinee, &mut out),
        StmtKind::ListAdd { value, .. } | StmtKind::ListDel { value, .. } => places(value, &mut out),
        StmtKind::EachByte { source, .. } => places(source, &mut out),
        StmtKind::Alloc(p) | StmtKind::Free(p) | StmtKind::Use(p) => out.push(p.clone()),
        _ => {}
    }
    out
}

fn cond_reads(s: &Stmt) -> Option<Vec<Place>> {
    let mut out = Vec::new();
    match &s.kind {
        StmtKind::If { cond, .. } => places(cond, &mut out),
        StmtKind::Switch { scrutinee, .. } => places(scrutinee, &mut out),
        _ => return None,
    }
    Some(out)
}

fn defines(s: &Stmt) -> Vec<String> {
    match &s.kind {
        StmtKind::Let { dests, .. } => dests.clone(),
        StmtKind::Assign {
            target: Place::Local(n),
            ..
        } => vec![n.clone()],
        StmtKind::EachByte { var, .. } => vec![var.clone()],
        _ => vec![],
    }
}

fn store_fields(program: &DmirProgram, driver: Option<&str>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (_, d) in program.drivers() {
        if driver.is_some_and(|n| n != d.name) {
            continue;
        }
        for a in dmir::flatten_attrs(d) {
            let Some(st) = &a.store else { continue };
            let (mut stmts, mut blocks) = (Vec::new(), Vec::new());
            flatten(&st.block, &[], &mut stmts, &mut blocks);
            for f in stmts {
                if let StmtKind::Assign {
                    target: Place::SelfField(n),
                    ..
                } = &f.stmt.kind
                {
                    out.insert(n.clone());
                }
            }
        }
    }
    out
}

fn recount(program: &DmirProgram, src: Src) -> ImpactCounts {
    let all_fields = store_fields(program, None);
    let mut out = ImpactCounts::default();
    for b in program.bodies() {
        let own = store_fields(program, Some(&b.driver.name));
        let args: Vec<String> = match b.kind {
            BodyKind::Op => b.driver.op(b.name).unwrap().args.iter().map(|a| a.name.clone()).collect(),
            _ => vec![],
        };
        let is_source = |p: &Place| match (src, p) {
            (Src::Arg, Place::Local(n)) => args.contains(n),
            (Src::Param, Place::Param { .. }) => true,
            (Src::Attr, Place::SelfField(f)) => own.contains(f),
            (Src::Attr, Place::ParentField(f)) => all_fields.contains(f),
            _ => false,
        };
        let (mut stmts, mut blocks) = (Vec::new(), Vec::new());
        flatten(&b.body.block, &[], &mut stmts, &mut blocks);

        let mut tainted: HashSet<String> = HashSet::new();
        loop {
            let mut grew = false;
            for f in &stmts {
                let hot = reads(f.stmt)
                    .iter()
                    .any(|p| is_source(p) || matches!(p, Place::Local(n) if tainted.contains(n)));
                if hot {
                    for d in defines(f.stmt) {
                        grew |= tainted.insert(d);
                    }
                }
            }
            if !grew {
                break;
            }
        }

        let mut hit = HashSet::new();
        for f in &stmts {
            let Some(r) = cond_reads(f.stmt) else { continue };
            if r.iter().any(|p| is_source(p) || matches!(p, Place::Local(n) if tainted.contains(n))) {
                hit.insert(f.stmt.id);
                match f.stmt.kind {
                    StmtKind::If { .. } => out.affected_if += 1,
                    _ => out.affected_switch += 1,
                }
            }
        }
        out.affected_basic_blocks += blocks
            .iter()
            .filter(|(_, enc)| enc.iter().any(|s| hit.contains(s)))
            .count() as u32;
    }
    out
}

pub fn oracle(program: &DmirProgram) -> ImpactReport {
    ImpactReport {
        op_args: recount(program, Src::Arg),
        module_params: recount(program, Src::Param),
        device_attrs: recount(program, Src::Attr),
    }
}

