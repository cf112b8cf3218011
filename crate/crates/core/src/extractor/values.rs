//! Valid-value extraction: taint analysis of a store block with `buf` as the source.

use std::collections::HashSet;

use crate::dmir::{BinOp, Block, DmirProgram, Expr, HelperKind, LetValue, Place, Stmt, StmtKind, UnOp};

use super::{record_attr, AttributeRecord, ValueKind, ValueSpec};

/// Expressions appearing directly in a statement (not in nested blocks).
pub(crate) fn stmt_exprs(s: &Stmt) -> Vec<&Expr> {
    match &s.kind {
        StmtKind::Let { value, .. } => match value {
            LetValue::Expr(e) => vec![e],
            LetValue::Helper(h) => vec![&h.arg],
        },
        StmtKind::Assign { value, .. } => vec![value],
        StmtKind::If { cond, .. } => vec![cond],
        StmtKind::Switch { scrutinee, .. } => vec![scrutinee],
        StmtKind::ListAdd { value, .. } | StmtKind::ListDel { value, .. } => vec![value],
        StmtKind::EachByte { source, .. } => vec![source],
        _ => Vec::new(),
    }
}

/// True if `e` reads `buf` or any local in `vars`.
fn reads(e: &Expr, vars: &HashSet<&str>) -> bool {
    let mut hit = e.reads_buf();
    e.for_each_place(&mut |p| {
        if let Place::Local(n) = p {
            hit |= vars.contains(n.as_str());
        }
    });
    hit
}

/// Locals holding data derived from `seed` (or from `buf` when `with_buf`),
/// through plain `let` and local assignment. Flow-insensitive.
fn derived<'a>(block: &'a Block, seed: &[&'a str], with_buf: bool) -> HashSet<&'a str> {
    let mut vars: HashSet<&str> = seed.iter().copied().collect();
    loop {
        let before = vars.len();
        block.for_each_stmt(&mut |s| {
            let src = |e: &Expr| (with_buf && e.reads_buf()) || reads_locals(e, &vars);
            match &s.kind {
                StmtKind::Let {
                    dests,
                    value: LetValue::Expr(e),
                } if src(e) => {
                    let new: Vec<&str> = dests.iter().map(String::as_str).collect();
                    vars.extend(new);
                }
                StmtKind::Assign {
                    target: Place::Local(n),
                    value,
                } if src(value) => {
                    vars.insert(n);
                }
                _ => {}
            }
        });
        if vars.len() == before {
            return vars;
        }
    }
}

fn reads_locals(e: &Expr, vars: &HashSet<&str>) -> bool {
    let mut hit = false;
    e.for_each_place(&mut |p| {
        if let Place::Local(n) = p {
            hit |= vars.contains(n.as_str());
        }
    });
    hit
}

fn block_reads(block: &Block, vars: &HashSet<&str>) -> bool {
    let mut hit = false;
    block.for_each_stmt(&mut |s| {
        hit |= stmt_exprs(s).into_iter().any(|e| reads(e, vars));
    });
    hit
}

/// Classify what a store function accepts.
pub fn extract_valid_values(program: &DmirProgram, record: &AttributeRecord) -> ValueSpec {
    let Some(store) = record_attr(program, record).and_then(|a| a.store.as_ref()) else {
        return ValueSpec::undetermined("no store block");
    };
    let block = &store.block;

    let mut reads_buf = false;
    block.for_each_stmt(&mut |s| reads_buf |= stmt_exprs(s).iter().any(|e| e.reads_buf()));
    if !reads_buf {
        return ValueSpec::simple(ValueKind::IgnoresInput);
    }

    let raw = derived(block, &[], true);

    let mut bytewise = false;
    block.for_each_stmt(&mut |s| match &s.kind {
        StmtKind::EachByte { source, .. } => bytewise |= reads(source, &raw),
        StmtKind::ListIter { body, .. } => bytewise |= block_reads(body, &raw),
        _ => {}
    });
    if bytewise {
        return ValueSpec::undetermined("byte-wise processing");
    }

    let mut helper = None;
    block.for_each_stmt(&mut |s| {
        if helper.is_some() {
            return;
        }
        if let StmtKind::Let {
            dests,
            value: LetValue::Helper(h),
        } = &s.kind
        {
            if reads(&h.arg, &raw) {
                helper = Some((dests, h));
            }
        }
    });

    if let Some((dests, h)) = helper {
        let var = dests[0].as_str();
        let full = match &h.kind {
            HelperKind::MatchString(opts) => (-1, opts.len() as i64 - 1),
            HelperKind::Kstrtouint => (0, u32::MAX as i64),
            HelperKind::Kstrtoint => (i32::MIN as i64, i32::MAX as i64),
            HelperKind::Kstrtobool => return ValueSpec::simple(ValueKind::Bool),
            HelperKind::Scan(fmt) => return ValueSpec::formatted(fmt),
        };
        let dep = derived(block, &[var], false);
        let mut sinks = Vec::new();
        narrow(block, var, &dep, Iv { lo: full.0, hi: full.1 }, &mut sinks);
        let reached: Vec<Iv> = sinks.into_iter().filter(|i| !i.is_empty()).collect();
        let (lo, hi) = if reached.is_empty() {
            full
        } else {
            (
                reached.iter().map(|i| i.lo).min().expect("non-empty"),
                reached.iter().map(|i| i.hi).max().expect("non-empty"),
            )
        };
        return match &h.kind {
            HelperKind::MatchString(opts) => {
                if lo < 0 {
                    ValueSpec::simple(ValueKind::AnyString)
                } else {
                    ValueSpec::string_set(opts[lo as usize..=hi as usize].to_vec())
                }
            }
            HelperKind::Kstrtouint => ValueSpec::range(ValueKind::UintRange, lo, hi),
            _ => ValueSpec::range(ValueKind::IntRange, lo, hi),
        };
    }

    let mut raw_write = false;
    block.for_each_stmt(&mut |s| {
        if let StmtKind::Assign { target, value } = &s.kind {
            raw_write |= !matches!(target, Place::Local(_)) && reads(value, &raw);
        }
    });
    if raw_write {
        ValueSpec::simple(ValueKind::AnyString)
    } else {
        ValueSpec::undetermined("unrecognized validation")
    }
}

/// Closed integer interval; empty when `lo > hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Iv {
    lo: i64,
    hi: i64,
}

impl Iv {
    fn is_empty(&self) -> bool {
        self.lo > self.hi
    }
}

fn const_of(e: &Expr) -> Option<i64> {
    match e {
        Expr::Int(v) => Some(*v),
        Expr::Unary(UnOp::Neg, inner) => const_of(inner).map(i64::wrapping_neg),
        _ => None,
    }
}

fn negate(op: BinOp) -> BinOp {
    match op {
        BinOp::Lt => BinOp::Ge,
        BinOp::Le => BinOp::Gt,
        BinOp::Gt => BinOp::Le,
        BinOp::Ge => BinOp::Lt,
        BinOp::Eq => BinOp::Ne,
        BinOp::Ne => BinOp::Eq,
        other => other,
    }
}

fn mirror(op: BinOp) -> BinOp {
    match op {
        BinOp::Lt => BinOp::Gt,
        BinOp::Le => BinOp::Ge,
        BinOp::Gt => BinOp::Lt,
        BinOp::Ge => BinOp::Le,
        other => other,
    }
}

fn compare(op: BinOp, c: i64, mut iv: Iv) -> Iv {
    match op {
        BinOp::Lt => iv.hi = iv.hi.min(c.saturating_sub(1)),
        BinOp::Le => iv.hi = iv.hi.min(c),
        BinOp::Gt => iv.lo = iv.lo.max(c.saturating_add(1)),
        BinOp::Ge => iv.lo = iv.lo.max(c),
        BinOp::Eq => {
            iv.lo = iv.lo.max(c);
            iv.hi = iv.hi.min(c);
        }
        BinOp::Ne => {
            if c == iv.lo {
                iv.lo = iv.lo.saturating_add(1);
            } else if c == iv.hi {
                iv.hi = iv.hi.saturating_sub(1);
            }
        }
        _ => {}
    }
    iv
}

/// Interval of `var` on the path where `cond` evaluates to `truth`.
fn assume(cond: &Expr, truth: bool, var: &str, iv: Iv) -> Iv {
    match cond {
        Expr::Unary(UnOp::Not, a) => assume(a, !truth, var, iv),
        // Conjunctions are re-applied until stable so that `!=` can trim a
        // bound established by a later conjunct.
        Expr::Binary(op @ (BinOp::And | BinOp::Or), a, b) if truth == (*op == BinOp::And) => {
            let mut cur = iv;
            loop {
                let next = assume(b, truth, var, assume(a, truth, var, cur));
                if next == cur || next.is_empty() {
                    return next;
                }
                cur = next;
            }
        }
        Expr::Binary(op, a, b) if op.is_comparison() => {
            let op = if truth { *op } else { negate(*op) };
            match (&**a, &**b) {
                (Expr::Place(Place::Local(n)), rhs) if n == var => match const_of(rhs) {
                    Some(c) => compare(op, c, iv),
                    None => iv,
                },
                (lhs, Expr::Place(Place::Local(n))) if n == var => match const_of(lhs) {
                    Some(c) => compare(mirror(op), c, iv),
                    None => iv,
                },
                _ => iv,
            }
        }
        // Disjunctions, and anything else, leave the range alone.
        _ => iv,
    }
}

/// True if every path through the block ends in `return`.
fn always_returns(b: &Block) -> bool {
    b.stmts.iter().any(|s| match &s.kind {
        StmtKind::Return(_) => true,
        StmtKind::If {
            then_block,
            else_block: Some(e),
            ..
        } => always_returns(then_block) && always_returns(e),
        _ => false,
    })
}

/// Walk `block` with `var` constrained to `iv`, recording the interval at
/// every field or parameter write of a value derived from `var`.
fn narrow(block: &Block, var: &str, dep: &HashSet<&str>, mut iv: Iv, sinks: &mut Vec<Iv>) {
    for s in &block.stmts {
        match &s.kind {
            StmtKind::Assign { target, value } if !matches!(target, Place::Local(_)) => {
                if reads_locals(value, dep) {
                    sinks.push(iv);
                }
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
                ..
            } => {
                let t = assume(cond, true, var, iv);
                let f = assume(cond, false, var, iv);
                narrow(then_block, var, dep, t, sinks);
                if let Some(e) = else_block {
                    narrow(e, var, dep, f, sinks);
                }
                let then_ret = always_returns(then_block);
                let else_ret = else_block.as_ref().is_some_and(always_returns);
                match (then_ret, else_ret) {
                    (true, true) => return,
                    (true, false) => iv = f,
                    (false, true) => iv = t,
                    (false, false) => {}
                }
            }
            StmtKind::Switch {
                scrutinee,
                cases,
                default,
                ..
            } => {
                let on_var = matches!(scrutinee, Expr::Place(Place::Local(n)) if n == var);
                for c in cases {
                    let civ = if on_var { compare(BinOp::Eq, c.value, iv) } else { iv };
                    narrow(&c.block, var, dep, civ, sinks);
                }
                if let Some(d) = default {
                    narrow(d, var, dep, iv, sinks);
                }
            }
            StmtKind::ListIter { body, .. } | StmtKind::EachByte { body, .. } => {
                narrow(body, var, dep, iv, sinks);
            }
            StmtKind::Return(_) => return,
            _ => {}
        }
    }
}
