//! Canonical pretty-printer. `parse(print_program(p))` yields a program
//! structurally equal to `p`, ids included.

use std::fmt::Write;

use super::ast::*;

pub fn print_program(p: &DmirProgram) -> String {
    let mut out = String::new();
    for b in &p.buses {
        writeln!(out, "bus {b};").unwrap();
    }
    for m in &p.modules {
        out.push('\n');
        print_module(&mut out, m);
    }
    if !p.devices.is_empty() {
        out.push('\n');
    }
    for d in &p.devices {
        write!(out, "device {}: driver={}, parent={}", d.id, d.driver, d.parent).unwrap();
        if let Some(n) = &d.devnode {
            write!(out, ", devnode={}", quote(n)).unwrap();
        }
        out.push_str(";\n");
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn print_module(out: &mut String, m: &ModuleDecl) {
    writeln!(out, "module {} {{", m.name).unwrap();
    for p in &m.params {
        writeln!(out, "  param {}: {} = {};", p.name, p.ptype.as_str(), p.default).unwrap();
    }
    for g in &m.globals {
        writeln!(out, "  global {g}: list;").unwrap();
    }
    for d in &m.drivers {
        print_driver(out, d);
    }
    out.push_str("}\n");
}

fn print_driver(out: &mut String, d: &DriverDecl) {
    write!(out, "  driver {}", d.name).unwrap();
    if d.devnode {
        out.push_str(" devnode");
    }
    out.push_str(" {\n");
    for f in &d.fields {
        write!(out, "    field {}: {}", f.name, f.ftype.as_str()).unwrap();
        if let Some(lit) = &f.default {
            write!(out, " = {lit}").unwrap();
        }
        out.push_str(";\n");
    }
    if let Some(p) = &d.probe {
        indent(out, 2);
        out.push_str("probe ");
        print_block(out, &p.block, 2);
        out.push('\n');
    }
    for m in &d.members {
        print_member(out, m, 2);
    }
    for o in &d.ops {
        let args: Vec<String> = o
            .args
            .iter()
            .map(|a| format!("{}: {}", a.name, a.atype.as_str()))
            .collect();
        write!(out, "    op {}({}) ", o.name, args.join(", ")).unwrap();
        print_block(out, &o.body.block, 2);
        out.push('\n');
    }
    out.push_str("  }\n");
}

fn print_member(out: &mut String, m: &AttrMember, depth: usize) {
    match m {
        AttrMember::Attr(a) => {
            indent(out, depth);
            let mode = match a.mode {
                AttrMode::Rw => "rw",
                AttrMode::Ro => "ro",
            };
            writeln!(out, "attr {} {mode} {{", quote(&a.fname)).unwrap();
            if let Some(s) = &a.store {
                indent(out, depth + 1);
                out.push_str("store ");
                print_block(out, &s.block, depth + 1);
                out.push('\n');
            }
            if let Some(s) = &a.show {
                indent(out, depth + 1);
                out.push_str("show ");
                print_block(out, &s.block, depth + 1);
                out.push('\n');
            }
            indent(out, depth);
            out.push_str("}\n");
        }
        AttrMember::Group(g) => {
            indent(out, depth);
            writeln!(out, "group {} {{", g.name).unwrap();
            for m in &g.members {
                print_member(out, m, depth + 1);
            }
            indent(out, depth);
            out.push_str("}\n");
        }
    }
}

fn print_block(out: &mut String, b: &Block, depth: usize) {
    out.push_str("{\n");
    for s in &b.stmts {
        indent(out, depth + 1);
        print_stmt(out, s, depth + 1);
        out.push('\n');
    }
    indent(out, depth);
    out.push('}');
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    match &s.kind {
        StmtKind::Let { dests, value } => {
            write!(out, "let {} = ", dests.join(", ")).unwrap();
            match value {
                LetValue::Expr(e) => out.push_str(&print_expr(e)),
                LetValue::Helper(h) => {
                    let arg = print_expr(&h.arg);
                    match &h.kind {
                        HelperKind::MatchString(opts) => {
                            let opts: Vec<String> = opts.iter().map(|o| quote(o)).collect();
                            write!(out, "match_string({arg}, [{}])", opts.join(", ")).unwrap();
                        }
                        HelperKind::Scan(fmt) => {
                            write!(out, "scan({arg}, {})", quote(fmt)).unwrap();
                        }
                        k => write!(out, "{}({arg})", k.name()).unwrap(),
                    }
                }
            }
            out.push(';');
        }
        StmtKind::Assign { target, value } => {
            write!(out, "{target} = {};", print_expr(value)).unwrap();
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
            ..
        } => {
            write!(out, "if ({}) ", print_expr(cond)).unwrap();
            print_block(out, then_block, depth);
            if let Some(b) = else_block {
                out.push_str(" else ");
                print_block(out, b, depth);
            }
        }
        StmtKind::Switch {
            scrutinee,
            cases,
            default,
            ..
        } => {
            writeln!(out, "switch ({}) {{", print_expr(scrutinee)).unwrap();
            for c in cases {
                indent(out, depth + 1);
                write!(out, "case {}: ", c.value).unwrap();
                print_block(out, &c.block, depth + 1);
                out.push('\n');
            }
            if let Some(b) = default {
                indent(out, depth + 1);
                out.push_str("default: ");
                print_block(out, b, depth + 1);
                out.push('\n');
            }
            indent(out, depth);
            out.push('}');
        }
        StmtKind::Return(c) => write!(out, "return {};", c.as_str()).unwrap(),
        StmtKind::Lock(n) => write!(out, "lock({n});").unwrap(),
        StmtKind::Unlock(n) => write!(out, "unlock({n});").unwrap(),
        StmtKind::Alloc(p) => write!(out, "alloc({p});").unwrap(),
        StmtKind::Free(p) => write!(out, "free({p});").unwrap(),
        StmtKind::Use(p) => write!(out, "use({p});").unwrap(),
        StmtKind::ListAdd { list, value } => {
            write!(out, "list_add({list}, {});", print_expr(value)).unwrap()
        }
        StmtKind::ListDel { list, value } => {
            write!(out, "list_del({list}, {});", print_expr(value)).unwrap()
        }
        StmtKind::ListIter { list, var, body, .. } => {
            write!(out, "list_iter({list}, {var}) ").unwrap();
            print_block(out, body, depth);
        }
        StmtKind::EachByte {
            source, var, body, ..
        } => {
            write!(out, "each_byte({}, {var}) ", print_expr(source)).unwrap();
            print_block(out, body, depth);
        }
        StmtKind::Yield => out.push_str("yield;"),
    }
}

pub fn print_expr(e: &Expr) -> String {
    expr_prec(e, 0)
}

fn expr_prec(e: &Expr, ctx: u8) -> String {
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Str(s) => quote(s),
        Expr::Null => "null".into(),
        Expr::Buf => "buf".into(),
        Expr::Place(p) => p.to_string(),
        Expr::Unary(op, inner) => {
            let sym = match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            };
            match (op, &**inner) {
                (UnOp::Neg, Expr::Int(v)) if *v >= 0 => format!("-({v})"),
                _ => format!("{sym}{}", expr_prec(inner, 6)),
            }
        }
        Expr::Binary(op, a, b) => {
            let p = op.precedence();
            // Left-associative: the right operand needs parentheses at equal precedence.
            let s = format!("{} {} {}", expr_prec(a, p), op.symbol(), expr_prec(b, p + 1));
            if p < ctx {
                format!("({s})")
            } else {
                s
            }
        }
    }
}
