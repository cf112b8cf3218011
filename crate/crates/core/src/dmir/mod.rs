//! Driver-Model IR: the textual language the simulated kernel is written in.

pub mod ast;
mod cfg;
mod lexer;
mod parser;
mod printer;

use std::collections::{BTreeSet, HashMap, HashSet};

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use ast::*;
pub use cfg::{control_flow_graph, Cfg, CfgEdge, EdgeKind};
pub use parser::{scan_directives, ScanPiece, MAX_GROUP_DEPTH};
pub use printer::print_program;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum DmirError {
    #[error("{line}:{col}: parse error: {msg}")]
    Parse { line: u32, col: u32, msg: String },
    #[error("{line}:{col}: resolve error: {msg}")]
    Resolve { line: u32, col: u32, msg: String },
    #[error("{line}:{col}: type error: {msg}")]
    Type { line: u32, col: u32, msg: String },
}

impl DmirError {
    pub(crate) fn parse(span: Span, msg: impl Into<String>) -> Self {
        DmirError::Parse {
            line: span.line,
            col: span.col,
            msg: msg.into(),
        }
    }

    fn resolve(span: Span, msg: impl Into<String>) -> Self {
        DmirError::Resolve {
            line: span.line,
            col: span.col,
            msg: msg.into(),
        }
    }

    fn type_err(span: Span, msg: impl Into<String>) -> Self {
        DmirError::Type {
            line: span.line,
            col: span.col,
            msg: msg.into(),
        }
    }

    pub fn message(&self) -> &str {
        match self {
            DmirError::Parse { msg, .. }
            | DmirError::Resolve { msg, .. }
            | DmirError::Type { msg, .. } => msg,
        }
    }
}

/// Parse and resolve a DMIR source text.
pub fn parse(source: &str) -> Result<DmirProgram, DmirError> {
    let parsed = parser::Parser::new(source)?.program()?;
    let program = DmirProgram {
        buses: parsed.buses,
        modules: parsed.modules,
        devices: parsed.devices,
        block_count: parsed.block_count,
        edge_count: parsed.edge_count,
        hash: source_hash(source),
    };
    resolve(&program)?;
    Ok(program)
}

pub fn source_hash(source: &str) -> String {
    hex::encode(Sha256::digest(source.as_bytes()))
}

/// All attributes of a driver, depth-first in declaration order.
pub fn flatten_attrs(driver: &DriverDecl) -> Vec<&AttrDecl> {
    fn walk<'a>(members: &'a [AttrMember], out: &mut Vec<&'a AttrDecl>) {
        for m in members {
            match m {
                AttrMember::Attr(a) => out.push(a),
                AttrMember::Group(g) => walk(&g.members, out),
            }
        }
    }
    let mut out = Vec::new();
    walk(&driver.members, &mut out);
    out
}

/// Like [`flatten_attrs`], paired with the group directories leading to each attribute.
pub fn flatten_attrs_with_dirs(driver: &DriverDecl) -> Vec<(Vec<&str>, &AttrDecl)> {
    fn walk<'a>(
        members: &'a [AttrMember],
        dirs: &mut Vec<&'a str>,
        out: &mut Vec<(Vec<&'a str>, &'a AttrDecl)>,
    ) {
        for m in members {
            match m {
                AttrMember::Attr(a) => out.push((dirs.clone(), a)),
                AttrMember::Group(g) => {
                    dirs.push(&g.name);
                    walk(&g.members, dirs, out);
                    dirs.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(&driver.members, &mut Vec::new(), &mut out);
    out
}

fn literal_fits(ftype: FieldType, lit: &Literal) -> bool {
    matches!(
        (ftype, lit),
        (FieldType::Int, Literal::Int(_))
            | (FieldType::Bool, Literal::Bool(_))
            | (FieldType::String, Literal::Str(_))
    ) || matches!((ftype, lit), (FieldType::Uint, Literal::Int(v)) if *v >= 0)
}

fn param_field_type(p: ParamType) -> FieldType {
    match p {
        ParamType::Uint => FieldType::Uint,
        ParamType::Int => FieldType::Int,
        ParamType::Bool => FieldType::Bool,
        ParamType::String => FieldType::String,
    }
}

fn resolve(p: &DmirProgram) -> Result<(), DmirError> {
    let top = Span { line: 1, col: 1 };
    let mut seen = HashSet::new();
    for b in &p.buses {
        if b == "module" {
            return Err(DmirError::resolve(top, "bus name `module` is reserved"));
        }
        if !seen.insert(b.as_str()) {
            return Err(DmirError::resolve(top, format!("duplicate bus `{b}`")));
        }
    }

    let mut module_names = HashSet::new();
    let mut driver_names = HashSet::new();
    let mut globals = HashSet::new();
    let mut all_fields: HashSet<&str> = HashSet::new();
    for m in &p.modules {
        if !module_names.insert(m.name.as_str()) {
            return Err(DmirError::resolve(m.span, format!("duplicate module `{}`", m.name)));
        }
        let mut params = HashSet::new();
        for prm in &m.params {
            if !params.insert(prm.name.as_str()) {
                return Err(DmirError::resolve(
                    prm.span,
                    format!("duplicate param `{}` in module `{}`", prm.name, m.name),
                ));
            }
            if !literal_fits(param_field_type(prm.ptype), &prm.default) {
                return Err(DmirError::type_err(
                    prm.span,
                    format!(
                        "default {} does not match param type {}",
                        prm.default,
                        prm.ptype.as_str()
                    ),
                ));
            }
        }
        for g in &m.globals {
            if !globals.insert(g.as_str()) {
                return Err(DmirError::resolve(m.span, format!("duplicate global `{g}`")));
            }
        }
        for d in &m.drivers {
            if !driver_names.insert(d.name.as_str()) {
                return Err(DmirError::resolve(d.span, format!("duplicate driver `{}`", d.name)));
            }
            all_fields.extend(d.fields.iter().map(|f| f.name.as_str()));
        }
    }

    for (_, d) in p.drivers() {
        let mut fields = HashSet::new();
        for f in &d.fields {
            if !fields.insert(f.name.as_str()) {
                return Err(DmirError::resolve(
                    f.span,
                    format!("duplicate field `{}` in driver `{}`", f.name, d.name),
                ));
            }
            if let Some(lit) = &f.default {
                if matches!(f.ftype, FieldType::Handle | FieldType::List) {
                    return Err(DmirError::type_err(
                        f.span,
                        format!("{} fields take no default", f.ftype.as_str()),
                    ));
                }
                if !literal_fits(f.ftype, lit) {
                    return Err(DmirError::type_err(
                        f.span,
                        format!("default {lit} does not match field type {}", f.ftype.as_str()),
                    ));
                }
            }
        }
        let mut fnames = HashSet::new();
        for a in flatten_attrs(d) {
            if !fnames.insert(a.fname.as_str()) {
                return Err(DmirError::resolve(
                    a.span,
                    format!("duplicate attribute \"{}\" in driver `{}`", a.fname, d.name),
                ));
            }
            if a.mode == AttrMode::Rw && a.store.is_none() {
                return Err(DmirError::resolve(
                    a.span,
                    format!("rw attribute \"{}\" has no store block", a.fname),
                ));
            }
            if a.fname.is_empty() || a.fname.contains('/') {
                return Err(DmirError::resolve(a.span, "attribute file names must be non-empty and contain no `/`"));
            }
        }
        let mut ops = HashSet::new();
        for o in &d.ops {
            if !ops.insert(o.name.as_str()) {
                return Err(DmirError::resolve(
                    o.span,
                    format!("duplicate op `{}` in driver `{}`", o.name, d.name),
                ));
            }
        }
    }

    let scope = ResolveScope {
        program: p,
        globals: &globals,
        all_fields: &all_fields,
    };
    for b in p.bodies() {
        let mut locals: HashSet<&str> = HashSet::new();
        if b.kind == BodyKind::Op {
            let op = b.driver.op(b.name).expect("body came from this driver");
            locals.extend(op.args.iter().map(|a| a.name.as_str()));
        }
        b.body.block.for_each_stmt(&mut |s| match &s.kind {
            StmtKind::Let { dests, .. } => locals.extend(dests.iter().map(String::as_str)),
            StmtKind::ListIter { var, .. } | StmtKind::EachByte { var, .. } => {
                locals.insert(var);
            }
            _ => {}
        });
        let mut res = Ok(());
        b.body.block.for_each_stmt(&mut |s| {
            if res.is_ok() {
                res = scope.check_stmt(b.driver, &locals, s);
            }
        });
        res?;
    }

    let mut ids = HashSet::new();
    let mut devnodes = HashMap::new();
    for dev in &p.devices {
        if !ids.insert(dev.id.as_str()) {
            return Err(DmirError::resolve(dev.span, format!("duplicate device `{}`", dev.id)));
        }
        if p.is_bus(&dev.id) {
            return Err(DmirError::resolve(
                dev.span,
                format!("device `{}` shadows a bus of the same name", dev.id),
            ));
        }
        let Some(driver) = p.driver(&dev.driver) else {
            return Err(DmirError::resolve(dev.span, format!("unknown driver `{}`", dev.driver)));
        };
        match (&dev.devnode, driver.devnode) {
            (Some(_), false) => {
                return Err(DmirError::resolve(
                    dev.span,
                    format!("driver `{}` does not create device nodes", driver.name),
                ))
            }
            (None, true) => {
                return Err(DmirError::resolve(
                    dev.span,
                    format!("driver `{}` requires a devnode name", driver.name),
                ))
            }
            _ => {}
        }
        if let Some(n) = &dev.devnode {
            if n.is_empty() || n.contains('/') || n.contains('#') {
                return Err(DmirError::resolve(dev.span, format!("bad devnode name \"{n}\"")));
            }
            devnodes.entry(n.as_str()).or_insert(dev.id.as_str());
        }
    }
    for dev in &p.devices {
        if !p.is_bus(&dev.parent) && !ids.contains(dev.parent.as_str()) {
            return Err(DmirError::resolve(dev.span, format!("unknown parent `{}`", dev.parent)));
        }
        // Walk up; a program with n devices has no chain longer than n.
        let mut cur = dev.parent.as_str();
        let mut steps = 0;
        while let Some(up) = p.device(cur) {
            if up.id == dev.id || steps > p.devices.len() {
                return Err(DmirError::resolve(dev.span, "parent cycle"));
            }
            cur = &up.parent;
            steps += 1;
        }
    }
    Ok(())
}

struct ResolveScope<'a> {
    program: &'a DmirProgram,
    globals: &'a HashSet<&'a str>,
    all_fields: &'a HashSet<&'a str>,
}

impl ResolveScope<'_> {
    fn check_place(&self, d: &DriverDecl, locals: &HashSet<&str>, pl: &Place, span: Span) -> Result<(), DmirError> {
        match pl {
            Place::Local(n) if !locals.contains(n.as_str()) => {
                Err(DmirError::resolve(span, format!("unknown variable `{n}`")))
            }
            Place::SelfField(f) if d.field(f).is_none() => Err(DmirError::resolve(
                span,
                format!("driver `{}` has no field `{f}`", d.name),
            )),
            Place::ParentField(f) if !self.all_fields.contains(f.as_str()) => {
                Err(DmirError::resolve(span, format!("no driver declares field `{f}`")))
            }
            Place::Param { module, name } => {
                let ok = self
                    .program
                    .module(module)
                    .is_some_and(|m| m.params.iter().any(|p| &p.name == name));
                if ok {
                    Ok(())
                } else {
                    Err(DmirError::resolve(span, format!("unknown param `param.{module}.{name}`")))
                }
            }
            _ => Ok(()),
        }
    }

    fn check_expr(&self, d: &DriverDecl, locals: &HashSet<&str>, e: &Expr, span: Span) -> Result<(), DmirError> {
        let mut res = Ok(());
        e.for_each_place(&mut |pl| {
            if res.is_ok() {
                res = self.check_place(d, locals, pl, span);
            }
        });
        res
    }

    fn check_list(&self, d: &DriverDecl, l: &ScopedName, span: Span) -> Result<(), DmirError> {
        match l {
            ScopedName::Global(n) if !self.globals.contains(n.as_str()) => {
                Err(DmirError::resolve(span, format!("unknown global list `{n}`")))
            }
            ScopedName::SelfDev(n) => match d.field(n) {
                Some(f) if f.ftype == FieldType::List => Ok(()),
                _ => Err(DmirError::resolve(
                    span,
                    format!("driver `{}` has no list field `{n}`", d.name),
                )),
            },
            ScopedName::ParentDev(n) if !self.all_fields.contains(n.as_str()) => {
                Err(DmirError::resolve(span, format!("no driver declares list field `{n}`")))
            }
            _ => Ok(()),
        }
    }

    fn check_stmt(&self, d: &DriverDecl, locals: &HashSet<&str>, s: &Stmt) -> Result<(), DmirError> {
        let sp = s.span;
        match &s.kind {
            StmtKind::Let { value, .. } => match value {
                LetValue::Expr(e) => self.check_expr(d, locals, e, sp),
                LetValue::Helper(h) => self.check_expr(d, locals, &h.arg, sp),
            },
            StmtKind::Assign { target, value } => {
                self.check_place(d, locals, target, sp)?;
                self.check_expr(d, locals, value, sp)
            }
            StmtKind::If { cond, .. } => self.check_expr(d, locals, cond, sp),
            StmtKind::Switch { scrutinee, .. } => self.check_expr(d, locals, scrutinee, sp),
            StmtKind::Alloc(pl) | StmtKind::Free(pl) | StmtKind::Use(pl) => {
                self.check_place(d, locals, pl, sp)
            }
            StmtKind::ListAdd { list, value } | StmtKind::ListDel { list, value } => {
                self.check_list(d, list, sp)?;
                self.check_expr(d, locals, value, sp)
            }
            StmtKind::ListIter { list, .. } => self.check_list(d, list, sp),
            StmtKind::EachByte { source, .. } => self.check_expr(d, locals, source, sp),
            StmtKind::Return(_)
            | StmtKind::Lock(_)
            | StmtKind::Unlock(_)
            | StmtKind::Yield => Ok(()),
        }
    }
}

/// Fields written by any store block of the driver.
pub fn store_written_fields(driver: &DriverDecl) -> BTreeSet<&str> {
    let mut out = BTreeSet::new();
    for a in flatten_attrs(driver) {
        if let Some(st) = &a.store {
            st.block.for_each_stmt(&mut |s| {
                if let StmtKind::Assign {
                    target: Place::SelfField(f),
                    ..
                } = &s.kind
                {
                    out.insert(f.as_str());
                }
            });
        }
    }
    out
}
