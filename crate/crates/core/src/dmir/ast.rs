//! Syntax tree for the Driver-Model IR.
//!
//! Block ids and edge ids are program-wide and assigned in lexical order by
//! the parser. Statement ids are local to the enclosing body (op, store,
//! show or probe) and are what crash titles refer to.

use std::fmt;

use serde::{Deserialize, Serialize};

pub type BlockId = u32;
pub type EdgeId = u32;
pub type StmtId = u32;

/// Source position. Always compares equal so that structurally identical
/// programs compare equal regardless of layout.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

#[derive(Clone, Debug)]
pub struct DmirProgram {
    pub buses: Vec<String>,
    pub modules: Vec<ModuleDecl>,
    pub devices: Vec<DeviceDecl>,
    /// Number of blocks and edges allocated by the parser.
    pub block_count: u32,
    pub edge_count: u32,
    /// Hex sha256 of the source text; the program identity.
    pub hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleDecl {
    pub name: String,
    pub params: Vec<ParamDecl>,
    pub globals: Vec<String>,
    pub drivers: Vec<DriverDecl>,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    Uint,
    Int,
    Bool,
    String,
}

impl ParamType {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamType::Uint => "uint",
            ParamType::Int => "int",
            ParamType::Bool => "bool",
            ParamType::String => "string",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: String,
    pub ptype: ParamType,
    pub default: Literal,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Int(i64),
    Bool(bool),
    Str(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Str(s) => write!(f, "{}", quote(s)),
        }
    }
}

/// Quote a string the way the lexer reads it back.
pub fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldType {
    Uint,
    Int,
    Bool,
    String,
    Handle,
    List,
}

impl FieldType {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldType::Uint => "uint",
            FieldType::Int => "int",
            FieldType::Bool => "bool",
            FieldType::String => "string",
            FieldType::Handle => "handle",
            FieldType::List => "list",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub ftype: FieldType,
    pub default: Option<Literal>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DriverDecl {
    pub name: String,
    pub devnode: bool,
    pub fields: Vec<FieldDecl>,
    pub members: Vec<AttrMember>,
    pub ops: Vec<OpDecl>,
    pub probe: Option<Body>,
    pub span: Span,
}

impl DriverDecl {
    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn op(&self, name: &str) -> Option<&OpDecl> {
        self.ops.iter().find(|o| o.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttrMember {
    Attr(AttrDecl),
    Group(AttrGroupDecl),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttrMode {
    Rw,
    Ro,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttrDecl {
    pub fname: String,
    pub mode: AttrMode,
    pub store: Option<Body>,
    pub show: Option<Body>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttrGroupDecl {
    pub name: String,
    pub members: Vec<AttrMember>,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArgType {
    Uint,
    Int,
    String,
}

impl ArgType {
    pub fn as_str(self) -> &'static str {
        match self {
            ArgType::Uint => "uint",
            ArgType::Int => "int",
            ArgType::String => "string",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArgDecl {
    pub name: String,
    pub atype: ArgType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpDecl {
    pub name: String,
    pub args: Vec<ArgDecl>,
    pub body: Body,
    pub span: Span,
}

/// A top-level code body: an op, a store/show callback or a probe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Body {
    /// Edge recorded whenever the body is entered.
    pub entry_edge: EdgeId,
    pub block: Block,
    pub stmt_count: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub id: BlockId,
    pub stmts: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub id: StmtId,
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Let {
        dests: Vec<String>,
        value: LetValue,
    },
    Assign {
        target: Place,
        value: Expr,
    },
    If {
        cond: Expr,
        then_edge: EdgeId,
        then_block: Block,
        else_edge: EdgeId,
        else_block: Option<Block>,
    },
    Switch {
        scrutinee: Expr,
        cases: Vec<SwitchCase>,
        default_edge: EdgeId,
        default: Option<Block>,
    },
    Return(ReturnCode),
    Lock(ScopedName),
    Unlock(ScopedName),
    Alloc(Place),
    Free(Place),
    Use(Place),
    ListAdd {
        list: ScopedName,
        value: Expr,
    },
    ListDel {
        list: ScopedName,
        value: Expr,
    },
    ListIter {
        list: ScopedName,
        var: String,
        enter_edge: EdgeId,
        exit_edge: EdgeId,
        body: Block,
    },
    EachByte {
        source: Expr,
        var: String,
        enter_edge: EdgeId,
        exit_edge: EdgeId,
        body: Block,
    },
    Yield,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchCase {
    pub value: i64,
    pub edge: EdgeId,
    pub block: Block,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LetValue {
    Expr(Expr),
    Helper(HelperCall),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HelperCall {
    pub kind: HelperKind,
    pub arg: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HelperKind {
    MatchString(Vec<String>),
    Kstrtouint,
    Kstrtoint,
    Kstrtobool,
    Scan(String),
}

impl HelperKind {
    pub fn name(&self) -> &'static str {
        match self {
            HelperKind::MatchString(_) => "match_string",
            HelperKind::Kstrtouint => "kstrtouint",
            HelperKind::Kstrtoint => "kstrtoint",
            HelperKind::Kstrtobool => "kstrtobool",
            HelperKind::Scan(_) => "scan",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReturnCode {
    #[serde(rename = "OK")]
    Ok,
    #[serde(rename = "EINVAL")]
    Einval,
    #[serde(rename = "EIO")]
    Eio,
}

impl ReturnCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReturnCode::Ok => "OK",
            ReturnCode::Einval => "EINVAL",
            ReturnCode::Eio => "EIO",
        }
    }
}

/// Assignable storage location.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Local(String),
    SelfField(String),
    ParentField(String),
    Param { module: String, name: String },
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Local(n) => write!(f, "{n}"),
            Place::SelfField(n) => write!(f, "self.{n}"),
            Place::ParentField(n) => write!(f, "parent.{n}"),
            Place::Param { module, name } => write!(f, "param.{module}.{name}"),
        }
    }
}

/// Name of a lock or list: program-global, or scoped to this/parent device.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScopedName {
    Global(String),
    SelfDev(String),
    ParentDev(String),
}

impl fmt::Display for ScopedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScopedName::Global(n) => write!(f, "global.{n}"),
            ScopedName::SelfDev(n) => write!(f, "self.{n}"),
            ScopedName::ParentDev(n) => write!(f, "parent.{n}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 5,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Str(String),
    Null,
    Buf,
    Place(Place),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Visit every place read by this expression.
    pub fn for_each_place<'a>(&'a self, f: &mut impl FnMut(&'a Place)) {
        match self {
            Expr::Place(p) => f(p),
            Expr::Unary(_, e) => e.for_each_place(f),
            Expr::Binary(_, a, b) => {
                a.for_each_place(f);
                b.for_each_place(f);
            }
            _ => {}
        }
    }

    pub fn reads_buf(&self) -> bool {
        match self {
            Expr::Buf => true,
            Expr::Unary(_, e) => e.reads_buf(),
            Expr::Binary(_, a, b) => a.reads_buf() || b.reads_buf(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeviceDecl {
    pub id: String,
    pub driver: String,
    pub parent: String,
    pub devnode: Option<String>,
    pub span: Span,
}

impl DmirProgram {
    pub fn drivers(&self) -> impl Iterator<Item = (&ModuleDecl, &DriverDecl)> {
        self.modules
            .iter()
            .flat_map(|m| m.drivers.iter().map(move |d| (m, d)))
    }

    pub fn driver(&self, name: &str) -> Option<&DriverDecl> {
        self.drivers().map(|(_, d)| d).find(|d| d.name == name)
    }

    pub fn module_of_driver(&self, name: &str) -> Option<&ModuleDecl> {
        self.drivers().find(|(_, d)| d.name == name).map(|(m, _)| m)
    }

    pub fn module(&self, name: &str) -> Option<&ModuleDecl> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn device(&self, id: &str) -> Option<&DeviceDecl> {
        self.devices.iter().find(|d| d.id == id)
    }

    pub fn is_bus(&self, name: &str) -> bool {
        self.buses.iter().any(|b| b == name)
    }

    /// Every code body in the program with the context it belongs to.
    pub fn bodies(&self) -> Vec<BodyRef<'_>> {
        let mut out = Vec::new();
        for (_, d) in self.drivers() {
            if let Some(p) = &d.probe {
                out.push(BodyRef {
                    driver: d,
                    kind: BodyKind::Probe,
                    name: "probe",
                    body: p,
                });
            }
            for a in super::flatten_attrs(d) {
                if let Some(s) = &a.store {
                    out.push(BodyRef {
                        driver: d,
                        kind: BodyKind::Store,
                        name: &a.fname,
                        body: s,
                    });
                }
                if let Some(s) = &a.show {
                    out.push(BodyRef {
                        driver: d,
                        kind: BodyKind::Show,
                        name: &a.fname,
                        body: s,
                    });
                }
            }
            for o in &d.ops {
                out.push(BodyRef {
                    driver: d,
                    kind: BodyKind::Op,
                    name: &o.name,
                    body: &o.body,
                });
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BodyKind {
    Op,
    Store,
    Show,
    Probe,
}

#[derive(Clone, Copy, Debug)]
pub struct BodyRef<'a> {
    pub driver: &'a DriverDecl,
    pub kind: BodyKind,
    pub name: &'a str,
    pub body: &'a Body,
}

impl Block {
    /// This block and every block nested inside it, preorder.
    pub fn for_each_block<'a>(&'a self, f: &mut impl FnMut(&'a Block)) {
        f(self);
        for s in &self.stmts {
            s.for_each_child_block(|b| b.for_each_block(f));
        }
    }

    /// Every statement in this block and nested blocks, preorder.
    pub fn for_each_stmt<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        for s in &self.stmts {
            f(s);
            s.for_each_child_block(|b| b.for_each_stmt(f));
        }
    }
}

impl Stmt {
    pub fn for_each_child_block<'a>(&'a self, mut f: impl FnMut(&'a Block)) {
        match &self.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                f(then_block);
                if let Some(b) = else_block {
                    f(b);
                }
            }
            StmtKind::Switch { cases, default, .. } => {
                for c in cases {
                    f(&c.block);
                }
                if let Some(b) = default {
                    f(b);
                }
            }
            StmtKind::ListIter { body, .. } | StmtKind::EachByte { body, .. } => f(body),
            _ => {}
        }
    }
}
