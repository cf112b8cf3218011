//! Recursive-descent parser. Ids are handed out while parsing so they follow
//! lexical order: blocks and edges from program-wide counters, statements
//! from a counter reset at the start of every body.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::DmirError;

/// Maximum attribute group nesting.
pub const MAX_GROUP_DEPTH: usize = 8;

pub(super) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_block: BlockId,
    next_edge: EdgeId,
    next_stmt: StmtId,
    in_store: bool,
}

pub(super) struct Parsed {
    pub buses: Vec<String>,
    pub modules: Vec<ModuleDecl>,
    pub devices: Vec<DeviceDecl>,
    pub block_count: u32,
    pub edge_count: u32,
}

type PResult<T> = Result<T, DmirError>;

impl Parser {
    pub fn new(src: &str) -> PResult<Self> {
        Ok(Self {
            toks: tokenize(src)?,
            pos: 0,
            next_block: 0,
            next_edge: 0,
            next_stmt: 0,
            in_store: false,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(DmirError::parse(self.span(), msg))
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Str(s) => format!("string {}", quote(s)),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(format!("expected `{p}`, found {}", Self::describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.advance();
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", Self::describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {}", Self::describe(&t))),
        }
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(s)
            }
            t => self.err(format!("expected string, found {}", Self::describe(&t))),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat_punct("-");
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(if neg { v.wrapping_neg() } else { v })
            }
            t => self.err(format!("expected integer, found {}", Self::describe(&t))),
        }
    }

    fn literal(&mut self) -> PResult<Literal> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(Literal::Str(s))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.advance();
                Ok(Literal::Bool(s == "true"))
            }
            Tok::Int(_) | Tok::Punct("-") => Ok(Literal::Int(self.int()?)),
            t => self.err(format!("expected literal, found {}", Self::describe(&t))),
        }
    }

    fn block_id(&mut self) -> BlockId {
        let id = self.next_block;
        self.next_block += 1;
        id
    }

    fn edge_id(&mut self) -> EdgeId {
        let id = self.next_edge;
        self.next_edge += 1;
        id
    }

    pub fn program(mut self) -> PResult<Parsed> {
        let mut buses = Vec::new();
        let mut modules = Vec::new();
        let mut devices = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(kw) if kw == "bus" => {
                    self.advance();
                    buses.push(self.ident()?);
                    self.expect_punct(";")?;
                }
                Tok::Ident(kw) if kw == "module" => modules.push(self.module()?),
                Tok::Ident(kw) if kw == "device" => devices.push(self.device()?),
                t => {
                    return self.err(format!(
                        "expected `bus`, `module` or `device`, found {}",
                        Self::describe(&t)
                    ))
                }
            }
        }
        Ok(Parsed {
            buses,
            modules,
            devices,
            block_count: self.next_block,
            edge_count: self.next_edge,
        })
    }

    fn module(&mut self) -> PResult<ModuleDecl> {
        let span = self.span();
        self.expect_kw("module")?;
        let name = self.ident()?;
        self.expect_punct("{")?;
        let mut m = ModuleDecl {
            name,
            params: Vec::new(),
            globals: Vec::new(),
            drivers: Vec::new(),
            span,
        };
        while !self.eat_punct("}") {
            match self.peek().clone() {
                Tok::Ident(kw) if kw == "param" => {
                    let span = self.span();
                    self.advance();
                    let name = self.ident()?;
                    self.expect_punct(":")?;
                    let ptype = match self.ident()?.as_str() {
                        "uint" => ParamType::Uint,
                        "int" => ParamType::Int,
                        "bool" => ParamType::Bool,
                        "string" => ParamType::String,
                        other => return self.err(format!("unknown param type `{other}`")),
                    };
                    self.expect_punct("=")?;
                    let default = self.literal()?;
                    self.expect_punct(";")?;
                    m.params.push(ParamDecl {
                        name,
                        ptype,
                        default,
                        span,
                    });
                }
                Tok::Ident(kw) if kw == "global" => {
                    self.advance();
                    let name = self.ident()?;
                    self.expect_punct(":")?;
                    self.expect_kw("list")?;
                    self.expect_punct(";")?;
                    m.globals.push(name);
                }
                Tok::Ident(kw) if kw == "driver" => m.drivers.push(self.driver()?),
                t => {
                    return self.err(format!(
                        "expected `param`, `global` or `driver`, found {}",
                        Self::describe(&t)
                    ))
                }
            }
        }
        Ok(m)
    }

    fn driver(&mut self) -> PResult<DriverDecl> {
        let span = self.span();
        self.expect_kw("driver")?;
        let name = self.ident()?;
        let devnode = if self.is_kw("devnode") {
            self.advance();
            true
        } else {
            false
        };
        self.expect_punct("{")?;
        let mut d = DriverDecl {
            name,
            devnode,
            fields: Vec::new(),
            members: Vec::new(),
            ops: Vec::new(),
            probe: None,
            span,
        };
        while !self.eat_punct("}") {
            match self.peek().clone() {
                Tok::Ident(kw) if kw == "field" => {
                    let span = self.span();
                    self.advance();
                    let name = self.ident()?;
                    self.expect_punct(":")?;
                    let ftype = match self.ident()?.as_str() {
                        "uint" => FieldType::Uint,
                        "int" => FieldType::Int,
                        "bool" => FieldType::Bool,
                        "string" => FieldType::String,
                        "handle" => FieldType::Handle,
                        "list" => FieldType::List,
                        other => return self.err(format!("unknown field type `{other}`")),
                    };
                    let default = if self.eat_punct("=") {
                        Some(self.literal()?)
                    } else {
                        None
                    };
                    self.expect_punct(";")?;
                    d.fields.push(FieldDecl {
                        name,
                        ftype,
                        default,
                        span,
                    });
                }
                Tok::Ident(kw) if kw == "attr" => d.members.push(AttrMember::Attr(self.attr()?)),
                Tok::Ident(kw) if kw == "group" => {
                    d.members.push(AttrMember::Group(self.group(1)?))
                }
                Tok::Ident(kw) if kw == "op" => d.ops.push(self.op()?),
                Tok::Ident(kw) if kw == "probe" => {
                    if d.probe.is_some() {
                        return self.err("duplicate probe block");
                    }
                    self.advance();
                    d.probe = Some(self.body(false)?);
                }
                t => {
                    return self.err(format!(
                        "expected `field`, `attr`, `group`, `op` or `probe`, found {}",
                        Self::describe(&t)
                    ))
                }
            }
        }
        Ok(d)
    }

    fn group(&mut self, depth: usize) -> PResult<AttrGroupDecl> {
        let span = self.span();
        if depth > MAX_GROUP_DEPTH {
            return self.err(format!("attribute groups nested deeper than {MAX_GROUP_DEPTH}"));
        }
        self.expect_kw("group")?;
        let name = self.ident()?;
        self.expect_punct("{")?;
        let mut members = Vec::new();
        while !self.eat_punct("}") {
            if self.is_kw("attr") {
                members.push(AttrMember::Attr(self.attr()?));
            } else if self.is_kw("group") {
                members.push(AttrMember::Group(self.group(depth + 1)?));
            } else {
                return self.err(format!(
                    "expected `attr` or `group`, found {}",
                    Self::describe(self.peek())
                ));
            }
        }
        Ok(AttrGroupDecl {
            name,
            members,
            span,
        })
    }

    fn attr(&mut self) -> PResult<AttrDecl> {
        let span = self.span();
        self.expect_kw("attr")?;
        let fname = self.string()?;
        let mode = match self.ident()?.as_str() {
            "rw" => AttrMode::Rw,
            "ro" => AttrMode::Ro,
            other => return self.err(format!("expected `rw` or `ro`, found `{other}`")),
        };
        self.expect_punct("{")?;
        let mut attr = AttrDecl {
            fname,
            mode,
            store: None,
            show: None,
            span,
        };
        while !self.eat_punct("}") {
            if self.is_kw("store") && attr.store.is_none() {
                self.advance();
                attr.store = Some(self.body(true)?);
            } else if self.is_kw("show") && attr.show.is_none() {
                self.advance();
                attr.show = Some(self.body(false)?);
            } else {
                return self.err(format!(
                    "expected `store` or `show`, found {}",
                    Self::describe(self.peek())
                ));
            }
        }
        Ok(attr)
    }

    fn op(&mut self) -> PResult<OpDecl> {
        let span = self.span();
        self.expect_kw("op")?;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.eat_punct(")") {
            loop {
                let name = self.ident()?;
                self.expect_punct(":")?;
                let atype = match self.ident()?.as_str() {
                    "uint" => ArgType::Uint,
                    "int" => ArgType::Int,
                    "string" => ArgType::String,
                    other => return self.err(format!("unknown argument type `{other}`")),
                };
                args.push(ArgDecl { name, atype });
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        let body = self.body(false)?;
        Ok(OpDecl {
            name,
            args,
            body,
            span,
        })
    }

    fn body(&mut self, store: bool) -> PResult<Body> {
        self.next_stmt = 0;
        self.in_store = store;
        let entry_edge = self.edge_id();
        let block = self.block()?;
        self.in_store = false;
        Ok(Body {
            entry_edge,
            block,
            stmt_count: self.next_stmt,
        })
    }

    fn block(&mut self) -> PResult<Block> {
        self.expect_punct("{")?;
        let id = self.block_id();
        let mut stmts = Vec::new();
        while !self.eat_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.err("unexpected end of input inside block");
            }
            stmts.push(self.stmt()?);
        }
        Ok(Block { id, stmts })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let id = self.next_stmt;
        self.next_stmt += 1;
        let kind = self.stmt_kind()?;
        Ok(Stmt { id, kind, span })
    }

    fn paren_scoped(&mut self) -> PResult<ScopedName> {
        self.expect_punct("(")?;
        let n = self.scoped_name()?;
        self.expect_punct(")")?;
        self.expect_punct(";")?;
        Ok(n)
    }

    fn paren_place(&mut self) -> PResult<Place> {
        self.expect_punct("(")?;
        let p = self.place()?;
        self.expect_punct(")")?;
        self.expect_punct(";")?;
        Ok(p)
    }

    fn stmt_kind(&mut self) -> PResult<StmtKind> {
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            t => return self.err(format!("expected statement, found {}", Self::describe(t))),
        };
        match kw.as_str() {
            "let" => {
                self.advance();
                let mut dests = vec![self.ident()?];
                while self.eat_punct(",") {
                    dests.push(self.ident()?);
                }
                self.expect_punct("=")?;
                let value = if let Some(h) = self.try_helper()? {
                    LetValue::Helper(h)
                } else {
                    if dests.len() != 1 {
                        return self.err("multiple destinations need a `scan` helper");
                    }
                    LetValue::Expr(self.expr()?)
                };
                self.expect_punct(";")?;
                if let LetValue::Helper(HelperCall {
                    kind: HelperKind::Scan(fmt),
                    ..
                }) = &value
                {
                    let n = scan_directives(fmt)
                        .map_err(|m| DmirError::parse(self.span(), m))?
                        .iter()
                        .filter(|p| p.is_directive())
                        .count();
                    if n != dests.len() {
                        return self.err(format!(
                            "scan format has {n} directives but {} destinations",
                            dests.len()
                        ));
                    }
                } else if dests.len() != 1 {
                    return self.err("only `scan` binds multiple destinations");
                }
                Ok(StmtKind::Let { dests, value })
            }
            "if" => self.if_stmt(),
            "switch" => {
                self.advance();
                self.expect_punct("(")?;
                let scrutinee = self.expr()?;
                self.expect_punct(")")?;
                self.expect_punct("{")?;
                let mut cases: Vec<SwitchCase> = Vec::new();
                let mut default = None;
                let mut default_edge = None;
                while !self.eat_punct("}") {
                    if self.is_kw("case") {
                        if default.is_some() {
                            return self.err("`case` after `default`");
                        }
                        self.advance();
                        let value = self.int()?;
                        if cases.iter().any(|c| c.value == value) {
                            return self.err(format!("duplicate case {value}"));
                        }
                        self.expect_punct(":")?;
                        let edge = self.edge_id();
                        let block = self.block()?;
                        cases.push(SwitchCase { value, edge, block });
                    } else if self.is_kw("default") {
                        if default.is_some() {
                            return self.err("duplicate `default`");
                        }
                        self.advance();
                        self.expect_punct(":")?;
                        default_edge = Some(self.edge_id());
                        default = Some(self.block()?);
                    } else {
                        return self.err(format!(
                            "expected `case` or `default`, found {}",
                            Self::describe(self.peek())
                        ));
                    }
                }
                let default_edge = match default_edge {
                    Some(e) => e,
                    None => self.edge_id(),
                };
                Ok(StmtKind::Switch {
                    scrutinee,
                    cases,
                    default_edge,
                    default,
                })
            }
            "return" => {
                self.advance();
                let code = match self.ident()?.as_str() {
                    "OK" => ReturnCode::Ok,
                    "EINVAL" => ReturnCode::Einval,
                    "EIO" => ReturnCode::Eio,
                    other => return self.err(format!("unknown return code `{other}`")),
                };
                self.expect_punct(";")?;
                Ok(StmtKind::Return(code))
            }
            "lock" => {
                self.advance();
                Ok(StmtKind::Lock(self.paren_scoped()?))
            }
            "unlock" => {
                self.advance();
                Ok(StmtKind::Unlock(self.paren_scoped()?))
            }
            "alloc" => {
                self.advance();
                Ok(StmtKind::Alloc(self.paren_place()?))
            }
            "free" => {
                self.advance();
                Ok(StmtKind::Free(self.paren_place()?))
            }
            "use" => {
                self.advance();
                Ok(StmtKind::Use(self.paren_place()?))
            }
            "list_add" | "list_del" => {
                self.advance();
                self.expect_punct("(")?;
                let list = self.scoped_name()?;
                self.expect_punct(",")?;
                let value = self.expr()?;
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                Ok(if kw == "list_add" {
                    StmtKind::ListAdd { list, value }
                } else {
                    StmtKind::ListDel { list, value }
                })
            }
            "list_iter" => {
                self.advance();
                self.expect_punct("(")?;
                let list = self.scoped_name()?;
                self.expect_punct(",")?;
                let var = self.ident()?;
                self.expect_punct(")")?;
                let enter_edge = self.edge_id();
                let exit_edge = self.edge_id();
                let body = self.block()?;
                Ok(StmtKind::ListIter {
                    list,
                    var,
                    enter_edge,
                    exit_edge,
                    body,
                })
            }
            "each_byte" => {
                self.advance();
                self.expect_punct("(")?;
                let source = self.expr()?;
                self.expect_punct(",")?;
                let var = self.ident()?;
                self.expect_punct(")")?;
                let enter_edge = self.edge_id();
                let exit_edge = self.edge_id();
                let body = self.block()?;
                Ok(StmtKind::EachByte {
                    source,
                    var,
                    enter_edge,
                    exit_edge,
                    body,
                })
            }
            "yield" => {
                self.advance();
                self.expect_punct(";")?;
                Ok(StmtKind::Yield)
            }
            _ => {
                let target = self.place()?;
                self.expect_punct("=")?;
                if self.try_helper_name().is_some() {
                    return self.err("helper calls must be bound with `let`");
                }
                let value = self.expr()?;
                self.expect_punct(";")?;
                Ok(StmtKind::Assign { target, value })
            }
        }
    }

    fn if_stmt(&mut self) -> PResult<StmtKind> {
        self.expect_kw("if")?;
        self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_punct(")")?;
        let then_edge = self.edge_id();
        let then_block = self.block()?;
        let else_edge = self.edge_id();
        let else_block = if self.is_kw("else") {
            self.advance();
            if self.is_kw("if") {
                // `else if` is sugar for an else block holding one if.
                let id = self.block_id();
                let span = self.span();
                let sid = self.next_stmt;
                self.next_stmt += 1;
                let inner = self.if_stmt()?;
                Some(Block {
                    id,
                    stmts: vec![Stmt {
                        id: sid,
                        kind: inner,
                        span,
                    }],
                })
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(StmtKind::If {
            cond,
            then_edge,
            then_block,
            else_edge,
            else_block,
        })
    }

    fn try_helper_name(&self) -> Option<&'static str> {
        match self.peek() {
            Tok::Ident(s) if matches!(self.peek_at(1), Tok::Punct("(")) => match s.as_str() {
                "match_string" => Some("match_string"),
                "kstrtouint" => Some("kstrtouint"),
                "kstrtoint" => Some("kstrtoint"),
                "kstrtobool" => Some("kstrtobool"),
                "scan" => Some("scan"),
                _ => None,
            },
            _ => None,
        }
    }

    fn try_helper(&mut self) -> PResult<Option<HelperCall>> {
        let Some(name) = self.try_helper_name() else {
            return Ok(None);
        };
        if !self.in_store {
            return self.err(format!("helper `{name}` used outside a store block"));
        }
        self.advance();
        self.expect_punct("(")?;
        let arg = self.expr()?;
        let kind = match name {
            "match_string" => {
                self.expect_punct(",")?;
                self.expect_punct("[")?;
                let mut strings = Vec::new();
                if !self.eat_punct("]") {
                    loop {
                        strings.push(self.string()?);
                        if self.eat_punct("]") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                if strings.is_empty() {
                    return self.err("match_string needs at least one candidate");
                }
                HelperKind::MatchString(strings)
            }
            "scan" => {
                self.expect_punct(",")?;
                let fmt = self.string()?;
                scan_directives(&fmt).map_err(|m| DmirError::parse(self.span(), m))?;
                HelperKind::Scan(fmt)
            }
            "kstrtouint" => HelperKind::Kstrtouint,
            "kstrtoint" => HelperKind::Kstrtoint,
            _ => HelperKind::Kstrtobool,
        };
        self.expect_punct(")")?;
        Ok(Some(HelperCall { kind, arg }))
    }

    fn scoped_name(&mut self) -> PResult<ScopedName> {
        let head = self.ident()?;
        self.expect_punct(".")?;
        let name = self.ident()?;
        match head.as_str() {
            "global" => Ok(ScopedName::Global(name)),
            "self" => Ok(ScopedName::SelfDev(name)),
            "parent" => Ok(ScopedName::ParentDev(name)),
            other => self.err(format!("expected `global`, `self` or `parent`, found `{other}`")),
        }
    }

    fn place(&mut self) -> PResult<Place> {
        let head = self.ident()?;
        match head.as_str() {
            "self" => {
                self.expect_punct(".")?;
                Ok(Place::SelfField(self.ident()?))
            }
            "parent" => {
                self.expect_punct(".")?;
                Ok(Place::ParentField(self.ident()?))
            }
            "param" => {
                self.expect_punct(".")?;
                let module = self.ident()?;
                self.expect_punct(".")?;
                let name = self.ident()?;
                Ok(Place::Param { module, name })
            }
            "buf" | "true" | "false" | "null" | "global" => {
                self.err(format!("`{head}` is not assignable"))
            }
            _ => Ok(Place::Local(head)),
        }
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn bin_op(&self) -> Option<BinOp> {
        let Tok::Punct(p) = self.peek() else {
            return None;
        };
        Some(match *p {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Mod,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.bin_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_punct("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.eat_punct("-") {
            if let Tok::Int(v) = self.peek().clone() {
                self.advance();
                return Ok(Expr::Int(v.wrapping_neg()));
            }
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(Expr::Int(v))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Str(s))
            }
            Tok::Punct("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) => match s.as_str() {
                "true" | "false" => {
                    self.advance();
                    Ok(Expr::Bool(s == "true"))
                }
                "null" => {
                    self.advance();
                    Ok(Expr::Null)
                }
                "buf" => {
                    if !self.in_store {
                        return self.err("`buf` is only defined inside store blocks");
                    }
                    self.advance();
                    Ok(Expr::Buf)
                }
                _ => {
                    if self.try_helper_name().is_some() {
                        return self.err("helper calls must be bound with `let`");
                    }
                    Ok(Expr::Place(self.place()?))
                }
            },
            t => self.err(format!("expected expression, found {}", Self::describe(&t))),
        }
    }

    fn device(&mut self) -> PResult<DeviceDecl> {
        let span = self.span();
        self.expect_kw("device")?;
        let id = self.ident()?;
        self.expect_punct(":")?;
        self.expect_kw("driver")?;
        self.expect_punct("=")?;
        let driver = self.ident()?;
        self.expect_punct(",")?;
        self.expect_kw("parent")?;
        self.expect_punct("=")?;
        let parent = self.ident()?;
        let devnode = if self.eat_punct(",") {
            self.expect_kw("devnode")?;
            self.expect_punct("=")?;
            Some(self.string()?)
        } else {
            None
        };
        self.expect_punct(";")?;
        Ok(DeviceDecl {
            id,
            driver,
            parent,
            devnode,
            span,
        })
    }
}

/// A `scan` format directive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScanPiece {
    Lit(char),
    Uint,
    Int,
    Str,
}

/// Split a scan format into literal characters and `%u`/`%d`/`%s` directives.
pub fn scan_directives(fmt: &str) -> Result<Vec<ScanPiece>, String> {
    let mut out = Vec::new();
    let mut it = fmt.chars();
    while let Some(c) = it.next() {
        if c != '%' {
            out.push(ScanPiece::Lit(c));
            continue;
        }
        match it.next() {
            Some('u') => out.push(ScanPiece::Uint),
            Some('d') => out.push(ScanPiece::Int),
            Some('s') => out.push(ScanPiece::Str),
            Some('%') => out.push(ScanPiece::Lit('%')),
            other => {
                return Err(format!(
                    "unsupported scan directive `%{}`",
                    other.map(String::from).unwrap_or_default()
                ))
            }
        }
    }
    Ok(out)
}

impl ScanPiece {
    pub fn is_directive(&self) -> bool {
        !matches!(self, ScanPiece::Lit(_))
    }
}
