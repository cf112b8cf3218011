//! Small-step interpreter with cooperative threads.
//!
//! A thread pauses at scheduling points: the start of every call, every
//! `yield`, before every `lock`, and before every helper call. Pausing hands
//! control back to the scheduler, which picks the next thread to resume.

use std::collections::HashMap;

use crate::case::{Action, ArgValue, Call};
use crate::dmir::{
    ArgType, BinOp, Block, DmirProgram, DriverDecl, EdgeId, Expr, HelperKind, LetValue, ParamType, Place,
    ReturnCode, ScopedName, Stmt, StmtId, StmtKind, UnOp,
};

use super::sched::{Scheduler, TraceEntry};
use super::sysfs::{wildcard_match, NodeKind, Vfs};
use super::{helpers, BugReport, BugType, CallStatus, Layout, Runtime, Status, Value};

/// Upper bound on interpreter steps per execution.
const FUEL: u64 = 1_000_000;

#[derive(Clone, Copy, Debug)]
pub(crate) enum Job<'p> {
    Call(&'p Call),
    Probe(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct LockKey<'p> {
    device: Option<usize>,
    name: &'p str,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ListKey {
    Global(usize),
    Field(usize, usize),
}

enum Frame<'p> {
    Block {
        block: &'p Block,
        pc: usize,
    },
    /// Loop over a snapshot; with a list key, elements removed from the
    /// live list since the snapshot are skipped.
    Iter {
        list: Option<ListKey>,
        items: Vec<i64>,
        pos: usize,
        var: &'p str,
        body: &'p Block,
        enter: EdgeId,
        exit: EdgeId,
    },
}

#[derive(Clone, Copy)]
enum Finish {
    Call,
    /// Parameter write of `syz_mod_dev`; the device open follows.
    ModDev { call: u32, device: usize },
    Probe,
}

struct Activation<'p> {
    device: usize,
    driver: &'p DriverDecl,
    name: &'p str,
    frames: Vec<Frame<'p>>,
    locals: Vec<(&'p str, Value)>,
    buf: Option<&'p str>,
    finish: Finish,
    /// Statement being executed, for fault locations.
    stmt: StmtId,
}

impl<'p> Activation<'p> {
    fn set_local(&mut self, name: &'p str, v: Value) {
        match self.locals.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = v,
            None => self.locals.push((name, v)),
        }
    }

    fn bug(&self, t: BugType) -> Fault {
        Fault::Bug(BugReport::new(t, &self.driver.name, self.name, self.stmt))
    }
}

struct Thread<'p> {
    jobs: Vec<Job<'p>>,
    next: usize,
    act: Option<Activation<'p>>,
    /// Set when the scheduler resumes the thread; consumed by the first
    /// scheduling point it crosses.
    passed: bool,
    waiting: Option<(LockKey<'p>, StmtId)>,
    statuses: Vec<CallStatus>,
}

impl Thread<'_> {
    fn done(&self) -> bool {
        self.act.is_none() && self.next >= self.jobs.len()
    }
}

pub(crate) enum Fault {
    Bug(BugReport),
    Engine(String),
}

fn engine<T>(msg: impl Into<String>) -> Result<T, Fault> {
    Err(Fault::Engine(msg.into()))
}

enum Flow {
    Continue,
    Pause,
    Return(ReturnCode),
}

pub(crate) struct MachineOutput {
    pub verdict: Option<BugReport>,
    pub engine_error: Option<String>,
    pub statuses: Vec<Vec<CallStatus>>,
    pub trace: Vec<TraceEntry>,
    pub steps: u64,
}

pub(crate) struct Machine<'p, 'r> {
    prog: &'p DmirProgram,
    layout: &'p Layout,
    vfs: &'p Vfs,
    rt: &'r mut Runtime,
    sched: &'r mut dyn Scheduler,
    threads: Vec<Thread<'p>>,
    locks: Vec<(LockKey<'p>, usize)>,
    fds: HashMap<u32, usize>,
    trace: Vec<TraceEntry>,
    steps: u64,
}

pub(crate) fn match_devnodes(layout: &Layout, pattern: &str) -> Vec<usize> {
    if !pattern.contains('#') {
        return layout
            .devnodes
            .binary_search_by(|(p, _)| p.as_str().cmp(pattern))
            .map(|i| vec![layout.devnodes[i].1])
            .unwrap_or_default();
    }
    layout
        .devnodes
        .iter()
        .filter(|(p, _)| wildcard_match(pattern, p))
        .map(|(_, d)| *d)
        .collect()
}

fn match_sys_files<'l>(layout: &'l Layout, pattern: &str) -> Vec<&'l str> {
    if !pattern.contains('#') {
        return match layout.sys_files.binary_search_by(|p| p.as_str().cmp(pattern)) {
            Ok(i) => vec![layout.sys_files[i].as_str()],
            Err(_) => Vec::new(),
        };
    }
    layout
        .sys_files
        .iter()
        .filter(|p| wildcard_match(pattern, p))
        .map(String::as_str)
        .collect()
}

fn truthy(v: &Value) -> Result<bool, Fault> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Int(i) => Ok(*i != 0),
        other => engine(format!("value {other} used as a condition")),
    }
}

fn int(v: Value) -> Result<i64, Fault> {
    match v {
        Value::Int(i) => Ok(i),
        other => engine(format!("expected an integer, got {other}")),
    }
}

fn parse_param(ptype: ParamType, s: &str) -> Option<Value> {
    match ptype {
        ParamType::Uint => helpers::kstrtouint(s).map(|v| Value::Int(v as i64)),
        ParamType::Int => helpers::kstrtoint(s).map(|v| Value::Int(v as i64)),
        ParamType::Bool => helpers::kstrtobool(s).map(Value::Bool),
        ParamType::String => Some(Value::Str(s.to_string())),
    }
}

impl<'p, 'r> Machine<'p, 'r> {
    pub fn new(
        prog: &'p DmirProgram,
        layout: &'p Layout,
        vfs: &'p Vfs,
        rt: &'r mut Runtime,
        sched: &'r mut dyn Scheduler,
        jobs: Vec<Vec<Job<'p>>>,
    ) -> Self {
        let threads = jobs
            .into_iter()
            .map(|jobs| Thread {
                jobs,
                next: 0,
                act: None,
                passed: false,
                waiting: None,
                statuses: Vec::new(),
            })
            .collect();
        Self {
            prog,
            layout,
            vfs,
            rt,
            sched,
            threads,
            locks: Vec::new(),
            fds: HashMap::new(),
            trace: Vec::new(),
            steps: 0,
        }
    }

    fn holder(&self, k: LockKey<'p>) -> Option<usize> {
        self.locks.iter().find(|(l, _)| *l == k).map(|(_, t)| *t)
    }

    pub fn run(mut self) -> MachineOutput {
        let mut runnable = Vec::with_capacity(self.threads.len());
        let stop = loop {
            runnable.clear();
            let mut live = false;
            for (i, t) in self.threads.iter().enumerate() {
                if t.done() {
                    continue;
                }
                live = true;
                match t.waiting {
                    Some((k, _)) if self.holder(k).is_some() => {}
                    _ => runnable.push(i),
                }
            }
            if !live {
                break None;
            }
            if runnable.is_empty() {
                break Some(self.deadlock());
            }
            let t = if runnable.len() == 1 {
                runnable[0]
            } else {
                let i = self.sched.choose_thread(&runnable).min(runnable.len() - 1);
                self.trace.push(TraceEntry::Thread { thread: runnable[i] });
                runnable[i]
            };
            self.threads[t].passed = true;
            if let Err(f) = self.run_thread(t) {
                break Some(f);
            }
        };

        let mut statuses = Vec::with_capacity(self.threads.len());
        for th in &mut self.threads {
            let calls = th.jobs.iter().filter(|j| matches!(j, Job::Call(_))).count();
            let mut st = std::mem::take(&mut th.statuses);
            if th.act.is_some() && st.len() < calls {
                st.push(CallStatus::plain(Status::Interrupted));
            }
            while st.len() < calls {
                st.push(CallStatus::plain(Status::NotRun));
            }
            statuses.push(st);
        }
        let (verdict, engine_error) = match stop {
            None => (None, None),
            Some(Fault::Bug(b)) => (Some(b), None),
            Some(Fault::Engine(e)) => (None, Some(e)),
        };
        MachineOutput {
            verdict,
            engine_error,
            statuses,
            trace: self.trace,
            steps: self.steps,
        }
    }

    fn deadlock(&self) -> Fault {
        let (t, stmt) = self
            .threads
            .iter()
            .enumerate()
            .find_map(|(i, t)| t.waiting.map(|(_, s)| (i, s)))
            .expect("a live thread with nothing runnable is waiting");
        let act = self.threads[t].act.as_ref().expect("waiting threads are inside a call");
        Fault::Bug(BugReport::new(BugType::Deadlock, &act.driver.name, act.name, stmt))
    }

    fn run_thread(&mut self, t: usize) -> Result<(), Fault> {
        loop {
            self.steps += 1;
            if self.steps > FUEL {
                return engine("step limit exceeded");
            }
            if self.threads[t].act.is_none() {
                let th = &mut self.threads[t];
                if th.next >= th.jobs.len() || !th.passed {
                    return Ok(());
                }
                th.passed = false;
                let job = th.jobs[th.next];
                th.next += 1;
                self.start(t, job)?;
                continue;
            }
            let mut act = self.threads[t].act.take().expect("checked above");
            let flow = self.step(t, &mut act);
            match flow {
                Ok(Flow::Continue) => self.threads[t].act = Some(act),
                Ok(Flow::Pause) => {
                    self.threads[t].act = Some(act);
                    return Ok(());
                }
                Ok(Flow::Return(code)) => self.finish(t, &act, code),
                Err(f) => {
                    self.threads[t].act = Some(act);
                    return Err(f);
                }
            }
        }
    }

    fn status(&mut self, t: usize, s: Status) {
        self.threads[t].statuses.push(CallStatus::plain(s));
    }

    fn pick(&mut self, n: usize) -> usize {
        if n <= 1 {
            return 0;
        }
        let i = self.sched.pick(n).min(n - 1);
        self.trace.push(TraceEntry::Pick { index: i, of: n });
        i
    }

    fn driver(&self, device: usize) -> &'p DriverDecl {
        let dl = &self.layout.drivers[self.layout.device_driver[device]];
        &self.prog.modules[dl.module].drivers[dl.index]
    }

    fn activation(
        &mut self,
        device: usize,
        name: &'p str,
        body: &'p crate::dmir::Body,
        buf: Option<&'p str>,
        finish: Finish,
    ) -> Activation<'p> {
        self.rt.cover(body.entry_edge);
        Activation {
            device,
            driver: self.driver(device),
            name,
            frames: vec![Frame::Block {
                block: &body.block,
                pc: 0,
            }],
            locals: Vec::new(),
            buf,
            finish,
            stmt: 0,
        }
    }

    fn start(&mut self, t: usize, job: Job<'p>) -> Result<(), Fault> {
        let call = match job {
            Job::Probe(dev) => {
                let body = self.driver(dev).probe.as_ref().expect("probe jobs target drivers with probes");
                let act = self.activation(dev, "probe", body, None, Finish::Probe);
                self.threads[t].act = Some(act);
                return Ok(());
            }
            Job::Call(c) => c,
        };
        match &call.action {
            Action::OpenDev { path, .. } => {
                let m = match_devnodes(self.layout, path);
                if m.is_empty() {
                    self.status(t, Status::Enoent);
                } else {
                    let i = self.pick(m.len());
                    self.fds.insert(call.id, m[i]);
                    self.status(t, Status::Ok);
                }
            }
            Action::Op { fd, op, args } => {
                let Some(&dev) = self.fds.get(fd) else {
                    self.status(t, Status::Ebadf);
                    return Ok(());
                };
                let Some(decl) = self.driver(dev).op(op) else {
                    self.status(t, Status::Enoent);
                    return Ok(());
                };
                let ok = decl.args.len() == args.len()
                    && decl.args.iter().zip(args).all(|(d, a)| match (d.atype, a) {
                        (ArgType::Uint, ArgValue::Int(v)) => *v >= 0,
                        (ArgType::Int, ArgValue::Int(_)) => true,
                        (ArgType::String, ArgValue::Str(_)) => true,
                        _ => false,
                    });
                if !ok {
                    self.status(t, Status::Einval);
                    return Ok(());
                }
                let mut act = self.activation(dev, &decl.name, &decl.body, None, Finish::Call);
                for (d, a) in decl.args.iter().zip(args) {
                    let v = match a {
                        ArgValue::Int(v) => Value::Int(*v),
                        ArgValue::Str(s) => Value::Str(s.clone()),
                    };
                    act.set_local(&d.name, v);
                }
                self.threads[t].act = Some(act);
            }
            Action::WriteParam { path, value } => {
                let m = match_sys_files(self.layout, path);
                if m.is_empty() {
                    self.status(t, Status::Enoent);
                    return Ok(());
                }
                let i = self.pick(m.len());
                let file = m[i];
                if let Some(s) = self.write_file(t, file, value, Finish::Call)? {
                    self.status(t, s);
                }
            }
            Action::SyzModDev {
                param_path,
                value,
                dev_path,
                rng_seed,
                ..
            } => {
                let devs = match_devnodes(self.layout, dev_path);
                if devs.is_empty() {
                    self.threads[t].statuses.push(CallStatus {
                        status: Status::Enoent,
                        param_status: Some(Status::Enoent),
                    });
                    return Ok(());
                }
                let dev = devs[(*rng_seed % devs.len() as u64) as usize];
                let files: Vec<&str> = match_sys_files(self.layout, param_path)
                    .into_iter()
                    .filter(|f| self.file_belongs_to(f, dev))
                    .collect();
                let pstatus = if files.is_empty() {
                    Some(Status::Enoent)
                } else {
                    let f = files[(*rng_seed % files.len() as u64) as usize];
                    self.write_file(t, f, value, Finish::ModDev { call: call.id, device: dev })?
                };
                if let Some(ps) = pstatus {
                    self.fds.insert(call.id, dev);
                    self.threads[t].statuses.push(CallStatus {
                        status: Status::Ok,
                        param_status: Some(ps),
                    });
                }
            }
        }
        Ok(())
    }

    /// True if `path` is an attribute of `dev` or a parameter of its module.
    fn file_belongs_to(&self, path: &str, dev: usize) -> bool {
        let node = self.vfs.node(self.vfs.lookup(path).expect("listed files exist"));
        match node.kind {
            NodeKind::AttrFile { device, .. } => device == dev,
            NodeKind::ParamFile { param } => {
                self.layout.params[param].module == self.layout.tree.nodes[dev].module
            }
            _ => false,
        }
    }

    /// Write a sysfs file. Returns the status, or `None` when a store block
    /// was started and will report on completion.
    fn write_file(&mut self, t: usize, path: &str, value: &'p str, finish: Finish) -> Result<Option<Status>, Fault> {
        let node = self.vfs.node(self.vfs.lookup(path).expect("listed files exist"));
        match node.kind {
            NodeKind::ParamFile { param } => {
                let slot = &self.layout.params[param];
                Ok(Some(match parse_param(slot.ptype, value) {
                    Some(v) => {
                        self.rt.params[param] = v;
                        Status::Ok
                    }
                    None => Status::Einval,
                }))
            }
            NodeKind::AttrFile {
                device,
                attr,
                writable,
            } => {
                if !writable {
                    return Ok(Some(Status::Eio));
                }
                let a = crate::dmir::flatten_attrs(self.driver(device))[attr];
                let body = a.store.as_ref().expect("rw attrs have a store block");
                let act = self.activation(device, &a.fname, body, Some(value), finish);
                self.threads[t].act = Some(act);
                Ok(None)
            }
            _ => Ok(Some(Status::Eio)),
        }
    }

    fn finish(&mut self, t: usize, act: &Activation<'p>, code: ReturnCode) {
        let s = Status::from_code(code);
        match act.finish {
            Finish::Call => self.status(t, s),
            Finish::ModDev { call, device } => {
                self.fds.insert(call, device);
                self.threads[t].statuses.push(CallStatus {
                    status: Status::Ok,
                    param_status: Some(s),
                });
            }
            Finish::Probe => {}
        }
    }

    fn step(&mut self, t: usize, act: &mut Activation<'p>) -> Result<Flow, Fault> {
        let Some(frame) = act.frames.last_mut() else {
            return Ok(Flow::Return(ReturnCode::Ok));
        };
        match frame {
            Frame::Block { block, pc } => {
                let block: &'p Block = block;
                let Some(stmt) = block.stmts.get(*pc) else {
                    act.frames.pop();
                    return Ok(Flow::Continue);
                };
                let point = matches!(
                    stmt.kind,
                    StmtKind::Yield
                        | StmtKind::Lock(_)
                        | StmtKind::Let {
                            value: LetValue::Helper(_),
                            ..
                        }
                );
                if point {
                    let th = &mut self.threads[t];
                    if !th.passed {
                        return Ok(Flow::Pause);
                    }
                    th.passed = false;
                }
                *pc += 1;
                act.stmt = stmt.id;
                self.exec(t, act, stmt)
            }
            Frame::Iter {
                list,
                items,
                pos,
                var,
                body,
                enter,
                exit,
            } => {
                let (list, var, body, enter, exit) = (*list, *var, *body, *enter, *exit);
                while *pos < items.len() {
                    let el = items[*pos];
                    *pos += 1;
                    if list.is_none_or(|k| self.list_ref(k).contains(&el)) {
                        self.rt.cover(enter);
                        act.set_local(var, Value::Int(el));
                        act.frames.push(Frame::Block { block: body, pc: 0 });
                        return Ok(Flow::Continue);
                    }
                }
                self.rt.cover(exit);
                act.frames.pop();
                Ok(Flow::Continue)
            }
        }
    }

    fn list_ref(&self, k: ListKey) -> &Vec<i64> {
        match k {
            ListKey::Global(g) => &self.rt.globals[g],
            ListKey::Field(d, f) => match &self.rt.fields[d][f] {
                Value::List(l) => l,
                _ => unreachable!("list keys only name list fields"),
            },
        }
    }

    fn list_mut(&mut self, k: ListKey) -> &mut Vec<i64> {
        match k {
            ListKey::Global(g) => &mut self.rt.globals[g],
            ListKey::Field(d, f) => match &mut self.rt.fields[d][f] {
                Value::List(l) => l,
                _ => unreachable!("list keys only name list fields"),
            },
        }
    }

    fn parent_of(&self, act: &Activation<'p>) -> Result<usize, Fault> {
        self.layout.tree.nodes[act.device]
            .parent
            .ok_or_else(|| act.bug(BugType::Npd))
    }

    fn field_slot(&self, dev: usize, name: &str) -> Result<usize, Fault> {
        match self.layout.drivers[self.layout.device_driver[dev]].fields.get(name) {
            Some(&i) => Ok(i),
            None => engine(format!(
                "device `{}` has no field `{name}`",
                self.layout.tree.nodes[dev].id
            )),
        }
    }

    fn list_key(&self, act: &Activation<'p>, n: &ScopedName) -> Result<ListKey, Fault> {
        let (dev, name) = match n {
            ScopedName::Global(g) => {
                return Ok(ListKey::Global(self.layout.globals[g.as_str()]));
            }
            ScopedName::SelfDev(f) => (act.device, f),
            ScopedName::ParentDev(f) => (self.parent_of(act)?, f),
        };
        let i = self.field_slot(dev, name)?;
        match self.rt.fields[dev][i] {
            Value::List(_) => Ok(ListKey::Field(dev, i)),
            _ => engine(format!("field `{name}` is not a list")),
        }
    }

    fn lock_key(&self, act: &Activation<'p>, n: &'p ScopedName) -> Result<LockKey<'p>, Fault> {
        Ok(match n {
            ScopedName::Global(g) => LockKey { device: None, name: g },
            ScopedName::SelfDev(f) => LockKey {
                device: Some(act.device),
                name: f,
            },
            ScopedName::ParentDev(f) => LockKey {
                device: Some(self.parent_of(act)?),
                name: f,
            },
        })
    }

    fn param_slot(&self, module: &str, name: &str) -> usize {
        self.layout.param_index[module][name]
    }

    fn read(&self, act: &Activation<'p>, p: &Place) -> Result<Value, Fault> {
        match p {
            Place::Local(n) => match act.locals.iter().find(|(l, _)| *l == n) {
                Some((_, v)) => Ok(v.clone()),
                None => engine(format!("variable `{n}` read before assignment")),
            },
            Place::SelfField(f) => Ok(self.rt.fields[act.device][self.field_slot(act.device, f)?].clone()),
            Place::ParentField(f) => {
                let d = self.parent_of(act)?;
                Ok(self.rt.fields[d][self.field_slot(d, f)?].clone())
            }
            Place::Param { module, name } => Ok(self.rt.params[self.param_slot(module, name)].clone()),
        }
    }

    fn write(&mut self, act: &mut Activation<'p>, p: &'p Place, v: Value) -> Result<(), Fault> {
        let slot = match p {
            Place::Local(n) => {
                act.set_local(n, v);
                return Ok(());
            }
            Place::SelfField(f) => {
                let i = self.field_slot(act.device, f)?;
                &mut self.rt.fields[act.device][i]
            }
            Place::ParentField(f) => {
                let d = self.parent_of(act)?;
                let i = self.field_slot(d, f)?;
                &mut self.rt.fields[d][i]
            }
            Place::Param { module, name } => {
                let i = self.param_slot(module, name);
                &mut self.rt.params[i]
            }
        };
        if !slot.same_kind(&v) {
            return engine(format!("cannot store {v} into {p} holding {slot}"));
        }
        *slot = v;
        Ok(())
    }

    fn eval(&self, act: &Activation<'p>, e: &Expr) -> Result<Value, Fault> {
        Ok(match e {
            Expr::Int(v) => Value::Int(*v),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Null => Value::Int(0),
            Expr::Buf => match act.buf {
                Some(b) => Value::Str(b.to_string()),
                None => return engine("`buf` outside a store block"),
            },
            Expr::Place(p) => self.read(act, p)?,
            Expr::Unary(UnOp::Neg, a) => Value::Int(int(self.eval(act, a)?)?.wrapping_neg()),
            Expr::Unary(UnOp::Not, a) => Value::Bool(!truthy(&self.eval(act, a)?)?),
            Expr::Binary(BinOp::And, a, b) => {
                Value::Bool(truthy(&self.eval(act, a)?)? && truthy(&self.eval(act, b)?)?)
            }
            Expr::Binary(BinOp::Or, a, b) => {
                Value::Bool(truthy(&self.eval(act, a)?)? || truthy(&self.eval(act, b)?)?)
            }
            Expr::Binary(op, a, b) => {
                let (x, y) = (self.eval(act, a)?, self.eval(act, b)?);
                match op {
                    BinOp::Eq | BinOp::Ne => {
                        if !x.same_kind(&y) {
                            return engine(format!("comparing {x} with {y}"));
                        }
                        Value::Bool((x == y) == (*op == BinOp::Eq))
                    }
                    _ => {
                        let (x, y) = (int(x)?, int(y)?);
                        match op {
                            BinOp::Add => Value::Int(x.wrapping_add(y)),
                            BinOp::Sub => Value::Int(x.wrapping_sub(y)),
                            BinOp::Mul => Value::Int(x.wrapping_mul(y)),
                            BinOp::Div | BinOp::Mod if y == 0 => return Err(act.bug(BugType::Div0)),
                            BinOp::Div => Value::Int(x.wrapping_div(y)),
                            BinOp::Mod => Value::Int(x.wrapping_rem(y)),
                            BinOp::Lt => Value::Bool(x < y),
                            BinOp::Le => Value::Bool(x <= y),
                            BinOp::Gt => Value::Bool(x > y),
                            BinOp::Ge => Value::Bool(x >= y),
                            _ => unreachable!("handled above"),
                        }
                    }
                }
            }
        })
    }

    fn exec(&mut self, t: usize, act: &mut Activation<'p>, stmt: &'p Stmt) -> Result<Flow, Fault> {
        match &stmt.kind {
            StmtKind::Let { dests, value } => match value {
                LetValue::Expr(e) => {
                    let v = self.eval(act, e)?;
                    act.set_local(&dests[0], v);
                }
                LetValue::Helper(h) => {
                    let Value::Str(s) = self.eval(act, &h.arg)? else {
                        return engine(format!("{} expects a string", h.kind.name()));
                    };
                    let vals = match &h.kind {
                        HelperKind::MatchString(opts) => Some(vec![Value::Int(helpers::match_string(&s, opts))]),
                        HelperKind::Kstrtouint => helpers::kstrtouint(&s).map(|v| vec![Value::Int(v as i64)]),
                        HelperKind::Kstrtoint => helpers::kstrtoint(&s).map(|v| vec![Value::Int(v as i64)]),
                        HelperKind::Kstrtobool => helpers::kstrtobool(&s).map(|v| vec![Value::Bool(v)]),
                        HelperKind::Scan(fmt) => helpers::scan(&s, fmt),
                    };
                    // A failed conversion makes the store return -EINVAL.
                    let Some(vals) = vals else {
                        return Ok(Flow::Return(ReturnCode::Einval));
                    };
                    for (d, v) in dests.iter().zip(vals) {
                        act.set_local(d, v);
                    }
                }
            },
            StmtKind::Assign { target, value } => {
                let v = self.eval(act, value)?;
                self.write(act, target, v)?;
            }
            StmtKind::If {
                cond,
                then_edge,
                then_block,
                else_edge,
                else_block,
            } => {
                if truthy(&self.eval(act, cond)?)? {
                    self.rt.cover(*then_edge);
                    act.frames.push(Frame::Block {
                        block: then_block,
                        pc: 0,
                    });
                } else {
                    self.rt.cover(*else_edge);
                    if let Some(b) = else_block {
                        act.frames.push(Frame::Block { block: b, pc: 0 });
                    }
                }
            }
            StmtKind::Switch {
                scrutinee,
                cases,
                default_edge,
                default,
            } => {
                let v = int(self.eval(act, scrutinee)?)?;
                match cases.iter().find(|c| c.value == v) {
                    Some(c) => {
                        self.rt.cover(c.edge);
                        act.frames.push(Frame::Block {
                            block: &c.block,
                            pc: 0,
                        });
                    }
                    None => {
                        self.rt.cover(*default_edge);
                        if let Some(b) = default {
                            act.frames.push(Frame::Block { block: b, pc: 0 });
                        }
                    }
                }
            }
            StmtKind::Return(code) => return Ok(Flow::Return(*code)),
            StmtKind::Lock(n) => {
                let key = self.lock_key(act, n)?;
                if self.holder(key).is_some() {
                    // Retry this statement once the lock is released.
                    if let Some(Frame::Block { pc, .. }) = act.frames.last_mut() {
                        *pc -= 1;
                    }
                    self.threads[t].waiting = Some((key, stmt.id));
                    return Ok(Flow::Pause);
                }
                self.threads[t].waiting = None;
                self.locks.push((key, t));
            }
            StmtKind::Unlock(n) => {
                let key = self.lock_key(act, n)?;
                if let Some(i) = self.locks.iter().position(|(k, h)| *k == key && *h == t) {
                    self.locks.remove(i);
                }
            }
            StmtKind::Alloc(p) => {
                let h = self.rt.alloc();
                self.write(act, p, Value::Int(h))?;
            }
            StmtKind::Free(p) => {
                let h = int(self.read(act, p)?)?;
                if h != 0 {
                    match self.rt.is_live(h) {
                        Some(true) => self.rt.mark_freed(h),
                        Some(false) => return Err(act.bug(BugType::DoubleFree)),
                        None => return Err(act.bug(BugType::Npd)),
                    }
                }
            }
            StmtKind::Use(p) => {
                let h = int(self.read(act, p)?)?;
                match self.rt.is_live(h) {
                    Some(true) => {}
                    Some(false) => return Err(act.bug(BugType::Uaf)),
                    None => return Err(act.bug(BugType::Npd)),
                }
            }
            StmtKind::ListAdd { list, value } => {
                let v = int(self.eval(act, value)?)?;
                let k = self.list_key(act, list)?;
                self.list_mut(k).push(v);
            }
            StmtKind::ListDel { list, value } => {
                let v = int(self.eval(act, value)?)?;
                let k = self.list_key(act, list)?;
                let l = self.list_mut(k);
                if let Some(i) = l.iter().position(|x| *x == v) {
                    l.remove(i);
                }
            }
            StmtKind::ListIter {
                list,
                var,
                enter_edge,
                exit_edge,
                body,
            } => {
                let k = self.list_key(act, list)?;
                let items = self.list_ref(k).clone();
                act.frames.push(Frame::Iter {
                    list: Some(k),
                    items,
                    pos: 0,
                    var,
                    body,
                    enter: *enter_edge,
                    exit: *exit_edge,
                });
            }
            StmtKind::EachByte {
                source,
                var,
                enter_edge,
                exit_edge,
                body,
            } => {
                let Value::Str(s) = self.eval(act, source)? else {
                    return engine("each_byte expects a string");
                };
                let items: Vec<i64> = s.bytes().map(i64::from).collect();
                act.frames.push(Frame::Iter {
                    list: None,
                    items,
                    pos: 0,
                    var,
                    body,
                    enter: *enter_edge,
                    exit: *exit_edge,
                });
            }
            StmtKind::Yield => {}
        }
        Ok(Flow::Continue)
    }
}
