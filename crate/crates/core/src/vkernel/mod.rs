//! The simulated kernel: device tree, virtual /sys and /dev, and an
//! interpreter for driver code under a deterministic cooperative scheduler.

mod exec;
pub mod helpers;
pub mod sched;
pub mod sysfs;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::{Action, ArgValue, Call, OpenFlags, TestCase};
use crate::dmir::{self, DmirProgram, DriverDecl, EdgeId, FieldType, Literal, ParamType, StmtId};
use crate::rng::SplitMix64;

use exec::{Job, Machine};
pub use sched::{Explorer, ReplayScheduler, Scheduler, SeededScheduler, TraceEntry};
pub use sysfs::{wildcard_match, NodeKind, Vfs};

/// Runtime value. Handles are integers; 0 is null.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Str(String),
    List(Vec<i64>),
}

impl Value {
    fn from_literal(l: &Literal) -> Value {
        match l {
            Literal::Int(v) => Value::Int(*v),
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Str(s) => Value::Str(s.clone()),
        }
    }

    fn zero(t: FieldType) -> Value {
        match t {
            FieldType::Uint | FieldType::Int | FieldType::Handle => Value::Int(0),
            FieldType::Bool => Value::Bool(false),
            FieldType::String => Value::Str(String::new()),
            FieldType::List => Value::List(Vec::new()),
        }
    }

    fn same_kind(&self, other: &Value) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "{s}"),
            Value::List(l) => write!(f, "{l:?}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BugType {
    #[serde(rename = "UAF")]
    Uaf,
    #[serde(rename = "NPD")]
    Npd,
    #[serde(rename = "DIV0")]
    Div0,
    #[serde(rename = "DOUBLE_FREE")]
    DoubleFree,
    #[serde(rename = "DEADLOCK")]
    Deadlock,
}

impl BugType {
    pub fn as_str(self) -> &'static str {
        match self {
            BugType::Uaf => "UAF",
            BugType::Npd => "NPD",
            BugType::Div0 => "DIV0",
            BugType::DoubleFree => "DOUBLE_FREE",
            BugType::Deadlock => "DEADLOCK",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BugLocation {
    pub driver: String,
    /// Op name, attribute file name, or `probe`.
    pub function: String,
    pub stmt: StmtId,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BugReport {
    pub bug_type: BugType,
    pub location: BugLocation,
    pub title: String,
}

impl BugReport {
    pub fn new(bug_type: BugType, driver: &str, function: &str, stmt: StmtId) -> Self {
        Self {
            title: format!("{}/{driver}/{function}/stmt{stmt}", bug_type.as_str()),
            bug_type,
            location: BugLocation {
                driver: driver.to_string(),
                function: function.to_string(),
                stmt,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "OK")]
    Ok,
    #[serde(rename = "EINVAL")]
    Einval,
    #[serde(rename = "EIO")]
    Eio,
    #[serde(rename = "ENOENT")]
    Enoent,
    #[serde(rename = "EBADF")]
    Ebadf,
    /// The call was running when the case stopped.
    #[serde(rename = "INTERRUPTED")]
    Interrupted,
    #[serde(rename = "NOT_RUN")]
    NotRun,
}

impl Status {
    fn from_code(c: dmir::ReturnCode) -> Status {
        match c {
            dmir::ReturnCode::Ok => Status::Ok,
            dmir::ReturnCode::Einval => Status::Einval,
            dmir::ReturnCode::Eio => Status::Eio,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CallStatus {
    pub status: Status,
    /// Status of the parameter write of a `syz_mod_dev` call.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_status: Option<Status>,
}

impl CallStatus {
    pub fn plain(status: Status) -> Self {
        Self {
            status,
            param_status: None,
        }
    }
}

/// Set of executed edge ids, ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoverageMap(Vec<EdgeId>);

impl CoverageMap {
    pub fn from_edges(mut edges: Vec<EdgeId>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        Self(edges)
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.0.binary_search(&e).is_ok()
    }

    pub fn merge(&mut self, other: &CoverageMap) {
        let mut all = std::mem::take(&mut self.0);
        all.extend_from_slice(&other.0);
        *self = Self::from_edges(all);
    }

    pub fn is_superset(&self, other: &CoverageMap) -> bool {
        other.0.iter().all(|e| self.contains(*e))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub coverage: CoverageMap,
    pub verdict: Option<BugReport>,
    /// One entry per call, per thread.
    pub statuses: Vec<Vec<CallStatus>>,
    pub trace: Vec<TraceEntry>,
    /// Interpreter faults that are not kernel bugs (ill-typed values and the like).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine_error: Option<String>,
    /// Interpreter steps taken; the unit of virtual time.
    pub steps: u64,
}

impl ExecutionResult {
    pub fn title(&self) -> Option<&str> {
        self.verdict.as_ref().map(|v| v.title.as_str())
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BootError {
    #[error("devnode \"{name}\" claimed by both `{first}` and `{second}`")]
    DuplicateDevnode {
        name: String,
        first: String,
        second: String,
    },
    #[error("sysfs layout conflict: {0}")]
    Layout(String),
    #[error("probe of `{device}` failed: {msg}")]
    Probe { device: String, msg: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviceNode {
    pub id: String,
    pub driver: String,
    pub module: String,
    pub bus: String,
    /// Index of the parent device; `None` for devices attached to a bus.
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub sysfs_path: String,
    pub devnode_path: Option<String>,
}

/// Device instances with parent/child edges, rooted at buses.
#[derive(Clone, Debug, Serialize)]
pub struct DeviceTree {
    pub buses: Vec<String>,
    pub nodes: Vec<DeviceNode>,
}

impl DeviceTree {
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// (parent id or bus, child id) pairs, sorted.
    pub fn edge_set(&self) -> BTreeSet<(String, String)> {
        self.nodes
            .iter()
            .map(|n| {
                let p = match n.parent {
                    Some(p) => self.nodes[p].id.clone(),
                    None => n.bus.clone(),
                };
                (p, n.id.clone())
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct DriverLayout {
    pub module: usize,
    pub index: usize,
    pub fields: HashMap<String, usize>,
}

#[derive(Clone, Debug)]
pub(crate) struct ParamSlot {
    pub module: String,
    pub ptype: ParamType,
}

/// Everything about a booted program that never changes at runtime.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub tree: DeviceTree,
    pub device_driver: Vec<usize>,
    pub drivers: Vec<DriverLayout>,
    pub params: Vec<ParamSlot>,
    pub param_index: HashMap<String, HashMap<String, usize>>,
    pub globals: HashMap<String, usize>,
    /// (path, device), sorted by path.
    pub devnodes: Vec<(String, usize)>,
    /// Attribute and parameter files, sorted.
    pub sys_files: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum HandleState {
    Live,
    Freed,
}

/// Mutable kernel state; reset by cloning the post-boot snapshot.
#[derive(Clone, Debug)]
pub(crate) struct Runtime {
    pub params: Vec<Value>,
    pub fields: Vec<Vec<Value>>,
    pub globals: Vec<Vec<i64>>,
    handles: Vec<HandleState>,
    cov: Vec<u64>,
}

impl Runtime {
    pub fn cover(&mut self, e: EdgeId) {
        self.cov[e as usize / 64] |= 1 << (e % 64);
    }

    fn coverage(&self) -> CoverageMap {
        let mut out = Vec::new();
        for (w, bits) in self.cov.iter().enumerate() {
            let mut b = *bits;
            while b != 0 {
                let i = b.trailing_zeros();
                out.push(w as u32 * 64 + i);
                b &= b - 1;
            }
        }
        CoverageMap(out)
    }

    fn clear_coverage(&mut self) {
        self.cov.iter_mut().for_each(|w| *w = 0);
    }

    pub fn alloc(&mut self) -> i64 {
        self.handles.push(HandleState::Live);
        self.handles.len() as i64
    }

    /// None for null or unknown handles.
    fn handle(&self, h: i64) -> Option<HandleState> {
        if h <= 0 {
            return None;
        }
        self.handles.get(h as usize - 1).copied()
    }

    pub fn is_live(&self, h: i64) -> Option<bool> {
        self.handle(h).map(|s| s == HandleState::Live)
    }

    pub fn mark_freed(&mut self, h: i64) {
        self.handles[h as usize - 1] = HandleState::Freed;
    }
}

/// A booted kernel. Cloning is cheap: the program and layout are shared.
#[derive(Clone, Debug)]
pub struct KernelState {
    program: Arc<DmirProgram>,
    layout: Arc<Layout>,
    vfs: Arc<Vfs>,
    initial: Runtime,
    rt: Runtime,
}

/// Handle to an opened device node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DevHandle(pub usize);

/// Instantiate the device tree and namespaces, then run every probe.
pub fn boot(program: &DmirProgram) -> Result<KernelState, BootError> {
    boot_shared(Arc::new(program.clone()))
}

pub fn boot_shared(program: Arc<DmirProgram>) -> Result<KernelState, BootError> {
    let shared = program.clone();
    let p = &*shared;
    let mut vfs = Vfs::new();
    let lay = |e: String| BootError::Layout(e);

    let mut drivers = Vec::new();
    let mut driver_index = HashMap::new();
    for (mi, m) in p.modules.iter().enumerate() {
        for (di, d) in m.drivers.iter().enumerate() {
            driver_index.insert(d.name.clone(), drivers.len());
            drivers.push(DriverLayout {
                module: mi,
                index: di,
                fields: d
                    .fields
                    .iter()
                    .enumerate()
                    .map(|(i, f)| (f.name.clone(), i))
                    .collect(),
            });
        }
    }

    let mut params = Vec::new();
    let mut param_index: HashMap<String, HashMap<String, usize>> = HashMap::new();
    let mut param_values = Vec::new();
    let mut globals = HashMap::new();
    vfs.mkdir_p("/sys/module").map_err(lay)?;
    vfs.mkdir_p("/dev").map_err(lay)?;
    for m in &p.modules {
        let mdir = vfs.mkdir_p(&format!("/sys/module/{}", m.name)).map_err(lay)?;
        let pdir = vfs.mkdir(mdir, "parameters").map_err(lay)?;
        for prm in &m.params {
            let idx = params.len();
            vfs.create(pdir, &prm.name, NodeKind::ParamFile { param: idx })
                .map_err(lay)?;
            params.push(ParamSlot {
                module: m.name.clone(),
                ptype: prm.ptype,
            });
            param_values.push(Value::from_literal(&prm.default));
            param_index
                .entry(m.name.clone())
                .or_default()
                .insert(prm.name.clone(), idx);
        }
        if !m.drivers.is_empty() {
            let ddir = vfs.mkdir(mdir, "drivers").map_err(lay)?;
            for d in &m.drivers {
                vfs.create(ddir, &d.name, NodeKind::Info { content: d.name.clone() })
                    .map_err(lay)?;
            }
        }
        for g in &m.globals {
            let n = globals.len();
            globals.insert(g.clone(), n);
        }
    }
    for b in &p.buses {
        vfs.mkdir_p(&format!("/sys/{b}")).map_err(lay)?;
    }

    // Devices in an order where parents come first.
    let index: HashMap<&str, usize> = p
        .devices
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id.as_str(), i))
        .collect();
    let mut nodes: Vec<Option<DeviceNode>> = vec![None; p.devices.len()];
    let mut device_driver = vec![0; p.devices.len()];
    let mut fields = vec![Vec::new(); p.devices.len()];
    let mut devnode_owner: HashMap<String, usize> = HashMap::new();
    let mut order = Vec::new();
    fn visit(i: usize, p: &DmirProgram, index: &HashMap<&str, usize>, seen: &mut [bool], order: &mut Vec<usize>) {
        if seen[i] {
            return;
        }
        seen[i] = true;
        if let Some(&pi) = index.get(p.devices[i].parent.as_str()) {
            visit(pi, p, index, seen, order);
        }
        order.push(i);
    }
    let mut seen = vec![false; p.devices.len()];
    for i in 0..p.devices.len() {
        visit(i, p, &index, &mut seen, &mut order);
    }
    for &i in &order {
        let dev = &p.devices[i];
        let dl = driver_index[&dev.driver];
        device_driver[i] = dl;
        let m = &p.modules[drivers[dl].module];
        let d = &m.drivers[drivers[dl].index];
        let (parent, bus, parent_path) = match index.get(dev.parent.as_str()) {
            Some(&pi) => {
                let pn = nodes[pi].as_ref().expect("parents are placed first");
                (Some(pi), pn.bus.clone(), pn.sysfs_path.clone())
            }
            None => (None, dev.parent.clone(), format!("/sys/{}", dev.parent)),
        };
        let parent_dir = vfs.lookup(&parent_path).expect("parent directory exists");
        let ddir = vfs.create(parent_dir, &dev.id, NodeKind::Dir).map_err(lay)?;
        let sysfs_path = vfs.path_of(ddir);
        let mut uevent = format!("DRIVER={}\n", d.name);
        if let Some(n) = &dev.devnode {
            uevent.push_str(&format!("DEVNAME={n}\n"));
        }
        vfs.create(ddir, "uevent", NodeKind::Info { content: uevent })
            .map_err(lay)?;
        for (ai, (dirs, a)) in dmir::flatten_attrs_with_dirs(d).into_iter().enumerate() {
            let mut dir = ddir;
            for g in dirs {
                dir = vfs.mkdir(dir, g).map_err(lay)?;
            }
            vfs.create(
                dir,
                &a.fname,
                NodeKind::AttrFile {
                    device: i,
                    attr: ai,
                    writable: a.mode == dmir::AttrMode::Rw,
                },
            )
            .map_err(lay)?;
        }
        let devnode_path = match &dev.devnode {
            Some(n) => {
                if let Some(&other) = devnode_owner.get(n) {
                    return Err(BootError::DuplicateDevnode {
                        name: n.clone(),
                        first: p.devices[other].id.clone(),
                        second: dev.id.clone(),
                    });
                }
                devnode_owner.insert(n.clone(), i);
                let devdir = vfs.lookup("/dev").expect("created above");
                vfs.create(devdir, n, NodeKind::DevNode { device: i })
                    .map_err(lay)?;
                Some(format!("/dev/{n}"))
            }
            None => None,
        };
        fields[i] = d
            .fields
            .iter()
            .map(|f| match &f.default {
                Some(l) => Value::from_literal(l),
                None => Value::zero(f.ftype),
            })
            .collect();
        nodes[i] = Some(DeviceNode {
            id: dev.id.clone(),
            driver: d.name.clone(),
            module: m.name.clone(),
            bus,
            parent,
            children: Vec::new(),
            sysfs_path,
            devnode_path,
        });
    }
    let mut nodes: Vec<DeviceNode> = nodes.into_iter().map(|n| n.expect("every device placed")).collect();
    for i in 0..nodes.len() {
        if let Some(pi) = nodes[i].parent {
            nodes[pi].children.push(i);
        }
    }

    let mut devnodes: Vec<(String, usize)> = nodes
        .iter()
        .enumerate()
        .filter_map(|(i, n)| n.devnode_path.clone().map(|p| (p, i)))
        .collect();
    devnodes.sort();
    let mut sys_files: Vec<String> = vfs
        .files_under("/sys")
        .into_iter()
        .filter(|f| {
            matches!(
                vfs.node(vfs.lookup(f).expect("listed")).kind,
                NodeKind::AttrFile { .. } | NodeKind::ParamFile { .. }
            )
        })
        .collect();
    sys_files.sort();

    let layout = Layout {
        tree: DeviceTree {
            buses: p.buses.clone(),
            nodes,
        },
        device_driver,
        drivers,
        params,
        param_index,
        globals,
        devnodes,
        sys_files,
    };
    let words = (p.edge_count as usize).div_ceil(64).max(1);
    let rt = Runtime {
        params: param_values,
        fields,
        globals: vec![Vec::new(); layout.globals.len()],
        handles: Vec::new(),
        cov: vec![0; words],
    };
    let mut state = KernelState {
        program,
        layout: Arc::new(layout),
        vfs: Arc::new(vfs),
        initial: rt.clone(),
        rt,
    };

    // Probes run in device declaration order and are part of the baseline.
    let probes: Vec<usize> = (0..p.devices.len())
        .filter(|&i| state.driver_of(i).probe.is_some())
        .collect();
    for i in probes {
        let out = state.execute(vec![vec![Job::Probe(i)]], &mut SeededScheduler::new(0));
        let err = out
            .engine_error
            .or_else(|| out.verdict.map(|v| format!("{} during probe", v.title)));
        if let Some(msg) = err {
            return Err(BootError::Probe {
                device: p.devices[i].id.clone(),
                msg,
            });
        }
    }
    state.rt.clear_coverage();
    state.initial = state.rt.clone();
    Ok(state)
}

impl KernelState {
    pub fn program(&self) -> &DmirProgram {
        &self.program
    }

    pub fn program_arc(&self) -> Arc<DmirProgram> {
        self.program.clone()
    }

    pub fn vfs(&self) -> &Vfs {
        &self.vfs
    }

    pub fn tree(&self) -> &DeviceTree {
        &self.layout.tree
    }

    pub(crate) fn driver_of(&self, device: usize) -> &DriverDecl {
        let dl = &self.layout.drivers[self.layout.device_driver[device]];
        &self.program.modules[dl.module].drivers[dl.index]
    }

    /// Attribute and module-parameter files under /sys, sorted.
    pub fn sys_files(&self) -> &[String] {
        &self.layout.sys_files
    }

    /// Device node paths under /dev, sorted.
    pub fn devnode_paths(&self) -> Vec<&str> {
        self.layout.devnodes.iter().map(|(p, _)| p.as_str()).collect()
    }

    /// Restore the post-boot state.
    pub fn reset(&mut self) {
        self.rt.clone_from(&self.initial);
    }

    pub fn coverage(&self) -> CoverageMap {
        self.rt.coverage()
    }

    pub fn field_value(&self, device: &str, field: &str) -> Option<&Value> {
        let i = self.layout.tree.index_of(device)?;
        let f = *self.layout.drivers[self.layout.device_driver[i]].fields.get(field)?;
        Some(&self.rt.fields[i][f])
    }

    pub fn param_value(&self, module: &str, name: &str) -> Option<&Value> {
        let i = *self.layout.param_index.get(module)?.get(name)?;
        Some(&self.rt.params[i])
    }

    fn execute(&mut self, threads: Vec<Vec<Job<'_>>>, sched: &mut dyn Scheduler) -> ExecutionResult {
        let out = Machine::new(&self.program, &self.layout, &self.vfs, &mut self.rt, sched, threads).run();
        ExecutionResult {
            coverage: self.rt.coverage(),
            verdict: out.verdict,
            statuses: out.statuses,
            trace: out.trace,
            engine_error: out.engine_error,
            steps: out.steps,
        }
    }

    /// Execute calls on the current state without resetting it.
    pub fn execute_calls(&mut self, threads: &[Vec<Call>], sched: &mut dyn Scheduler) -> ExecutionResult {
        let jobs = threads
            .iter()
            .map(|t| t.iter().map(Job::Call).collect())
            .collect();
        self.execute(jobs, sched)
    }

    /// Reset, then run a case under its schedule seed.
    pub fn run_case(&mut self, case: &TestCase) -> ExecutionResult {
        self.reset();
        self.execute_calls(&case.threads, &mut SeededScheduler::new(case.schedule_seed))
    }

    /// Reset, then run a case following a recorded interleaving. The flag
    /// reports whether the trace was followed exactly.
    pub fn replay(&mut self, case: &TestCase, trace: &[TraceEntry]) -> (ExecutionResult, bool) {
        self.reset();
        let mut r = ReplayScheduler::new(trace);
        let out = self.execute_calls(&case.threads, &mut r);
        let exact = r.exact();
        (out, exact)
    }

    /// Run every interleaving of `case` (and every wildcard choice), up to
    /// `max_runs` runs.
    pub fn explore(&mut self, case: &TestCase, max_runs: u64) -> Exploration {
        let mut ex = Explorer::new();
        let mut verdicts = BTreeSet::new();
        let mut runs = 0;
        let mut max_depth = 0;
        let complete = loop {
            if runs >= max_runs {
                break false;
            }
            self.reset();
            let out = self.execute_calls(&case.threads, &mut ex);
            runs += 1;
            max_depth = max_depth.max(ex.depth());
            verdicts.insert(out.verdict.map(|v| v.title));
            if !ex.advance() {
                break true;
            }
        };
        Exploration {
            runs,
            complete,
            max_depth,
            verdicts,
        }
    }

    /// Write a module parameter or device attribute file.
    pub fn write_param(&mut self, path: &str, value: &str) -> ExecutionResult {
        let call = Call {
            id: 0,
            desc: String::new(),
            action: Action::WriteParam {
                path: path.to_string(),
                value: value.to_string(),
            },
        };
        self.execute_calls(&[vec![call]], &mut SeededScheduler::new(0))
    }

    /// Resolve a /dev pattern; `#` expansions are chosen by `rng`.
    pub fn open_dev(&self, pattern: &str, rng: &mut SplitMix64) -> Result<DevHandle, Status> {
        let m = self.match_devnodes(pattern);
        match m.len() {
            0 => Err(Status::Enoent),
            1 => Ok(DevHandle(m[0])),
            n => Ok(DevHandle(m[rng.index(n)])),
        }
    }

    pub fn invoke_op(&mut self, dev: DevHandle, op: &str, args: &[ArgValue]) -> ExecutionResult {
        let path = self.layout.tree.nodes[dev.0]
            .devnode_path
            .clone()
            .unwrap_or_default();
        let calls = vec![
            Call {
                id: 0,
                desc: String::new(),
                action: Action::OpenDev {
                    path,
                    flags: OpenFlags::ReadWrite,
                },
            },
            Call {
                id: 1,
                desc: String::new(),
                action: Action::Op {
                    fd: 0,
                    op: op.to_string(),
                    args: args.to_vec(),
                },
            },
        ];
        let mut out = self.execute_calls(&[calls], &mut SeededScheduler::new(0));
        out.statuses[0].remove(0);
        out
    }

    pub(crate) fn match_devnodes(&self, pattern: &str) -> Vec<usize> {
        exec::match_devnodes(&self.layout, pattern)
    }
}

/// Outcome of exhaustive interleaving enumeration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Exploration {
    pub runs: u64,
    /// False if the run limit cut enumeration short.
    pub complete: bool,
    /// Longest decision sequence seen.
    pub max_depth: usize,
    /// Crash titles reached; `None` stands for a clean run.
    pub verdicts: BTreeSet<Option<String>>,
}
