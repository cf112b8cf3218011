//! Case generation and mutation over a descriptor set.

use std::collections::HashMap;

use crate::case::{Action, ArgValue, Call, CaseLimits, OpenFlags, TestCase};
use crate::descgen::values::{number, sample, valid};
use crate::descgen::{ArgRole, DescKind, DescMeta, Descriptor, Generator};
use crate::extractor::{ValueKind, ValueSpec};
use crate::SplitMix64;

use super::Mode;

/// Builds and mutates cases from the descriptors a mode allows.
#[derive(Clone, Debug)]
pub struct Mutator {
    descs: Vec<Descriptor>,
    index: HashMap<String, usize>,
    producers: HashMap<String, Vec<usize>>,
    meta: DescMeta,
    mode: Mode,
    limits: CaseLimits,
    relation_prob: f64,
}

impl Mutator {
    pub fn new(descs: &[Descriptor], meta: &DescMeta, mode: Mode, limits: CaseLimits, relation_prob: f64) -> Self {
        let descs: Vec<Descriptor> = descs.iter().filter(|d| mode.allows(d.kind)).cloned().collect();
        let index = descs.iter().enumerate().map(|(i, d)| (d.name.clone(), i)).collect();
        let mut producers: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, d) in descs.iter().enumerate() {
            if let (true, Some(drv)) = (d.produces_handle, &d.driver) {
                producers.entry(drv.clone()).or_default().push(i);
            }
        }
        Self {
            descs,
            index,
            producers,
            meta: meta.clone(),
            mode,
            limits,
            relation_prob,
        }
    }

    pub fn descriptors(&self) -> &[Descriptor] {
        &self.descs
    }

    pub fn limits(&self) -> &CaseLimits {
        &self.limits
    }

    fn desc_of(&self, c: &Call) -> Option<&Descriptor> {
        self.index.get(&c.desc).map(|&i| &self.descs[i])
    }

    /// A fresh single-thread case of one to four calls.
    pub fn generate(&self, rng: &mut SplitMix64) -> TestCase {
        let mut case = TestCase {
            schedule_seed: rng.next_u64(),
            threads: vec![Vec::new()],
        };
        for _ in 0..1 + rng.below(4) {
            self.insert_call(&mut case, rng);
        }
        case
    }

    /// Apply one mutation; falls through operators until one changes the case.
    pub fn mutate(&self, case: &TestCase, corpus: &[&TestCase], rng: &mut SplitMix64) -> TestCase {
        if self.mode == Mode::SyzlangMutation && rng.chance(self.relation_prob) {
            if let Some(c) = self.relation_move(case, rng) {
                return c;
            }
        }
        for _ in 0..16 {
            let mut c = case.clone();
            match rng.below(10) {
                0..=2 => self.insert_call(&mut c, rng),
                3 => remove_random(&mut c, rng),
                4..=6 => self.mutate_arg(&mut c, rng),
                7 => self.replace_call(&mut c, rng),
                8 => match rng.pick(corpus) {
                    Some(other) => splice(&mut c, other, &self.limits),
                    None => continue,
                },
                _ => c.schedule_seed = rng.next_u64(),
            }
            if c.threads.iter().all(Vec::is_empty) {
                continue;
            }
            if c != *case && c.validate(&self.limits).is_ok() {
                return c;
            }
        }
        let mut c = case.clone();
        c.schedule_seed = rng.next_u64();
        c
    }

    fn instantiate(&self, d: &Descriptor, id: u32, fd: Option<u32>, rng: &mut SplitMix64) -> Call {
        let flags = *rng.pick(&OpenFlags::ALL).expect("non-empty");
        let path = |role, rng: &mut SplitMix64| rng.pick(d.paths(role)).cloned().unwrap_or_default();
        let action = match d.kind {
            DescKind::OpenDev => Action::OpenDev {
                path: path(ArgRole::DevPath, rng),
                flags,
            },
            DescKind::DriverOp => Action::Op {
                fd: fd.unwrap_or(u32::MAX),
                op: d.op.clone().unwrap_or_default(),
                args: d
                    .arg_specs
                    .iter()
                    .filter(|a| a.role == ArgRole::OpArg)
                    .map(|a| op_arg(&a.generator, rng))
                    .collect(),
            },
            DescKind::WriteParam => Action::WriteParam {
                path: path(ArgRole::ParamPath, rng),
                value: match d.arg(ArgRole::ParamVal).map(|a| &a.generator) {
                    Some(Generator::Value(s)) => sample(s, rng).value,
                    _ => String::new(),
                },
            },
            DescKind::SyzModDev => {
                let (param_path, value) = pick_choice(d, rng);
                Action::SyzModDev {
                    param_path,
                    value,
                    dev_path: path(ArgRole::DevPath, rng),
                    rng_seed: rng.below(1 << 16),
                    flags,
                }
            }
        };
        Call {
            id,
            desc: d.name.clone(),
            action,
        }
    }

    /// Insert a random call into a random thread, adding a handle producer
    /// in front of it when it needs one.
    fn insert_call(&self, case: &mut TestCase, rng: &mut SplitMix64) {
        if self.descs.is_empty() {
            return;
        }
        let t = rng.index(case.threads.len());
        let room = self.limits.max_calls_per_thread.saturating_sub(case.threads[t].len());
        if room == 0 {
            return;
        }
        let d = &self.descs[rng.index(self.descs.len())];
        let pos = rng.index(case.threads[t].len() + 1);
        let mut id = case.next_id();
        let mut fd = None;
        let mut at = pos;
        if d.consumes_handle {
            let drv = d.driver.as_deref().unwrap_or("");
            let have: Vec<u32> = case.threads[t][..pos]
                .iter()
                .filter(|c| c.action.produces_handle())
                .filter(|c| self.desc_of(c).and_then(|x| x.driver.as_deref()) == Some(drv))
                .map(|c| c.id)
                .collect();
            fd = match rng.pick(&have) {
                Some(&h) => Some(h),
                None => {
                    let Some(ps) = self.producers.get(drv) else {
                        return;
                    };
                    if room < 2 {
                        return;
                    }
                    let p = &self.descs[ps[rng.index(ps.len())]];
                    let call = self.instantiate(p, id, None, rng);
                    case.threads[t].insert(at, call);
                    at += 1;
                    id += 1;
                    Some(id - 1)
                }
            };
        }
        let call = self.instantiate(d, id, fd, rng);
        case.threads[t].insert(at, call);
    }

    fn replace_call(&self, case: &mut TestCase, rng: &mut SplitMix64) {
        let Some((t, i)) = random_call(case, rng) else {
            return;
        };
        let old = &case.threads[t][i];
        let Some(d) = self.desc_of(old) else {
            return;
        };
        let fresh = self.instantiate(d, old.id, old.action.consumed_handle(), rng);
        case.threads[t][i] = fresh;
    }

    fn mutate_arg(&self, case: &mut TestCase, rng: &mut SplitMix64) {
        let Some((t, i)) = random_call(case, rng) else {
            return;
        };
        let Some(d) = self.desc_of(&case.threads[t][i]).cloned() else {
            return;
        };
        let flags = *rng.pick(&OpenFlags::ALL).expect("non-empty");
        match &mut case.threads[t][i].action {
            Action::OpenDev { path, flags: f } => {
                if rng.chance(0.5) {
                    *f = flags;
                } else if let Some(p) = rng.pick(d.paths(ArgRole::DevPath)) {
                    *path = p.clone();
                }
            }
            Action::Op { args, .. } => {
                let gens: Vec<&Generator> = d
                    .arg_specs
                    .iter()
                    .filter(|a| a.role == ArgRole::OpArg)
                    .map(|a| &a.generator)
                    .collect();
                if !args.is_empty() && args.len() == gens.len() {
                    let k = rng.index(args.len());
                    args[k] = op_arg(gens[k], rng);
                }
            }
            Action::WriteParam { path, value } => {
                if rng.chance(0.8) {
                    if let Some(Generator::Value(s)) = d.arg(ArgRole::ParamVal).map(|a| &a.generator) {
                        *value = sample(s, rng).value;
                    }
                } else if let Some(p) = rng.pick(d.paths(ArgRole::ParamPath)) {
                    *path = p.clone();
                }
            }
            Action::SyzModDev {
                param_path,
                value,
                dev_path,
                rng_seed,
                flags: f,
            } => match rng.below(5) {
                0 => {
                    let spec = choices(&d).iter().find(|(p, _)| p == param_path).map(|(_, s)| s.clone());
                    match spec {
                        Some(s) => *value = sample(&s, rng).value,
                        None => (*param_path, *value) = pick_choice(&d, rng),
                    }
                }
                1 => (*param_path, *value) = pick_choice(&d, rng),
                2 => {
                    if let Some(p) = rng.pick(d.paths(ArgRole::DevPath)) {
                        *dev_path = p.clone();
                    }
                }
                3 => *rng_seed = rng.below(1 << 16),
                _ => *f = flags,
            },
        }
    }

    /// Put a write to a parameter of a device related to one the case
    /// already targets on another thread, so the two run concurrently.
    pub fn relation_move(&self, case: &TestCase, rng: &mut SplitMix64) -> Option<TestCase> {
        let anchors: Vec<(usize, &Call)> = case
            .threads
            .iter()
            .enumerate()
            .flat_map(|(t, cs)| cs.iter().map(move |c| (t, c)))
            .filter(|(_, c)| {
                self.desc_of(c)
                    .is_some_and(|d| matches!(d.kind, DescKind::DriverOp | DescKind::OpenDev | DescKind::SyzModDev))
            })
            .collect();
        let &(t, anchor) = rng.pick(&anchors)?;
        let devices = self.meta.targets.get(&anchor.desc)?;
        let dev = self.meta.device(rng.pick(devices)?)?;
        let related: Vec<_> = dev.related.iter().filter(|r| self.index.contains_key(&r.desc)).collect();
        let r = *rng.pick(&related)?;
        let w = &self.descs[*self.index.get(&r.desc)?];
        let value = match w.arg(ArgRole::ParamVal).map(|a| &a.generator) {
            Some(Generator::Value(s)) => sample(s, rng).value,
            _ => String::new(),
        };
        let mut out = case.clone();
        let call = Call {
            id: out.next_id(),
            desc: w.name.clone(),
            action: Action::WriteParam {
                path: r.path.clone(),
                value,
            },
        };
        if out.threads.len() < self.limits.max_threads {
            out.threads.push(vec![call]);
        } else {
            let others: Vec<usize> = (0..out.threads.len())
                .filter(|&o| o != t && out.threads[o].len() < self.limits.max_calls_per_thread)
                .collect();
            let o = *rng.pick(&others)?;
            let pos = rng.index(out.threads[o].len() + 1);
            out.threads[o].insert(pos, call);
        }
        out.schedule_seed = rng.next_u64();
        Some(out)
    }
}

fn choices(d: &Descriptor) -> &[(String, ValueSpec)] {
    match d.arg(ArgRole::ParamPath).map(|a| &a.generator) {
        Some(Generator::Choice(c)) => c,
        _ => &[],
    }
}

fn pick_choice(d: &Descriptor, rng: &mut SplitMix64) -> (String, String) {
    match rng.pick(choices(d)) {
        Some((p, s)) => (p.clone(), sample(s, rng).value),
        None => (String::new(), String::new()),
    }
}

fn op_arg(g: &Generator, rng: &mut SplitMix64) -> ArgValue {
    match g {
        Generator::Value(s) if matches!(s.kind, ValueKind::UintRange | ValueKind::IntRange) => {
            ArgValue::Int(number(rng, s.lo.unwrap_or(0), s.hi.unwrap_or(0)))
        }
        Generator::Value(s) => ArgValue::Str(valid(s, rng)),
        _ => ArgValue::Int(0),
    }
}

fn random_call(case: &TestCase, rng: &mut SplitMix64) -> Option<(usize, usize)> {
    let all: Vec<(usize, usize)> = case
        .threads
        .iter()
        .enumerate()
        .flat_map(|(t, cs)| (0..cs.len()).map(move |i| (t, i)))
        .collect();
    rng.pick(&all).copied()
}

/// Remove the call with `id` and, transitively, every call using its handle.
pub fn remove_call(case: &mut TestCase, id: u32) {
    let mut doomed = vec![id];
    while let Some(x) = doomed.pop() {
        for t in &mut case.threads {
            t.retain(|c| {
                if c.id == x {
                    return false;
                }
                if c.action.consumed_handle() == Some(x) {
                    doomed.push(c.id);
                    return false;
                }
                true
            });
        }
    }
}

fn remove_random(case: &mut TestCase, rng: &mut SplitMix64) {
    if let Some((t, i)) = random_call(case, rng) {
        let id = case.threads[t][i].id;
        remove_call(case, id);
        if case.threads.len() > 1 {
            case.threads.retain(|t| !t.is_empty());
        }
    }
}

/// Append `other`'s threads onto `case`'s, renumbering its call ids.
fn splice(case: &mut TestCase, other: &TestCase, limits: &CaseLimits) {
    let base = case.next_id();
    for (t, calls) in other.threads.iter().enumerate() {
        if t >= limits.max_threads {
            break;
        }
        if t == case.threads.len() {
            case.threads.push(Vec::new());
        }
        for c in calls {
            if case.threads[t].len() >= limits.max_calls_per_thread {
                break;
            }
            let mut c = c.clone();
            c.id += base;
            if let Action::Op { fd, .. } = &mut c.action {
                *fd += base;
            }
            case.threads[t].push(c);
        }
    }
    // Consumers whose producer was cut off by the limits.
    let ids: Vec<u32> = case.calls().filter(|c| c.action.produces_handle()).map(|c| c.id).collect();
    let dangling: Vec<u32> = case
        .calls()
        .filter(|c| c.action.consumed_handle().is_some_and(|h| !ids.contains(&h)))
        .map(|c| c.id)
        .collect();
    for id in dangling {
        remove_call(case, id);
    }
}
