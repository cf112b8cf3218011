//! Independent samplers for value specs, and a single-write probe.

use paramfuzz::dmir::{flatten_attrs_with_dirs, DmirProgram};
use paramfuzz::extractor::{ValueKind, ValueSpec};
use paramfuzz::vkernel::{KernelState, Status};
use paramfuzz::SplitMix64;

pub const SAMPLES: usize = 1000;
pub const BOOLS: [&str; 10] = ["1", "0", "y", "n", "Y", "N", "on", "off", "true", "false"];

pub fn alnum(rng: &mut SplitMix64, lo: u64, hi: u64) -> String {
    const CH: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    let n = lo + rng.below(hi - lo + 1);
    (0..n).map(|_| CH[rng.index(CH.len())] as char).collect()
}

pub fn printable(rng: &mut SplitMix64) -> String {
    let n = rng.below(40);
    (0..n).map(|_| (b' ' + rng.below(95) as u8) as char).collect()
}

pub fn in_range(rng: &mut SplitMix64, lo: i64, hi: i64) -> i64 {
    match rng.below(4) {
        0 => lo,
        1 => hi,
        _ => lo + (rng.next_u64() % ((hi - lo) as u64 + 1)) as i64,
    }
}

/// An input the format accepts, built directive by directive.
pub fn formatted(fmt: &str, rng: &mut SplitMix64) -> String {
    let mut out = String::new();
    let mut chars = fmt.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '%' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('u') => out += &rng.below(u32::MAX as u64 + 1).to_string(),
            Some('d') => out += &in_range(rng, i32::MIN as i64, i32::MAX as i64).to_string(),
            Some('s') => out += &alnum(rng, 1, 8),
            Some('%') => out.push('%'),
            d => panic!("directive {d:?}"),
        }
    }
    out
}

pub fn valid(spec: &ValueSpec, rng: &mut SplitMix64) -> String {
    match spec.kind {
        ValueKind::StringSet => {
            let s = spec.strings.as_ref().unwrap();
            s[rng.index(s.len())].clone()
        }
        ValueKind::UintRange | ValueKind::IntRange => in_range(rng, spec.lo.unwrap(), spec.hi.unwrap()).to_string(),
        ValueKind::Bool => BOOLS[rng.index(BOOLS.len())].to_string(),
        ValueKind::Formatted => formatted(spec.format.as_deref().unwrap(), rng),
        ValueKind::AnyString | ValueKind::IgnoresInput => printable(rng),
        ValueKind::Undetermined => unreachable!(),
    }
}

/// An input the spec excludes, or `None` when the spec excludes nothing
/// of that shape.
pub fn invalid(spec: &ValueSpec, rng: &mut SplitMix64) -> Option<String> {
    match spec.kind {
        ValueKind::StringSet => {
            let s = spec.strings.as_ref().unwrap();
            loop {
                let cand = match rng.below(3) {
                    0 => format!("{}x", s[rng.index(s.len())]),
                    1 => s[rng.index(s.len())].to_uppercase(),
                    _ => alnum(rng, 0, 12),
                };
                if !s.contains(&cand) {
                    return Some(cand);
                }
            }
        }
        ValueKind::UintRange | ValueKind::IntRange => {
            let (tmin, tmax) = if spec.kind == ValueKind::UintRange {
                (0, u32::MAX as i64)
            } else {
                (i32::MIN as i64, i32::MAX as i64)
            };
            let (lo, hi) = (spec.lo.unwrap(), spec.hi.unwrap());
            let mut sides = Vec::new();
            if lo > tmin {
                sides.push((tmin, lo - 1));
            }
            if hi < tmax {
                sides.push((hi + 1, tmax));
            }
            if sides.is_empty() {
                return None;
            }
            let (a, b) = sides[rng.index(sides.len())];
            Some(match rng.below(8) {
                0 => alnum(rng, 1, 6) + "z",
                _ => in_range(rng, a, b).to_string(),
            })
        }
        _ => None,
    }
}

pub fn attr_paths(program: &DmirProgram, state: &KernelState, driver: &str, fname: &str) -> Vec<String> {
    let d = program.driver(driver).unwrap();
    let (dirs, _) = flatten_attrs_with_dirs(d).into_iter().find(|(_, a)| a.fname == fname).unwrap();
    state
        .tree()
        .nodes
        .iter()
        .filter(|n| n.driver == driver)
        .map(|n| {
            let mut p = n.sysfs_path.clone();
            for g in &dirs {
                p = format!("{p}/{g}");
            }
            format!("{p}/{fname}")
        })
        .collect()
}

pub fn status(state: &mut KernelState, path: &str, value: &str) -> Status {
    state.reset();
    let r = state.write_param(path, value);
    assert!(r.verdict.is_none() && r.engine_error.is_none(), "{path} <- {value:?}: {r:?}");
    r.statuses[0][0].status
}

