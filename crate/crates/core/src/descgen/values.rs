//! Value generators for `param_val` and op arguments.
//!
//! Nine draws in ten come from the accepted set. The rest are hostile
//! mutants: the empty string, an overlong string, set members with a
//! trailing `x`, and range bounds pushed one step outside.

use crate::dmir::{scan_directives, ScanPiece};
use crate::extractor::{ValueKind, ValueSpec};
use crate::vkernel::helpers::bool_tokens;
use crate::SplitMix64;

pub const HOSTILE_RATE: f64 = 0.1;
pub const OVERLONG_LEN: usize = 300;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub value: String,
    pub hostile: bool,
}

pub fn overlong() -> String {
    "A".repeat(OVERLONG_LEN)
}

/// The fixed mutant list for a spec.
pub fn mutants(spec: &ValueSpec) -> Vec<String> {
    let mut out = vec![String::new(), overlong()];
    match spec.kind {
        ValueKind::StringSet => {
            for s in spec.strings.iter().flatten() {
                out.push(format!("{s}x"));
            }
        }
        ValueKind::UintRange | ValueKind::IntRange => {
            let (lo, hi) = (spec.lo.unwrap_or(0), spec.hi.unwrap_or(0));
            out.push(lo.saturating_sub(1).to_string());
            out.push(hi.saturating_add(1).to_string());
        }
        ValueKind::Bool => out.push("2".into()),
        _ => {}
    }
    out
}

fn token(rng: &mut SplitMix64, min: usize, max: usize) -> String {
    const ALPHA: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
    let len = min + rng.index(max - min + 1);
    (0..len).map(|_| ALPHA[rng.index(ALPHA.len())] as char).collect()
}

/// A number in `[lo, hi]`, favoring bounds and small magnitudes.
pub fn number(rng: &mut SplitMix64, lo: i64, hi: i64) -> i64 {
    match rng.below(8) {
        0 => lo,
        1 => hi,
        2 | 3 => {
            let base = lo.max(0).min(hi);
            let top = base.saturating_add(16).min(hi);
            rng.range_i64(base, top)
        }
        _ => rng.range_i64(lo, hi),
    }
}

fn formatted(rng: &mut SplitMix64, fmt: &str) -> String {
    let mut out = String::new();
    for p in scan_directives(fmt).unwrap_or_default() {
        match p {
            ScanPiece::Lit(c) => out.push(c),
            ScanPiece::Uint => out.push_str(&number(rng, 0, u32::MAX as i64).to_string()),
            ScanPiece::Int => {
                out.push_str(&number(rng, i32::MIN as i64, i32::MAX as i64).to_string())
            }
            ScanPiece::Str => out.push_str(&token(rng, 1, 8)),
        }
    }
    out
}

/// One value the spec accepts.
pub fn valid(spec: &ValueSpec, rng: &mut SplitMix64) -> String {
    match spec.kind {
        ValueKind::StringSet => rng
            .pick(spec.strings.as_deref().unwrap_or_default())
            .cloned()
            .unwrap_or_default(),
        ValueKind::UintRange | ValueKind::IntRange => {
            number(rng, spec.lo.unwrap_or(0), spec.hi.unwrap_or(0)).to_string()
        }
        ValueKind::Bool => rng.pick(&bool_tokens()).expect("non-empty").to_string(),
        ValueKind::Formatted => formatted(rng, spec.format.as_deref().unwrap_or("")),
        ValueKind::AnyString | ValueKind::IgnoresInput | ValueKind::Undetermined => token(rng, 0, 12),
    }
}

pub fn sample(spec: &ValueSpec, rng: &mut SplitMix64) -> Sample {
    if rng.chance(HOSTILE_RATE) {
        let m = mutants(spec);
        Sample {
            value: m[rng.index(m.len())].clone(),
            hostile: true,
        }
    } else {
        Sample {
            value: valid(spec, rng),
            hostile: false,
        }
    }
}
