//! String conversion helpers available to store blocks.
//!
//! Inputs are matched exactly: no whitespace trimming and no trailing newline.

use crate::dmir::{scan_directives, ScanPiece};

use super::Value;

/// Decimal digits with an optional leading `+`, fitting in 32 unsigned bits.
pub fn kstrtouint(s: &str) -> Option<u32> {
    let digits = s.strip_prefix('+').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Decimal digits with an optional sign, fitting in 32 signed bits.
pub fn kstrtoint(s: &str) -> Option<i32> {
    let (neg, digits) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mag: i64 = digits.parse().ok()?;
    i32::try_from(if neg { -mag } else { mag }).ok()
}

pub const BOOL_TRUE: [&str; 4] = ["1", "y", "Y", "on"];
pub const BOOL_FALSE: [&str; 4] = ["0", "n", "N", "off"];
pub const BOOL_WORDS: [&str; 2] = ["true", "false"];

pub fn kstrtobool(s: &str) -> Option<bool> {
    if BOOL_TRUE.contains(&s) || s == "true" {
        Some(true)
    } else if BOOL_FALSE.contains(&s) || s == "false" {
        Some(false)
    } else {
        None
    }
}

/// Every spelling `kstrtobool` accepts.
pub fn bool_tokens() -> Vec<&'static str> {
    BOOL_TRUE
        .iter()
        .chain(BOOL_FALSE.iter())
        .chain(BOOL_WORDS.iter())
        .copied()
        .collect()
}

/// Index of `s` in `options`, or -1.
pub fn match_string(s: &str, options: &[String]) -> i64 {
    options
        .iter()
        .position(|o| o == s)
        .map_or(-1, |i| i as i64)
}

/// Parse `s` against a `%u`/`%d`/`%s` format. The whole input must be consumed.
/// `%s` takes a non-empty run of non-whitespace characters, stopping early at
/// the literal character that follows it in the format.
pub fn scan(s: &str, fmt: &str) -> Option<Vec<Value>> {
    let pieces = scan_directives(fmt).ok()?;
    let b = s.as_bytes();
    let mut pos = 0;
    let mut out = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        match p {
            ScanPiece::Lit(c) => {
                let mut tmp = [0u8; 4];
                let lit = c.encode_utf8(&mut tmp).as_bytes();
                if !b[pos..].starts_with(lit) {
                    return None;
                }
                pos += lit.len();
            }
            ScanPiece::Uint | ScanPiece::Int => {
                let start = pos;
                if *p == ScanPiece::Int && b.get(pos) == Some(&b'-') {
                    pos += 1;
                }
                while b.get(pos).is_some_and(u8::is_ascii_digit) {
                    pos += 1;
                }
                let tok = &s[start..pos];
                let v = if *p == ScanPiece::Uint {
                    kstrtouint(tok)? as i64
                } else {
                    kstrtoint(tok)? as i64
                };
                out.push(Value::Int(v));
            }
            ScanPiece::Str => {
                let stop = match pieces.get(i + 1) {
                    Some(ScanPiece::Lit(c)) => Some(*c),
                    _ => None,
                };
                let start = pos;
                for (off, ch) in s[pos..].char_indices() {
                    if ch.is_whitespace() || Some(ch) == stop {
                        pos = start + off;
                        break;
                    }
                    pos = start + off + ch.len_utf8();
                }
                if pos == start {
                    return None;
                }
                out.push(Value::Str(s[start..pos].to_string()));
            }
        }
    }
    (pos == b.len()).then_some(out)
}
