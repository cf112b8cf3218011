//! The line format for descriptors.
//!
//! ```text
//! line  := kind NAME ["[" DRIVER "]"] "(" [arg {"," arg}] ")" ["-> fd"]
//! arg   := role [NAME] ":" gen
//! gen   := "fd" | "seed" | "flags" | "by_path"
//!        | "path" "[" STR {"," STR} "]"
//!        | "choice" "[" [STR ":" spec {"," STR ":" spec}] "]"
//!        | spec
//! spec  := "string_set" "[" STR {"," STR} "]" | "uint_range" "[" INT "," INT "]"
//!        | "int_range" "[" INT "," INT "]" | "bool" | "formatted" "[" STR "]"
//!        | "any_string" | "ignores_input" | "undetermined" "[" STR "]"
//! ```

use thiserror::Error;

use crate::dmir::quote;
use crate::extractor::{ValueKind, ValueSpec};

use super::{ArgRole, ArgSpec, DescKind, Descriptor, Generator};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct DescParseError {
    pub line: usize,
    pub msg: String,
}

fn spec_text(s: &ValueSpec) -> String {
    let strs = |v: &[String]| v.iter().map(|s| quote(s)).collect::<Vec<_>>().join(", ");
    match s.kind {
        ValueKind::StringSet => format!("string_set[{}]", strs(s.strings.as_deref().unwrap_or_default())),
        ValueKind::UintRange | ValueKind::IntRange => {
            format!("{}[{}, {}]", s.kind.as_str(), s.lo.unwrap_or(0), s.hi.unwrap_or(0))
        }
        ValueKind::Formatted => format!("formatted[{}]", quote(s.format.as_deref().unwrap_or(""))),
        ValueKind::Undetermined => format!("undetermined[{}]", quote(s.reason.as_deref().unwrap_or(""))),
        k => k.as_str().to_string(),
    }
}

fn gen_text(g: &Generator) -> String {
    match g {
        Generator::Handle => "fd".into(),
        Generator::Seed => "seed".into(),
        Generator::Flags => "flags".into(),
        Generator::ByPath => "by_path".into(),
        Generator::Paths(p) => format!(
            "path[{}]",
            p.iter().map(|s| quote(s)).collect::<Vec<_>>().join(", ")
        ),
        Generator::Choice(c) => format!(
            "choice[{}]",
            c.iter()
                .map(|(p, s)| format!("{}: {}", quote(p), spec_text(s)))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        Generator::Value(s) => spec_text(s),
    }
}

fn line(d: &Descriptor) -> String {
    let mut out = format!("{} {}", d.kind.as_str(), d.name);
    if let Some(drv) = &d.driver {
        out.push_str(&format!(" [{drv}]"));
    }
    let args: Vec<String> = d
        .arg_specs
        .iter()
        .map(|a| {
            let role = if a.name.is_empty() {
                a.role.as_str().to_string()
            } else {
                format!("{} {}", a.role.as_str(), a.name)
            };
            format!("{role}: {}", gen_text(&a.generator))
        })
        .collect();
    out.push_str(&format!(" ({})", args.join(", ")));
    if d.produces_handle {
        out.push_str(" -> fd");
    }
    out
}

/// One line per descriptor, in the given order.
pub fn render(descs: &[Descriptor]) -> String {
    descs.iter().map(|d| line(d) + "\n").collect()
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Int(i64),
    Punct(char),
    Arrow,
}

fn lex(s: &str) -> Result<Vec<Tok>, String> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == '"' {
            let start = i;
            i += 1;
            while i < b.len() && b[i] != b'"' {
                i += if b[i] == b'\\' { 2 } else { 1 };
            }
            if i >= b.len() {
                return Err("unterminated string".into());
            }
            i += 1;
            let v: String = serde_json::from_str(&s[start..i]).map_err(|e| format!("bad string: {e}"))?;
            out.push(Tok::Str(v));
        } else if c == '-' && b.get(i + 1) == Some(&b'>') {
            out.push(Tok::Arrow);
            i += 2;
        } else if c == '-' || c.is_ascii_digit() {
            let start = i;
            i += 1;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Tok::Int(s[start..i].parse().map_err(|_| format!("bad integer `{}`", &s[start..i]))?));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'$') {
                i += 1;
            }
            out.push(Tok::Word(s[start..i].to_string()));
        } else if "[](),:".contains(c) {
            out.push(Tok::Punct(c));
            i += 1;
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

struct P {
    toks: Vec<Tok>,
    pos: usize,
}

impl P {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Result<Tok, String> {
        let t = self.toks.get(self.pos).cloned().ok_or("unexpected end of line")?;
        self.pos += 1;
        Ok(t)
    }

    fn punct(&mut self, c: char) -> Result<(), String> {
        match self.next()? {
            Tok::Punct(x) if x == c => Ok(()),
            t => Err(format!("expected `{c}`, found {t:?}")),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn word(&mut self) -> Result<String, String> {
        match self.next()? {
            Tok::Word(w) => Ok(w),
            t => Err(format!("expected a name, found {t:?}")),
        }
    }

    fn string(&mut self) -> Result<String, String> {
        match self.next()? {
            Tok::Str(s) => Ok(s),
            t => Err(format!("expected a string, found {t:?}")),
        }
    }

    fn int(&mut self) -> Result<i64, String> {
        match self.next()? {
            Tok::Int(v) => Ok(v),
            t => Err(format!("expected an integer, found {t:?}")),
        }
    }

    fn strings(&mut self) -> Result<Vec<String>, String> {
        self.punct('[')?;
        let mut out = vec![self.string()?];
        while self.eat(',') {
            out.push(self.string()?);
        }
        self.punct(']')?;
        Ok(out)
    }

    fn spec(&mut self, w: &str) -> Result<ValueSpec, String> {
        Ok(match w {
            "string_set" => ValueSpec::string_set(self.strings()?),
            "uint_range" | "int_range" => {
                self.punct('[')?;
                let lo = self.int()?;
                self.punct(',')?;
                let hi = self.int()?;
                self.punct(']')?;
                let kind = if w == "uint_range" {
                    ValueKind::UintRange
                } else {
                    ValueKind::IntRange
                };
                ValueSpec::range(kind, lo, hi)
            }
            "formatted" => {
                self.punct('[')?;
                let f = self.string()?;
                self.punct(']')?;
                ValueSpec::formatted(&f)
            }
            "undetermined" => {
                self.punct('[')?;
                let r = self.string()?;
                self.punct(']')?;
                ValueSpec::undetermined(&r)
            }
            "bool" => ValueSpec::simple(ValueKind::Bool),
            "any_string" => ValueSpec::simple(ValueKind::AnyString),
            "ignores_input" => ValueSpec::simple(ValueKind::IgnoresInput),
            other => return Err(format!("unknown generator `{other}`")),
        })
    }

    fn generator(&mut self) -> Result<Generator, String> {
        let w = self.word()?;
        Ok(match w.as_str() {
            "fd" => Generator::Handle,
            "seed" => Generator::Seed,
            "flags" => Generator::Flags,
            "by_path" => Generator::ByPath,
            "path" => Generator::Paths(self.strings()?),
            "choice" => {
                self.punct('[')?;
                let mut out = Vec::new();
                if !self.eat(']') {
                    loop {
                        let p = self.string()?;
                        self.punct(':')?;
                        let sw = self.word()?;
                        out.push((p, self.spec(&sw)?));
                        if !self.eat(',') {
                            break;
                        }
                    }
                    self.punct(']')?;
                }
                Generator::Choice(out)
            }
            _ => Generator::Value(self.spec(&w)?),
        })
    }

    fn descriptor(&mut self) -> Result<Descriptor, String> {
        let kw = self.word()?;
        let kind = DescKind::from_name(&kw).ok_or_else(|| format!("unknown kind `{kw}`"))?;
        let name = self.word()?;
        let driver = if self.eat('[') {
            let d = self.word()?;
            self.punct(']')?;
            Some(d)
        } else {
            None
        };
        self.punct('(')?;
        let mut args = Vec::new();
        if !self.eat(')') {
            loop {
                let rw = self.word()?;
                let role = ArgRole::from_name(&rw).ok_or_else(|| format!("unknown role `{rw}`"))?;
                let arg_name = if role == ArgRole::OpArg { self.word()? } else { String::new() };
                self.punct(':')?;
                args.push(ArgSpec {
                    role,
                    name: arg_name,
                    generator: self.generator()?,
                });
                if !self.eat(',') {
                    break;
                }
            }
            self.punct(')')?;
        }
        let produces_handle = match self.peek() {
            Some(Tok::Arrow) => {
                self.pos += 1;
                match self.word()?.as_str() {
                    "fd" => true,
                    w => return Err(format!("expected `fd` after `->`, found `{w}`")),
                }
            }
            _ => false,
        };
        if let Some(t) = self.peek() {
            return Err(format!("trailing input {t:?}"));
        }
        let op = (kind == DescKind::DriverOp).then(|| name.split('$').next().unwrap_or("").to_string());
        let consumes_handle = args.iter().any(|a| a.role == ArgRole::Fd);
        Ok(Descriptor {
            name,
            kind,
            driver,
            op,
            arg_specs: args,
            produces_handle,
            consumes_handle,
        })
    }
}

/// Parse rendered descriptors. Blank lines and `#` comments are skipped.
pub fn parse_descriptors(text: &str) -> Result<Vec<Descriptor>, DescParseError> {
    let mut out = Vec::new();
    for (n, l) in text.lines().enumerate() {
        let t = l.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let err = |msg| DescParseError { line: n + 1, msg };
        let toks = lex(t).map_err(err)?;
        let mut p = P { toks, pos: 0 };
        out.push(p.descriptor().map_err(err)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_renders_empty() {
        assert_eq!(render(&[]), "");
        assert_eq!(parse_descriptors("").unwrap(), vec![]);
    }

    #[test]
    fn one_line_round_trip() {
        let d = Descriptor {
            name: "syz_mod_dev$loop".into(),
            kind: DescKind::SyzModDev,
            driver: Some("loop".into()),
            op: None,
            arg_specs: vec![
                ArgSpec {
                    role: ArgRole::ParamPath,
                    name: String::new(),
                    generator: Generator::Choice(vec![
                        ("/sys/block/loop#/mode".into(), ValueSpec::string_set(vec!["a\"b".into(), "c".into()])),
                        ("/sys/module/loop/parameters/n".into(), ValueSpec::range(ValueKind::IntRange, -3, 4)),
                        ("/sys/block/loop#/f".into(), ValueSpec::formatted("%u:%s")),
                        ("/sys/block/loop#/u".into(), ValueSpec::undetermined("byte-wise processing")),
                    ]),
                },
                ArgSpec {
                    role: ArgRole::ParamVal,
                    name: String::new(),
                    generator: Generator::ByPath,
                },
                ArgSpec {
                    role: ArgRole::DevPath,
                    name: String::new(),
                    generator: Generator::Paths(vec!["/dev/loop#".into()]),
                },
                ArgSpec {
                    role: ArgRole::RngSeed,
                    name: String::new(),
                    generator: Generator::Seed,
                },
                ArgSpec {
                    role: ArgRole::Flags,
                    name: String::new(),
                    generator: Generator::Flags,
                },
            ],
            produces_handle: true,
            consumes_handle: false,
        };
        let text = render(std::slice::from_ref(&d));
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("syz_mod_dev syz_mod_dev$loop [loop] (param_path: choice["));
        assert_eq!(parse_descriptors(&text).unwrap(), vec![d]);
    }

    #[test]
    fn op_line() {
        let t = "driver_op ioctl$loop [loop] (fd: fd, op_arg size: uint_range[0, 4294967295], op_arg name: any_string)\n";
        let d = parse_descriptors(t).unwrap();
        assert_eq!(d[0].op.as_deref(), Some("ioctl"));
        assert!(d[0].consumes_handle);
        assert_eq!(render(&d), t);
    }

    #[test]
    fn errors_carry_line() {
        let e = parse_descriptors("open_dev open$x (dev_path: path[\"/dev/x\"])\nbogus x ()").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
