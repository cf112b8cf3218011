//! Test cases: per-thread call sequences plus a schedule seed.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArgValue {
    Int(i64),
    Str(String),
}

/// Open mode carried by `open_dev` and `syz_mod_dev`. Device nodes accept all three.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpenFlags {
    Read,
    Write,
    #[default]
    ReadWrite,
}

impl OpenFlags {
    pub const ALL: [OpenFlags; 3] = [OpenFlags::Read, OpenFlags::Write, OpenFlags::ReadWrite];

    pub fn as_str(self) -> &'static str {
        match self {
            OpenFlags::Read => "read",
            OpenFlags::Write => "write",
            OpenFlags::ReadWrite => "read_write",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "call", rename_all = "snake_case")]
pub enum Action {
    /// Open a `/dev` node; `#` in the path matches any run of digits.
    OpenDev {
        path: String,
        #[serde(default)]
        flags: OpenFlags,
    },
    /// Invoke a driver op on the device opened by call `fd`.
    Op {
        fd: u32,
        op: String,
        #[serde(default)]
        args: Vec<ArgValue>,
    },
    WriteParam { path: String, value: String },
    /// Write a parameter, then open a device node. `rng_seed` selects both
    /// the device and the parameter file belonging to it.
    SyzModDev {
        param_path: String,
        value: String,
        dev_path: String,
        rng_seed: u64,
        #[serde(default)]
        flags: OpenFlags,
    },
}

impl Action {
    pub fn produces_handle(&self) -> bool {
        matches!(self, Action::OpenDev { .. } | Action::SyzModDev { .. })
    }

    pub fn consumed_handle(&self) -> Option<u32> {
        match self {
            Action::Op { fd, .. } => Some(*fd),
            _ => None,
        }
    }

    pub fn writes_param(&self) -> bool {
        matches!(self, Action::WriteParam { .. } | Action::SyzModDev { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Call {
    pub id: u32,
    /// Name of the descriptor the call instantiates.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub desc: String,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestCase {
    pub schedule_seed: u64,
    pub threads: Vec<Vec<Call>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseLimits {
    pub max_threads: usize,
    pub max_calls_per_thread: usize,
}

impl Default for CaseLimits {
    fn default() -> Self {
        Self {
            max_threads: 4,
            max_calls_per_thread: 16,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CaseError {
    #[error("case has {0} threads, limit is {1}")]
    TooManyThreads(usize, usize),
    #[error("thread {0} has {1} calls, limit is {2}")]
    TooManyCalls(usize, usize, usize),
    #[error("duplicate call id {0}")]
    DuplicateId(u32),
    #[error("call {0} uses handle {1}, which no call produces")]
    DanglingHandle(u32, u32),
    #[error("call {0} uses handle {1}, produced later on the same thread")]
    HandleOrder(u32, u32),
}

impl TestCase {
    pub fn calls(&self) -> impl Iterator<Item = &Call> {
        self.threads.iter().flatten()
    }

    pub fn call_count(&self) -> usize {
        self.threads.iter().map(Vec::len).sum()
    }

    pub fn next_id(&self) -> u32 {
        self.calls().map(|c| c.id + 1).max().unwrap_or(0)
    }

    /// Check size limits and handle references.
    pub fn validate(&self, limits: &CaseLimits) -> Result<(), CaseError> {
        if self.threads.len() > limits.max_threads {
            return Err(CaseError::TooManyThreads(self.threads.len(), limits.max_threads));
        }
        let mut producers: HashMap<u32, (usize, usize)> = HashMap::new();
        let mut seen = HashMap::new();
        for (t, calls) in self.threads.iter().enumerate() {
            if calls.len() > limits.max_calls_per_thread {
                return Err(CaseError::TooManyCalls(t, calls.len(), limits.max_calls_per_thread));
            }
            for (i, c) in calls.iter().enumerate() {
                if seen.insert(c.id, ()).is_some() {
                    return Err(CaseError::DuplicateId(c.id));
                }
                if c.action.produces_handle() {
                    producers.insert(c.id, (t, i));
                }
            }
        }
        for (t, calls) in self.threads.iter().enumerate() {
            for (i, c) in calls.iter().enumerate() {
                if let Some(fd) = c.action.consumed_handle() {
                    match producers.get(&fd) {
                        None => return Err(CaseError::DanglingHandle(c.id, fd)),
                        Some(&(pt, pi)) if pt == t && pi >= i => {
                            return Err(CaseError::HandleOrder(c.id, fd))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("test cases always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(id: u32) -> Call {
        Call {
            id,
            desc: "open$loop".into(),
            action: Action::OpenDev {
                path: "/dev/loop#".into(),
                flags: OpenFlags::ReadWrite,
            },
        }
    }

    fn op(id: u32, fd: u32) -> Call {
        Call {
            id,
            desc: String::new(),
            action: Action::Op {
                fd,
                op: "ioctl".into(),
                args: vec![ArgValue::Int(3), ArgValue::Str("x".into())],
            },
        }
    }

    #[test]
    fn json_round_trip() {
        let c = TestCase {
            schedule_seed: u64::MAX,
            threads: vec![
                vec![open(0), op(1, 0)],
                vec![Call {
                    id: 2,
                    desc: String::new(),
                    action: Action::SyzModDev {
                        param_path: "/sys/block/loop#/poll_rate".into(),
                        value: "0".into(),
                        dev_path: "/dev/loop#".into(),
                        rng_seed: 7,
                        flags: OpenFlags::Read,
                    },
                }],
            ],
        };
        let back = TestCase::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert!(c.to_json().contains("\"call\": \"syz_mod_dev\""));
    }

    #[test]
    fn validation() {
        let lim = CaseLimits::default();
        let ok = TestCase {
            schedule_seed: 0,
            threads: vec![vec![open(0)], vec![op(1, 0)]],
        };
        assert!(ok.validate(&lim).is_ok());
        let dangling = TestCase {
            schedule_seed: 0,
            threads: vec![vec![op(1, 9)]],
        };
        assert_eq!(dangling.validate(&lim), Err(CaseError::DanglingHandle(1, 9)));
        let order = TestCase {
            schedule_seed: 0,
            threads: vec![vec![op(1, 0), open(0)]],
        };
        assert_eq!(order.validate(&lim), Err(CaseError::HandleOrder(1, 0)));
        let dup = TestCase {
            schedule_seed: 0,
            threads: vec![vec![open(0), open(0)]],
        };
        assert_eq!(dup.validate(&lim), Err(CaseError::DuplicateId(0)));
        let many = TestCase {
            schedule_seed: 0,
            threads: vec![vec![]; 5],
        };
        assert!(many.validate(&lim).is_err());
    }
}
