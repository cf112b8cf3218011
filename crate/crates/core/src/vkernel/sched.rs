//! Scheduling policies for the cooperative interpreter.
//!
//! Only genuine choices reach a scheduler: a scheduling point with a single
//! runnable thread, or a wildcard with a single match, is resolved without
//! consulting it and leaves no trace entry.

use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;

/// One recorded choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceEntry {
    /// Thread `thread` was resumed.
    Thread { thread: usize },
    /// Wildcard expansion chose match `index` out of `of`.
    Pick { index: usize, of: usize },
}

pub trait Scheduler {
    /// Index into `runnable` (thread ids, ascending, at least two).
    fn choose_thread(&mut self, runnable: &[usize]) -> usize;
    /// Index in `0..n`, `n >= 2`.
    fn pick(&mut self, n: usize) -> usize;
}

/// Uniform random choices from a SplitMix64 stream.
pub struct SeededScheduler {
    rng: SplitMix64,
}

impl SeededScheduler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: SplitMix64::new(seed),
        }
    }
}

impl Scheduler for SeededScheduler {
    fn choose_thread(&mut self, runnable: &[usize]) -> usize {
        self.rng.index(runnable.len())
    }

    fn pick(&mut self, n: usize) -> usize {
        self.rng.index(n)
    }
}

/// Follows a recorded trace. Divergence falls back to the first option and
/// is remembered.
pub struct ReplayScheduler<'a> {
    trace: &'a [TraceEntry],
    pos: usize,
    pub diverged: bool,
}

impl<'a> ReplayScheduler<'a> {
    pub fn new(trace: &'a [TraceEntry]) -> Self {
        Self {
            trace,
            pos: 0,
            diverged: false,
        }
    }

    fn next(&mut self) -> Option<TraceEntry> {
        let e = self.trace.get(self.pos).copied();
        self.pos += 1;
        e
    }

    /// True if the run consumed the whole trace without diverging.
    pub fn exact(&self) -> bool {
        !self.diverged && self.pos == self.trace.len()
    }
}

impl Scheduler for ReplayScheduler<'_> {
    fn choose_thread(&mut self, runnable: &[usize]) -> usize {
        match self.next() {
            Some(TraceEntry::Thread { thread }) => {
                runnable.iter().position(|&t| t == thread).unwrap_or_else(|| {
                    self.diverged = true;
                    0
                })
            }
            _ => {
                self.diverged = true;
                0
            }
        }
    }

    fn pick(&mut self, n: usize) -> usize {
        match self.next() {
            Some(TraceEntry::Pick { index, of }) if of == n && index < n => index,
            _ => {
                self.diverged = true;
                0
            }
        }
    }
}

/// Depth-first enumeration of every choice sequence. Each run follows
/// `prefix` and then takes option 0; [`Explorer::advance`] moves to the next
/// unexplored sequence.
#[derive(Clone, Debug, Default)]
pub struct Explorer {
    prefix: Vec<usize>,
    pos: usize,
    /// (choice, options) for every decision of the current run.
    log: Vec<(usize, usize)>,
}

impl Explorer {
    pub fn new() -> Self {
        Self::default()
    }

    fn choose(&mut self, n: usize) -> usize {
        let c = self.prefix.get(self.pos).copied().unwrap_or(0).min(n - 1);
        self.pos += 1;
        self.log.push((c, n));
        c
    }

    /// Prepare the next run. Returns false once every sequence has been tried.
    pub fn advance(&mut self) -> bool {
        while let Some((c, n)) = self.log.pop() {
            if c + 1 < n {
                self.prefix = self.log.iter().map(|&(c, _)| c).collect();
                self.prefix.push(c + 1);
                self.log.clear();
                self.pos = 0;
                return true;
            }
        }
        false
    }

    /// Decisions made in the current run.
    pub fn depth(&self) -> usize {
        self.log.len()
    }
}

impl Scheduler for Explorer {
    fn choose_thread(&mut self, runnable: &[usize]) -> usize {
        self.choose(runnable.len())
    }

    fn pick(&mut self, n: usize) -> usize {
        self.choose(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explorer_enumerates_product() {
        // Two binary decisions then a ternary one: 12 sequences.
        let mut ex = Explorer::new();
        let mut seen = std::collections::BTreeSet::new();
        loop {
            let a = ex.pick(2);
            let b = ex.pick(2);
            let c = ex.pick(3);
            assert!(seen.insert((a, b, c)));
            if !ex.advance() {
                break;
            }
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn explorer_handles_shape_dependent_trees() {
        // Second decision exists only on branch 1.
        let mut ex = Explorer::new();
        let mut leaves = 0;
        loop {
            if ex.pick(2) == 1 {
                ex.pick(3);
            }
            leaves += 1;
            if !ex.advance() {
                break;
            }
        }
        assert_eq!(leaves, 4);
    }

    #[test]
    fn replay_detects_divergence() {
        let trace = [TraceEntry::Thread { thread: 1 }, TraceEntry::Pick { index: 1, of: 2 }];
        let mut r = ReplayScheduler::new(&trace);
        assert_eq!(r.choose_thread(&[0, 1]), 1);
        assert_eq!(r.pick(2), 1);
        assert!(r.exact());
        let mut r = ReplayScheduler::new(&trace);
        assert_eq!(r.choose_thread(&[0, 2]), 0);
        assert!(r.diverged);
    }
}
