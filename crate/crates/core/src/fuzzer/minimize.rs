//! Test-case minimization by greedy call removal, then argument simplification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::{Action, ArgValue, OpenFlags, TestCase};
use crate::vkernel::{CoverageMap, KernelState};

use super::mutate::remove_call;

/// What a minimized case must keep doing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Edges(CoverageMap),
    Title(String),
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum MinimizeError {
    #[error("the original case does not reproduce its target")]
    NotReproducible,
}

pub fn achieves(state: &mut KernelState, case: &TestCase, target: &Target) -> bool {
    let r = state.run_case(case);
    match target {
        Target::Edges(e) => r.coverage.is_superset(e),
        Target::Title(t) => r.title() == Some(t.as_str()),
    }
}

/// Extra schedule seeds tried when a smaller case misses the target under its own seed.
const RESEEDS: u64 = 8;

/// `case` itself if it reaches `target`, otherwise the first of a few
/// reseeded copies that does.
fn reaches(state: &mut KernelState, case: &TestCase, target: &Target) -> Option<TestCase> {
    if achieves(state, case, target) {
        return Some(case.clone());
    }
    if case.threads.len() < 2 {
        return None;
    }
    (0..RESEEDS).find_map(|s| {
        let mut c = case.clone();
        c.schedule_seed = s;
        achieves(state, &c, target).then_some(c)
    })
}

/// Shrink `case` while it still reaches `target` under deterministic replay.
/// The result admits no single call removal that keeps the target.
pub fn minimize(state: &mut KernelState, case: &TestCase, target: &Target) -> Result<TestCase, MinimizeError> {
    if !achieves(state, case, target) {
        return Err(MinimizeError::NotReproducible);
    }
    let mut cur = case.clone();

    loop {
        let mut changed = false;
        let ids: Vec<u32> = cur.calls().map(|c| c.id).collect();
        for id in ids {
            if !cur.calls().any(|c| c.id == id) {
                continue;
            }
            let mut cand = cur.clone();
            remove_call(&mut cand, id);
            if cand.call_count() == 0 {
                continue;
            }
            if let Some(c) = reaches(state, &cand, target) {
                cur = c;
                changed = true;
            }
        }
        if cur.threads.iter().any(Vec::is_empty) {
            let mut cand = cur.clone();
            cand.threads.retain(|t| !t.is_empty());
            if let Some(c) = reaches(state, &cand, target) {
                cur = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut try_with = |cur: &mut TestCase, edit: &dyn Fn(&mut TestCase) -> bool| {
        let mut cand = cur.clone();
        if edit(&mut cand) && cand != *cur && achieves(state, &cand, target) {
            *cur = cand;
        }
    };
    try_with(&mut cur, &|c| {
        c.schedule_seed = 0;
        true
    });
    let positions: Vec<(usize, usize)> = cur
        .threads
        .iter()
        .enumerate()
        .flat_map(|(t, cs)| (0..cs.len()).map(move |i| (t, i)))
        .collect();
    for (t, i) in positions {
        let n_args = match &cur.threads[t][i].action {
            Action::Op { args, .. } => args.len(),
            _ => 0,
        };
        for k in 0..n_args {
            try_with(&mut cur, &|c| match &mut c.threads[t][i].action {
                Action::Op { args, .. } => {
                    args[k] = match args[k] {
                        ArgValue::Int(_) => ArgValue::Int(0),
                        ArgValue::Str(_) => ArgValue::Str(String::new()),
                    };
                    true
                }
                _ => false,
            });
        }
        try_with(&mut cur, &|c| match &mut c.threads[t][i].action {
            Action::SyzModDev { rng_seed, .. } => {
                *rng_seed = 0;
                true
            }
            _ => false,
        });
        try_with(&mut cur, &|c| match &mut c.threads[t][i].action {
            Action::OpenDev { flags, .. } | Action::SyzModDev { flags, .. } => {
                *flags = OpenFlags::ReadWrite;
                true
            }
            _ => false,
        });
    }
    Ok(cur)
}
