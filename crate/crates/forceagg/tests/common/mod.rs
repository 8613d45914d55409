//! Independent reference implementations shared by the integration tests.
//!
//! Everything here is brute force by construction and stays independent of
//! the library's solution paths: partitions are enumerated exhaustively and
//! hypothesis sets are checked subset by subset.

// Each test binary uses its own subset of these helpers.
#![allow(dead_code)]

use std::collections::BTreeSet;

use forceagg::classify::{Hypothesis, SubProblem};
use forceagg::domain::TrackId;
use forceagg::dsclust::Partition;
use forceagg::rng::CounterRng;

/// Every partition of `n` elements into at most `max_blocks` blocks, in
/// restricted-growth form.
pub fn all_partitions(n: usize, max_blocks: usize) -> Vec<Vec<usize>> {
    fn rec(
        i: usize,
        blocks: usize,
        max_blocks: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if i == current.len() {
            out.push(current.clone());
            return;
        }
        let limit = (blocks + 1).min(max_blocks);
        for b in 0..limit {
            current[i] = b;
            rec(i + 1, blocks.max(b + 1), max_blocks, current, out);
        }
    }
    let mut out = Vec::new();
    rec(0, 0, max_blocks, &mut vec![0; n], &mut out);
    out
}

/// Minimal metaconflict over all partitions with at most `max_blocks`
/// blocks.
pub fn brute_force_min_metaconflict(
    n: usize,
    max_blocks: usize,
    conflict: impl Fn(usize, usize) -> f64,
) -> f64 {
    all_partitions(n, max_blocks)
        .into_iter()
        .map(|assignment| {
            forceagg::dsclust::metaconflict(&Partition::new(assignment, max_blocks), &conflict)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Canonical identity of a hypothesis selection: the sorted member sets.
pub fn selection_key(hyps: &[&Hypothesis<f64>]) -> Vec<Vec<TrackId>> {
    let mut key: Vec<Vec<TrackId>> = hyps.iter().map(|h| h.member_vec()).collect();
    key.sort();
    key
}

/// Exhaustive optimum over all complete consistent subsets of a
/// sub-problem, with the same tie-breaks as the solver: lowest conflict,
/// then fewest hypotheses, then lexicographic member listing.
pub fn exhaustive_best_consistent(
    sub: &SubProblem<f64>,
) -> (f64, Vec<Vec<TrackId>>) {
    let n = sub.hypotheses.len();
    assert!(n <= 20, "exhaustive search needs a small sub-problem");
    let mut best: Option<(f64, usize, Vec<Vec<TrackId>>)> = None;
    'subsets: for mask in 1u32..(1 << n) {
        let chosen: Vec<&Hypothesis<f64>> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| &sub.hypotheses[i])
            .collect();
        // Pairwise consistent.
        for i in 0..chosen.len() {
            for j in (i + 1)..chosen.len() {
                if chosen[i].members.iter().any(|id| chosen[j].members.contains(id)) {
                    continue 'subsets;
                }
            }
        }
        // Complete.
        let covered: BTreeSet<TrackId> = chosen
            .iter()
            .flat_map(|h| h.members.iter().copied())
            .collect();
        if covered != sub.tracks {
            continue;
        }
        let conflict = 1.0 - chosen.iter().fold(1.0, |acc, h| acc * (1.0 - h.conflict));
        let key = selection_key(&chosen);
        let candidate = (conflict, chosen.len(), key);
        let better = match &best {
            None => true,
            Some((bc, bl, bk)) => {
                candidate.0 < *bc
                    || (candidate.0 == *bc
                        && (candidate.1 < *bl || (candidate.1 == *bl && candidate.2 < *bk)))
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    let (conflict, _, key) = best.expect("at least one complete consistent subset");
    (conflict, key)
}

/// Random hypothesis pool over `n_tracks` elements: localized member sets
/// with sub-threshold conflicts, plus one fallback singleton per track so
/// completeness is always reachable.
pub fn random_hypothesis_pool(
    rng: &CounterRng,
    trial: u64,
    n_tracks: usize,
    extra_hyps: usize,
) -> Vec<Hypothesis<f64>> {
    let mut hyps = Vec::new();
    for h in 0..extra_hyps {
        let anchor = (rng.uniform(&[trial, 1, h as u64]) * n_tracks as f64) as usize;
        let mut members: BTreeSet<TrackId> = BTreeSet::from([TrackId(anchor as u32)]);
        for offset in 1..4usize {
            let t = anchor + offset;
            if t < n_tracks && rng.uniform(&[trial, 2, h as u64, offset as u64]) < 0.55 {
                members.insert(TrackId(t as u32));
            }
        }
        hyps.push(Hypothesis {
            members,
            disjuncts: Vec::new(),
            formation_conflict: 0.0,
            conflict: rng.uniform(&[trial, 3, h as u64]) * 0.45,
            fallback: false,
        });
    }
    for t in 0..n_tracks {
        hyps.push(Hypothesis::fallback(TrackId(t as u32), 0.5));
    }
    hyps
}
