//! Partitioning of the hypothesis space and the optimal consistent-set
//! search.
//!
//! Two hypotheses conflict iff they share an element, and the transitive
//! closure of that relation splits the hypothesis space into independent
//! sub-problems. Within one sub-problem, a depth-first search over
//! index-ordered consistent extensions returns the complete consistent set
//! with the lowest combined conflict.

use std::collections::{BTreeMap, BTreeSet};

use crate::domain::TrackId;
use crate::float::Float;

use super::Hypothesis;

/// True iff the hypotheses assert membership of a common element.
pub fn conflicts_with<F>(h1: &Hypothesis<F>, h2: &Hypothesis<F>) -> bool {
    let (small, large) = if h1.members.len() <= h2.members.len() {
        (&h1.members, &h2.members)
    } else {
        (&h2.members, &h1.members)
    };
    small.iter().any(|id| large.contains(id))
}

/// An independent group of hypotheses linked by chains of inconsistency.
#[derive(Debug, Clone)]
pub struct SubProblem<F> {
    pub hypotheses: Vec<Hypothesis<F>>,
    /// Every element asserted by any member hypothesis.
    pub tracks: BTreeSet<TrackId>,
}

/// A consistent set of hypotheses with its combined conflict.
#[derive(Debug, Clone)]
pub struct HypothesisSet<F> {
    pub hypotheses: Vec<Hypothesis<F>>,
    pub conflict: F,
}

/// Split hypotheses into sub-problems: connected components of the
/// shares-an-element relation. Components are keyed by element, so the
/// closure costs little more than one pass over all memberships.
pub fn partition_problem_space<F: Float>(hypotheses: Vec<Hypothesis<F>>) -> Vec<SubProblem<F>> {
    let mut component_of: BTreeMap<TrackId, usize> = BTreeMap::new();
    let mut parents: Vec<usize> = Vec::new();

    fn root(parents: &mut Vec<usize>, mut i: usize) -> usize {
        while parents[i] != i {
            parents[i] = parents[parents[i]];
            i = parents[i];
        }
        i
    }

    for h in &hypotheses {
        let mut anchor: Option<usize> = None;
        for id in &h.members {
            let comp = component_of.get(id).copied();
            match (anchor, comp) {
                (None, None) => {
                    let fresh = parents.len();
                    parents.push(fresh);
                    component_of.insert(*id, fresh);
                    anchor = Some(fresh);
                }
                (None, Some(c)) => anchor = Some(root(&mut parents, c)),
                (Some(a), None) => {
                    component_of.insert(*id, a);
                }
                (Some(a), Some(c)) => {
                    let rc = root(&mut parents, c);
                    let ra = root(&mut parents, a);
                    parents[rc] = ra;
                    anchor = Some(ra);
                }
            }
        }
    }

    let mut groups: BTreeMap<usize, SubProblem<F>> = BTreeMap::new();
    for h in hypotheses {
        let first = h.members.iter().next().expect("non-empty members");
        let comp = root(&mut parents, component_of[first]);
        let entry = groups.entry(comp).or_insert_with(|| SubProblem {
            hypotheses: Vec::new(),
            tracks: BTreeSet::new(),
        });
        entry.tracks.extend(h.members.iter().copied());
        entry.hypotheses.push(h);
    }
    let mut subs: Vec<SubProblem<F>> = groups.into_values().collect();
    subs.sort_by(|a, b| a.tracks.iter().next().cmp(&b.tracks.iter().next()));
    subs
}

/// Lexicographic tie-break key: the sorted member sets of the chosen
/// hypotheses.
fn selection_key<F>(hyps: &[&Hypothesis<F>]) -> Vec<Vec<TrackId>> {
    let mut key: Vec<Vec<TrackId>> = hyps.iter().map(|h| h.member_vec()).collect();
    key.sort();
    key
}

struct Search<'a, F> {
    hyps: &'a [Hypothesis<F>],
    track_index: BTreeMap<TrackId, usize>,
    n_tracks: usize,
    best: Option<(F, Vec<usize>)>,
}

impl<F: Float> Search<'_, F> {
    fn candidate_beats_best(&self, conflict: F, chosen: &[usize]) -> bool {
        match &self.best {
            None => true,
            Some((best_conflict, best_chosen)) => {
                if conflict < *best_conflict {
                    return true;
                }
                if conflict > *best_conflict {
                    return false;
                }
                match chosen.len().cmp(&best_chosen.len()) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => {
                        let cand: Vec<&Hypothesis<F>> =
                            chosen.iter().map(|&i| &self.hyps[i]).collect();
                        let best: Vec<&Hypothesis<F>> =
                            best_chosen.iter().map(|&i| &self.hyps[i]).collect();
                        selection_key(&cand) < selection_key(&best)
                    }
                }
            }
        }
    }

    fn dfs(
        &mut self,
        current: &mut Vec<usize>,
        rest: &[usize],
        covered: &mut Vec<bool>,
        covered_count: usize,
        survival: F,
    ) {
        if covered_count == self.n_tracks {
            let conflict = F::one() - survival;
            if self.candidate_beats_best(conflict, current) {
                self.best = Some((conflict, current.clone()));
            }
            return;
        }
        // A completion only multiplies survival down; prune when already
        // strictly worse than the incumbent.
        if let Some((best_conflict, _)) = &self.best {
            if F::one() - survival > *best_conflict {
                return;
            }
        }
        // The remaining hypotheses must be able to cover what is missing.
        let mut reachable = covered.clone();
        let mut reachable_count = covered_count;
        for &idx in rest {
            for id in &self.hyps[idx].members {
                let t = self.track_index[id];
                if !reachable[t] {
                    reachable[t] = true;
                    reachable_count += 1;
                }
            }
        }
        if reachable_count < self.n_tracks {
            return;
        }

        for (pos, &idx) in rest.iter().enumerate() {
            let h = &self.hyps[idx];
            current.push(idx);
            let mut newly = Vec::new();
            for id in &h.members {
                let t = self.track_index[id];
                debug_assert!(!covered[t], "rest must be consistent with current");
                covered[t] = true;
                newly.push(t);
            }
            let next_rest: Vec<usize> = rest[pos + 1..]
                .iter()
                .copied()
                .filter(|&other| !conflicts_with(&self.hyps[other], h))
                .collect();
            self.dfs(
                current,
                &next_rest,
                covered,
                covered_count + newly.len(),
                survival * (F::one() - h.conflict),
            );
            for t in newly {
                covered[t] = false;
            }
            current.pop();
        }
    }
}

/// Optimal complete consistent set of a sub-problem.
///
/// Depth-first search over index-ordered extensions, with hypotheses sorted
/// by ascending conflict. Requires every element to be coverable (the
/// caller guarantees this with fallback singletons). Ties go to the set
/// with fewer hypotheses, then to the lexicographically smallest member-id
/// listing.
pub fn best_consistent_set<F: Float>(sub: &SubProblem<F>) -> HypothesisSet<F> {
    let mut order: Vec<usize> = (0..sub.hypotheses.len()).collect();
    order.sort_by(|&a, &b| {
        let (ha, hb) = (&sub.hypotheses[a], &sub.hypotheses[b]);
        ha.conflict
            .partial_cmp(&hb.conflict)
            .expect("finite conflicts")
            .then_with(|| ha.members.cmp(&hb.members))
    });
    let hyps: Vec<Hypothesis<F>> = order.iter().map(|&i| sub.hypotheses[i].clone()).collect();

    let track_index: BTreeMap<TrackId, usize> = sub
        .tracks
        .iter()
        .enumerate()
        .map(|(i, id)| (*id, i))
        .collect();
    let n_tracks = track_index.len();
    let mut search = Search {
        hyps: &hyps,
        track_index,
        n_tracks,
        best: None,
    };
    let all: Vec<usize> = (0..hyps.len()).collect();
    let mut covered = vec![false; n_tracks];
    search.dfs(&mut Vec::new(), &all, &mut covered, 0, F::one());

    let (conflict, chosen) = search
        .best
        .expect("every element coverable by construction");
    HypothesisSet {
        hypotheses: chosen.into_iter().map(|i| hyps[i].clone()).collect(),
        conflict,
    }
}
