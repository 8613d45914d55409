//! Template-driven aggregation of tracks into typed units.
//!
//! A hypothesis asserts that a set of tracks forms one unit of one of
//! several candidate types. Hypotheses are generated bottom-up against the
//! templates, evaluated by how well the observed composition and formation
//! fit, and a depth-first search over each independent sub-problem returns
//! the complete, consistent hypothesis set with minimal combined conflict.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::conflict::{track_conflict, TrackConflictParams};
use crate::domain::{
    AggregatedUnit, ClassId, ClassificationTree, SituationPicture, Track, TrackId, UnitCandidate,
    UnitTemplate,
};
use crate::float::Float;

pub mod company;
mod generate;
mod solve;

pub use generate::{generate_hypotheses, Element};
pub use solve::{best_consistent_set, conflicts_with, partition_problem_space, HypothesisSet, SubProblem};

/// Tuning knobs of the classification pass.
#[derive(Debug, Clone)]
pub struct ClassifyConfig<F> {
    /// Hypotheses at or above this conflict are not offered to the solver,
    /// and candidate extensions whose formation conflict alone reaches it
    /// are discarded during generation.
    pub keep_threshold: F,
    /// Candidate types within this distance of the best disjunct are
    /// presented together as a disjunction.
    pub present_delta: F,
    /// Conflict of the synthetic single-track fallback hypothesis that keeps
    /// every track coverable.
    pub fallback_conflict: F,
    /// Optional cap: per size, keep only the m best hypotheses touching any
    /// given track.
    pub per_track_cap: Option<usize>,
    pub track_params: TrackConflictParams<F>,
}

impl<F: Float> Default for ClassifyConfig<F> {
    fn default() -> Self {
        ClassifyConfig {
            keep_threshold: F::real(0.5),
            present_delta: F::real(0.05),
            fallback_conflict: F::real(0.5),
            per_track_cap: None,
            track_params: TrackConflictParams::default(),
        }
    }
}

/// One candidate unit type for a hypothesis.
#[derive(Debug, Clone, Serialize)]
pub struct Disjunct<F> {
    pub unit_type: String,
    /// Conflict between the observed composition and the template.
    pub classification_conflict: F,
    /// Fraction of the template filled by exactly-typed members.
    pub support: F,
}

/// The assertion that `members` together form one unit of one of the
/// `disjuncts` types.
#[derive(Debug, Clone, Serialize)]
pub struct Hypothesis<F> {
    pub members: BTreeSet<TrackId>,
    /// Admissible templates, sorted by combined conflict.
    pub disjuncts: Vec<Disjunct<F>>,
    pub formation_conflict: F,
    /// Conflict of the best disjunct combined with the formation conflict.
    pub conflict: F,
    /// True for the synthetic "leave this track unaggregated" hypothesis.
    pub fallback: bool,
}

impl<F> Hypothesis<F> {
    /// Sorted member ids, the canonical identity of the hypothesis.
    pub fn member_vec(&self) -> Vec<TrackId> {
        self.members.iter().copied().collect()
    }
}

impl<F: Float> Hypothesis<F> {
    /// Synthetic singleton that leaves a track out of every unit.
    pub fn fallback(track: TrackId, conflict: F) -> Self {
        Hypothesis {
            members: BTreeSet::from([track]),
            disjuncts: Vec::new(),
            formation_conflict: F::zero(),
            conflict,
            fallback: true,
        }
    }
}

/// Fit of a member multiset against one template.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassFit<F> {
    pub conflict: F,
    pub support: F,
}

/// Compatibility of an element class with a template slot class: related in
/// the tree when both are tree nodes, exact equality otherwise (unit types
/// at higher aggregation levels are not tree nodes).
fn slot_compatible(member: &ClassId, slot: &ClassId, tree: &ClassificationTree) -> bool {
    if tree.contains(member) && tree.contains(slot) {
        tree.is_descendant(member, slot).expect("both ids checked")
    } else {
        member == slot
    }
}

/// A member fills a slot "definitely" when its class is the slot class or a
/// specialization of it; a coarser observation supports the ratio but not
/// the direct support.
fn slot_definite(member: &ClassId, slot: &ClassId, tree: &ClassificationTree) -> bool {
    if tree.contains(member) && tree.contains(slot) {
        tree.is_ancestor_or_self(slot, member).expect("both ids checked")
    } else {
        member == slot
    }
}

fn class_depth(class: &ClassId, tree: &ClassificationTree) -> usize {
    if tree.contains(class) {
        tree.depth(class).expect("id checked")
    } else {
        // Non-tree classes (unit types) match only exactly; treat them as
        // maximally specific.
        usize::MAX
    }
}

/// Conflict and support of `members` against `template`, or `None` when the
/// hypothesis is inadmissible (an unmatchable member, or more members than
/// the template expects).
///
/// Members are matched greedily, most specific first, each to the most
/// specific unfilled slot it is compatible with.
pub fn classification_conflict<F: Float>(
    members: &[&ClassId],
    template: &UnitTemplate,
    tree: &ClassificationTree,
) -> Option<ClassFit<F>> {
    let expected = template.expected_count() as usize;
    if members.len() > expected {
        return None;
    }
    let mut ordered: Vec<&ClassId> = members.to_vec();
    ordered.sort_by(|a, b| {
        class_depth(b, tree)
            .cmp(&class_depth(a, tree))
            .then_with(|| a.cmp(b))
    });

    let mut remaining: Vec<u32> = template.composition.iter().map(|s| s.count).collect();
    let mut definite = 0usize;
    for member in ordered {
        let slot = template
            .composition
            .iter()
            .enumerate()
            .filter(|(idx, s)| remaining[*idx] > 0 && slot_compatible(member, &s.class, tree))
            .max_by_key(|(_, s)| class_depth(&s.class, tree));
        match slot {
            Some((idx, s)) => {
                remaining[idx] -= 1;
                if slot_definite(member, &s.class, tree) {
                    definite += 1;
                }
            }
            None => return None,
        }
    }
    let expected_f = F::count(expected);
    let ratio = F::count(members.len()) / expected_f;
    Some(ClassFit {
        conflict: F::one() - ratio,
        support: F::count(definite) / expected_f,
    })
}

/// Average pairwise conflict of the members; 0 for a singleton.
pub fn formation_conflict<F: Float>(
    members: &[TrackId],
    mut conflict: impl FnMut(TrackId, TrackId) -> F,
) -> F {
    let n = members.len();
    if n < 2 {
        return F::zero();
    }
    let mut sum = F::zero();
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            sum += conflict(a, b);
        }
    }
    sum / F::count(n * (n - 1) / 2)
}

/// Probabilistic sum of the classification and formation conflicts.
pub fn hypothesis_conflict<F: Float>(c0: F, c1: F) -> F {
    F::one() - (F::one() - c0) * (F::one() - c1)
}

/// Conflict of a disjunctive hypothesis: the minimum over its disjuncts,
/// each combined with the shared formation conflict.
pub fn evaluate_disjunction<F: Float>(disjuncts: &[Disjunct<F>], formation: F) -> F {
    disjuncts
        .iter()
        .map(|d| hypothesis_conflict(d.classification_conflict, formation))
        .fold(F::infinity(), F::min)
}

/// Aggregate tracks into typed units using the level-1 templates.
pub fn classify_units<F: Float>(
    tracks: &[Track<F>],
    templates: &[UnitTemplate],
    tree: &ClassificationTree,
    config: &ClassifyConfig<F>,
) -> SituationPicture<F> {
    let elements: Vec<Element> = tracks
        .iter()
        .map(|t| Element {
            id: t.id,
            class: t.resolved_class.clone(),
        })
        .collect();
    let level1: Vec<&UnitTemplate> = templates.iter().filter(|t| t.level == 1).collect();

    // Track-to-track conflicts, cached once.
    let n = tracks.len();
    let mut matrix = vec![F::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let c = track_conflict(&tracks[i], &tracks[j], &config.track_params).value();
            matrix[i * n + j] = c;
            matrix[j * n + i] = c;
        }
    }
    let index_of: std::collections::BTreeMap<TrackId, usize> = tracks
        .iter()
        .enumerate()
        .map(|(i, t)| (t.id, i))
        .collect();
    let conflict_fn = |a: TrackId, b: TrackId| matrix[index_of[&a] * n + index_of[&b]];

    let hypotheses = generate_hypotheses(&elements, &level1, tree, conflict_fn, config);
    let picture = solve_into_units(&elements, hypotheses, conflict_fn, config);
    SituationPicture {
        tracks: tracks.to_vec(),
        units: picture.0,
        unaggregated: picture.1,
    }
}

/// Solver half of the classification pass: add fallbacks, partition, search,
/// and assemble units plus the unaggregated remainder.
pub(crate) fn solve_into_units<F: Float>(
    elements: &[Element],
    hypotheses: Vec<Hypothesis<F>>,
    _conflict: impl FnMut(TrackId, TrackId) -> F,
    config: &ClassifyConfig<F>,
) -> (Vec<AggregatedUnit<F>>, Vec<TrackId>) {
    // Solver pool: hypotheses good enough to present, plus one fallback per
    // element so a complete set always exists.
    let mut pool: Vec<Hypothesis<F>> = hypotheses
        .into_iter()
        .filter(|h| h.conflict < config.keep_threshold)
        .collect();
    for e in elements {
        pool.push(Hypothesis::fallback(e.id, config.fallback_conflict));
    }

    let mut units = Vec::new();
    let mut unaggregated = Vec::new();
    for sub in partition_problem_space(pool) {
        let solution = best_consistent_set(&sub);
        for h in solution.hypotheses {
            if h.fallback {
                unaggregated.extend(h.members.iter().copied());
            } else {
                units.push(present_unit(&h, config));
            }
        }
    }
    units.sort_by(|a, b| a.members.cmp(&b.members));
    unaggregated.sort();
    (units, unaggregated)
}

/// Presentation form of a chosen hypothesis: disjuncts within
/// `present_delta` of the best one are emitted together.
fn present_unit<F: Float>(h: &Hypothesis<F>, config: &ClassifyConfig<F>) -> AggregatedUnit<F> {
    let combined: Vec<(F, &Disjunct<F>)> = h
        .disjuncts
        .iter()
        .map(|d| {
            (
                hypothesis_conflict(d.classification_conflict, h.formation_conflict),
                d,
            )
        })
        .collect();
    let best = combined
        .iter()
        .map(|(c, _)| *c)
        .fold(F::infinity(), F::min);
    let candidates = combined
        .into_iter()
        .filter(|(c, _)| *c - best <= config.present_delta)
        .map(|(c, d)| UnitCandidate {
            unit_type: d.unit_type.clone(),
            classification_conflict: d.classification_conflict,
            support: d.support,
            conflict: c,
        })
        .collect();
    AggregatedUnit {
        members: h.member_vec(),
        candidates,
        formation_conflict: h.formation_conflict,
        conflict: h.conflict,
    }
}
