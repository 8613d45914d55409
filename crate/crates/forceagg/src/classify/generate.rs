//! Bottom-up hypothesis generation.
//!
//! Seed with all singletons, then repeatedly extend every surviving
//! hypothesis by one unused element, keeping extensions that remain
//! admissible against at least one template and whose members are not
//! spatially hopeless. Growth stops by itself once templates are full.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::domain::{ClassId, ClassificationTree, TrackId, UnitTemplate};
use crate::float::Float;

use super::{
    classification_conflict, evaluate_disjunction, formation_conflict, ClassifyConfig, Disjunct,
    Hypothesis,
};

/// One element of an aggregation level: a track, or one level up, a unit.
#[derive(Debug, Clone)]
pub struct Element {
    pub id: TrackId,
    pub class: ClassId,
}

/// Generate every admissible hypothesis over `elements`.
///
/// The returned list contains hypotheses of all sizes, each carrying all
/// templates it is admissible for as disjuncts, sorted by size and member
/// ids. Extensions whose formation conflict alone reaches the keep
/// threshold are pruned; with `per_track_cap` set, only the m best
/// hypotheses of each size touching any given element survive.
pub fn generate_hypotheses<F: Float>(
    elements: &[Element],
    templates: &[&UnitTemplate],
    tree: &ClassificationTree,
    mut conflict: impl FnMut(TrackId, TrackId) -> F,
    config: &ClassifyConfig<F>,
) -> Vec<Hypothesis<F>> {
    let by_id: BTreeMap<TrackId, &Element> = elements.iter().map(|e| (e.id, e)).collect();
    let mut evaluate = |members: &BTreeSet<TrackId>| -> Option<Hypothesis<F>> {
        let member_ids: Vec<TrackId> = members.iter().copied().collect();
        let c1 = formation_conflict(&member_ids, &mut conflict);
        if c1 >= config.keep_threshold {
            return None;
        }
        let classes: Vec<&ClassId> = member_ids.iter().map(|id| &by_id[id].class).collect();
        let mut disjuncts: Vec<Disjunct<F>> = templates
            .iter()
            .filter_map(|t| {
                classification_conflict(&classes, t, tree).map(|fit| Disjunct {
                    unit_type: t.unit_type.clone(),
                    classification_conflict: fit.conflict,
                    support: fit.support,
                })
            })
            .collect();
        if disjuncts.is_empty() {
            return None;
        }
        disjuncts.sort_by(|a, b| {
            a.classification_conflict
                .partial_cmp(&b.classification_conflict)
                .expect("finite conflicts")
                .then_with(|| a.unit_type.cmp(&b.unit_type))
        });
        // Several templates can share a unit type (composition variants);
        // present each type once, by its best variant.
        disjuncts.dedup_by(|b, a| a.unit_type == b.unit_type);
        let conflict_value = evaluate_disjunction(&disjuncts, c1);
        Some(Hypothesis {
            members: members.clone(),
            disjuncts,
            formation_conflict: c1,
            conflict: conflict_value,
            fallback: false,
        })
    };

    let mut seen: HashSet<Vec<TrackId>> = HashSet::new();
    let mut all: Vec<Hypothesis<F>> = Vec::new();
    let mut frontier: Vec<Hypothesis<F>> = Vec::new();
    for e in elements {
        let members = BTreeSet::from([e.id]);
        seen.insert(vec![e.id]);
        if let Some(h) = evaluate(&members) {
            frontier.push(h);
        }
    }
    frontier = apply_per_track_cap(frontier, config.per_track_cap);
    all.extend(frontier.iter().cloned());

    while !frontier.is_empty() {
        let mut next: Vec<Hypothesis<F>> = Vec::new();
        for h in &frontier {
            for e in elements {
                if h.members.contains(&e.id) {
                    continue;
                }
                let mut members = h.members.clone();
                members.insert(e.id);
                let key: Vec<TrackId> = members.iter().copied().collect();
                if !seen.insert(key) {
                    continue;
                }
                if let Some(candidate) = evaluate(&members) {
                    next.push(candidate);
                }
            }
        }
        next = apply_per_track_cap(next, config.per_track_cap);
        all.extend(next.iter().cloned());
        frontier = next;
    }

    all.sort_by(|a, b| {
        a.members
            .len()
            .cmp(&b.members.len())
            .then_with(|| a.members.cmp(&b.members))
    });
    all
}

/// Keep, per element, only the m best hypotheses of this generation step; a
/// hypothesis survives if it makes the cut for at least one of its members.
fn apply_per_track_cap<F: Float>(
    mut hypotheses: Vec<Hypothesis<F>>,
    cap: Option<usize>,
) -> Vec<Hypothesis<F>> {
    let Some(m) = cap else {
        return hypotheses;
    };
    hypotheses.sort_by(|a, b| {
        a.conflict
            .partial_cmp(&b.conflict)
            .expect("finite conflicts")
            .then_with(|| a.members.cmp(&b.members))
    });
    let mut taken: BTreeMap<TrackId, usize> = BTreeMap::new();
    let mut kept = Vec::new();
    for h in hypotheses {
        let survives = h.members.iter().any(|id| taken.get(id).copied().unwrap_or(0) < m);
        if survives {
            for id in &h.members {
                *taken.entry(*id).or_insert(0) += 1;
            }
            kept.push(h);
        }
    }
    kept
}
