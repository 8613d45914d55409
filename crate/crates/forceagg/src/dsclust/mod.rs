//! Evidence clustering by metaconflict minimization.
//!
//! Pairwise conflicts between elements become interaction weights
//! `J[i][j] = -log(1 - c_ij)`; a Potts-spin mean-field anneal partitions the
//! elements so that the total weight of conflict inside clusters is minimal,
//! and the cluster count is chosen by increasing K until the remaining
//! conflict falls below a threshold.

use thiserror::Error;

use crate::float::Float;

mod anneal;
mod eigen;

pub use anneal::{
    anneal, anneal_with_noise, critical_temperature, potts_energy, AnnealConfig, AnnealNoise,
    AnnealOutcome, OuterRecord, SeededNoise, SpinState, SweepRecord,
};

/// Cap on a single weight of conflict. An absolute conflict (c = 1) has
/// infinite weight; the cap keeps eigenvalue and field computations finite
/// while still making such pairs effectively forbidden.
pub const WEIGHT_CAP: f64 = 12.0;

#[derive(Debug, Error)]
pub enum DsclustError {
    #[error("pairwise conflict for elements ({i}, {j}) out of [0, 1]: {value}")]
    ConflictOutOfRange { i: usize, j: usize, value: f64 },
    #[error("eigenvalue iteration failed to converge")]
    EigenFailed,
    #[error(
        "annealing hit the sweep cap {max_sweeps} before freezing (saturation {saturation:.4})"
    )]
    MaxSweepsExceeded {
        max_sweeps: usize,
        saturation: f64,
        /// Hard partition of the unconverged state.
        partial: Partition,
    },
}

/// Additive weight of a conflict value: `-ln(1 - c)`, capped.
pub fn weight_of_conflict<F: Float>(c: F) -> F {
    let cap = F::real(WEIGHT_CAP);
    if c >= F::one() {
        return cap;
    }
    // max with zero also turns -0.0 from ln(1) into 0.
    (-(F::one() - c).ln()).min(cap).max(F::zero())
}

/// Symmetric matrix of conflict weights with zero diagonal.
#[derive(Debug, Clone)]
pub struct InteractionMatrix<F> {
    n: usize,
    w: Vec<F>,
}

impl<F: Float> InteractionMatrix<F> {
    /// Number of elements.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.w[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    /// Sum of weights over same-cluster pairs; the quantity the anneal
    /// minimizes.
    pub fn clustering_cost(&self, partition: &Partition) -> F {
        let assignment = partition.assignment();
        let mut cost = F::zero();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if assignment[i] == assignment[j] {
                    cost += self.get(i, j);
                }
            }
        }
        cost
    }
}

/// Build the interaction matrix from a pairwise conflict function.
///
/// The function is queried once per unordered pair; values must lie in
/// [0, 1].
pub fn build_interactions<F: Float>(
    n: usize,
    mut pairwise_conflict: impl FnMut(usize, usize) -> F,
) -> Result<InteractionMatrix<F>, DsclustError> {
    assert!(n >= 1, "need at least one element");
    let mut w = vec![F::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let c = pairwise_conflict(i, j);
            if !(c >= F::zero() && c <= F::one()) {
                return Err(DsclustError::ConflictOutOfRange {
                    i,
                    j,
                    value: c.to_f64().unwrap_or(f64::NAN),
                });
            }
            let weight = weight_of_conflict(c);
            w[i * n + j] = weight;
            w[j * n + i] = weight;
        }
    }
    Ok(InteractionMatrix { n, w })
}

/// Assignment of n elements to clusters `0..cluster_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    cluster_count: usize,
}

impl Partition {
    pub fn new(assignment: Vec<usize>, cluster_count: usize) -> Self {
        debug_assert!(assignment.iter().all(|&c| c < cluster_count));
        Partition {
            assignment,
            cluster_count,
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    /// Member indices per cluster, skipping empty clusters, ordered by the
    /// smallest member index.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut clusters = vec![Vec::new(); self.cluster_count];
        for (i, &c) in self.assignment.iter().enumerate() {
            clusters[c].push(i);
        }
        clusters.retain(|c| !c.is_empty());
        clusters.sort_by_key(|c| c[0]);
        clusters
    }

    /// Relabel clusters by order of first occurrence, so two partitions are
    /// comparable irrespective of label permutation.
    pub fn canonical(&self) -> Vec<usize> {
        let mut map = vec![usize::MAX; self.cluster_count];
        let mut next = 0usize;
        self.assignment
            .iter()
            .map(|&c| {
                if map[c] == usize::MAX {
                    map[c] = next;
                    next += 1;
                }
                map[c]
            })
            .collect()
    }
}

/// Conflict inside one cluster: `1 - prod(1 - c_ab)` over its member pairs.
fn cluster_conflict<F: Float>(
    members: &[usize],
    conflict: &mut impl FnMut(usize, usize) -> F,
) -> F {
    let mut survival = F::one();
    for (idx, &a) in members.iter().enumerate() {
        for &b in &members[idx + 1..] {
            survival *= F::one() - conflict(a, b);
        }
    }
    F::one() - survival
}

/// Aggregate conflict of a partition: `1 - prod(1 - c_i)` over per-cluster
/// conflicts. Singleton clusters contribute nothing.
pub fn metaconflict<F: Float>(
    partition: &Partition,
    mut conflict: impl FnMut(usize, usize) -> F,
) -> F {
    let mut survival = F::one();
    for members in partition.clusters() {
        survival *= F::one() - cluster_conflict(&members, &mut conflict);
    }
    F::one() - survival
}

/// Per-cluster conflicts, in the same order as [`Partition::clusters`].
pub fn cluster_conflicts<F: Float>(
    partition: &Partition,
    mut conflict: impl FnMut(usize, usize) -> F,
) -> Vec<F> {
    partition
        .clusters()
        .iter()
        .map(|members| cluster_conflict(members, &mut conflict))
        .collect()
}

/// Sum of per-cluster weights of conflict; the clustering objective.
pub fn total_weight_of_conflict<F: Float>(
    partition: &Partition,
    mut conflict: impl FnMut(usize, usize) -> F,
) -> F {
    partition
        .clusters()
        .iter()
        .map(|members| weight_of_conflict(cluster_conflict(members, &mut conflict)))
        .sum()
}

/// Outcome of the cluster-count scan.
#[derive(Debug, Clone)]
pub struct ClusterSelection<F> {
    pub k: usize,
    pub partition: Partition,
    /// Total weight of conflict of the selected partition.
    pub total_weight: F,
    /// Whether the scan stopped under the threshold or ran out of K.
    pub under_threshold: bool,
    /// (K, total weight) for every K tried, in order.
    pub weights_by_k: Vec<(usize, F)>,
    /// Anneal outcome of the selected K.
    pub outcome: AnnealOutcome<F>,
}

/// Scan K = 1, 2, ... and return the first partition whose total weight of
/// conflict falls below `threshold`; if none does by `k_max`, the K with the
/// minimal weight wins.
pub fn select_cluster_count<F: Float>(
    j: &InteractionMatrix<F>,
    mut conflict: impl FnMut(usize, usize) -> F,
    k_max: usize,
    threshold: F,
    config: &AnnealConfig<F>,
) -> Result<ClusterSelection<F>, DsclustError> {
    assert!(k_max >= 1, "need at least one cluster");
    let mut weights_by_k = Vec::new();
    let mut best: Option<ClusterSelection<F>> = None;
    for k in 1..=k_max {
        let outcome = anneal(j, k, config)?;
        let total = total_weight_of_conflict(&outcome.partition, &mut conflict);
        weights_by_k.push((k, total));
        let better = best.as_ref().map_or(true, |b| total < b.total_weight);
        if better {
            best = Some(ClusterSelection {
                k,
                partition: outcome.partition.clone(),
                total_weight: total,
                under_threshold: total < threshold,
                weights_by_k: Vec::new(),
                outcome,
            });
        }
        if total < threshold {
            break;
        }
    }
    let mut selection = best.expect("k_max >= 1 ran at least once");
    selection.weights_by_k = weights_by_k;
    Ok(selection)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXACT: f64 = 1e-12;
    const LN2: f64 = std::f64::consts::LN_2;

    fn matrix_from(n: usize, pairs: &[(usize, usize, f64)]) -> InteractionMatrix<f64> {
        build_interactions(n, |i, j| {
            pairs
                .iter()
                .find(|&&(a, b, _)| (a, b) == (i, j) || (a, b) == (j, i))
                .map_or(0.0, |&(_, _, c)| c)
        })
        .unwrap()
    }

    #[test]
    fn weight_of_conflict_values() {
        assert_eq!(weight_of_conflict(0.0), 0.0);
        assert!((weight_of_conflict(0.5) - LN2).abs() < EXACT);
        assert_eq!(weight_of_conflict(1.0), WEIGHT_CAP);
        // The cap also applies just below 1.
        assert_eq!(weight_of_conflict(1.0 - 1e-9), WEIGHT_CAP);
    }

    #[test]
    fn build_matrix_cases() {
        let zero = build_interactions(3, |_, _| 0.0f64).unwrap();
        assert!(zero.w.iter().all(|&x| x == 0.0));

        let two = matrix_from(2, &[(0, 1, 0.5)]);
        assert!((two.get(0, 1) - LN2).abs() < EXACT);
        assert!((two.get(1, 0) - LN2).abs() < EXACT);
        assert_eq!(two.get(0, 0), 0.0);
        assert_eq!(two.get(1, 1), 0.0);

        // Symmetry on a random instance.
        let rng = crate::rng::CounterRng::new(3);
        let m = build_interactions(7, |i, j| rng.uniform(&[i as u64, j as u64])).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn build_rejects_out_of_range() {
        let err = build_interactions(2, |_, _| 1.5f64);
        assert!(matches!(
            err,
            Err(DsclustError::ConflictOutOfRange { i: 0, j: 1, .. })
        ));
    }

    #[test]
    fn critical_temperature_closed_forms() {
        let j = build_interactions(4, |_, _| 0.0f64).unwrap();
        let tc = critical_temperature(&j, 2, 0.0, 0.5).unwrap();
        assert!((tc - 0.25).abs() < 1e-9);

        let single = build_interactions(1, |_, _| 0.0f64).unwrap();
        let tc1 = critical_temperature(&single, 3, 0.0, 0.5).unwrap();
        assert!((tc1 - 0.5 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn metaconflict_cases() {
        // All singletons.
        let p = Partition::new(vec![0, 1, 2], 3);
        assert_eq!(metaconflict(&p, |_, _| 0.9f64), 0.0);

        // One cluster with a single conflicting pair.
        let p = Partition::new(vec![0, 0], 1);
        assert!((metaconflict(&p, |_, _| 0.5f64) - 0.5).abs() < EXACT);

        // Two clusters with conflict 0.5 each.
        let p = Partition::new(vec![0, 0, 1, 1], 2);
        let conflict = |i: usize, j: usize| -> f64 {
            if (i, j) == (0, 1) || (i, j) == (2, 3) {
                0.5
            } else {
                0.0
            }
        };
        assert!((metaconflict(&p, conflict) - 0.75).abs() < EXACT);
    }

    #[test]
    fn total_weight_cases() {
        let p = Partition::new(vec![0, 1], 2);
        assert_eq!(total_weight_of_conflict(&p, |_, _| 0.9f64), 0.0);

        let p = Partition::new(vec![0, 0, 1, 1], 2);
        let conflict = |i: usize, j: usize| {
            if (i, j) == (0, 1) || (i, j) == (2, 3) {
                0.5
            } else {
                0.0
            }
        };
        assert!((total_weight_of_conflict(&p, conflict) - 2.0 * LN2).abs() < EXACT);

        // exp(-total) = 1 - metaconflict while no weight is capped.
        let rng = crate::rng::CounterRng::new(11);
        for trial in 0..50u64 {
            let n = 6;
            let conflicts: Vec<f64> = (0..n * n)
                .map(|i| rng.uniform(&[trial, i as u64]) * 0.8)
                .collect();
            let sym = |i: usize, j: usize| {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                conflicts[a * n + b]
            };
            let assignment: Vec<usize> = (0..n)
                .map(|i| (rng.uniform(&[trial, 100 + i as u64]) * 3.0) as usize)
                .collect();
            let p = Partition::new(assignment, 3);
            let total = total_weight_of_conflict(&p, sym);
            let mcf = metaconflict(&p, sym);
            assert!(((-total).exp() - (1.0 - mcf)).abs() < 1e-9);
        }
    }

    #[test]
    fn anneal_separates_conflicting_pair() {
        let j = matrix_from(2, &[(0, 1, 0.999999)]);
        let config = AnnealConfig::with_seed(1);
        let outcome = anneal(&j, 2, &config).unwrap();
        let assignment = outcome.partition.assignment();
        assert_ne!(assignment[0], assignment[1]);
        assert_eq!(metaconflict(&outcome.partition, |_, _| 0.999999f64), 0.0);
    }

    #[test]
    fn anneal_pairs_up_compatible_elements() {
        // Elements 0-1 and 2-3 conflict; cross pairs do not.
        let j = matrix_from(4, &[(0, 1, 0.999999), (2, 3, 0.999999)]);
        let config = AnnealConfig::with_seed(7);
        let outcome = anneal(&j, 2, &config).unwrap();
        let a = outcome.partition.assignment();
        assert_ne!(a[0], a[1]);
        assert_ne!(a[2], a[3]);
        let conflict = |i: usize, jx: usize| {
            let (i, jx) = if i < jx { (i, jx) } else { (jx, i) };
            if (i, jx) == (0, 1) || (i, jx) == (2, 3) {
                0.999999
            } else {
                0.0
            }
        };
        assert!(metaconflict(&outcome.partition, conflict) < 1e-9);
    }

    #[test]
    fn anneal_single_cluster_when_no_conflicts() {
        let j = build_interactions(5, |_, _| 0.0f64).unwrap();
        let config = AnnealConfig::with_seed(3);
        let outcome = anneal(&j, 1, &config).unwrap();
        assert!(outcome.partition.assignment().iter().all(|&c| c == 0));
        assert_eq!(metaconflict(&outcome.partition, |_, _| 0.0f64), 0.0);
    }

    #[test]
    fn anneal_freeze_contract() {
        let rng = crate::rng::CounterRng::new(13);
        for trial in 0..10u64 {
            let n = 6;
            let j = build_interactions(n, |i, jx| {
                let u = rng.uniform(&[trial, i as u64, jx as u64]);
                if u > 0.5 {
                    0.9
                } else {
                    0.0
                }
            })
            .unwrap();
            let outcome = anneal(&j, 3, &AnnealConfig::with_seed(trial)).unwrap();
            assert!(outcome.state.saturation() >= 0.99);
            assert!(outcome.state.min_row_max() >= 0.9);
            // Spin rows stay near the simplex.
            for i in 0..n {
                let sum: f64 = outcome.state.row(i).iter().sum();
                assert!((sum - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn anneal_sweep_cap_reports_partial_state() {
        let j = matrix_from(2, &[(0, 1, 0.9)]);
        let config = AnnealConfig {
            max_sweeps: 2,
            ..AnnealConfig::with_seed(0)
        };
        match anneal(&j, 2, &config) {
            Err(DsclustError::MaxSweepsExceeded {
                max_sweeps,
                partial,
                ..
            }) => {
                assert_eq!(max_sweeps, 2);
                assert_eq!(partial.len(), 2);
            }
            other => panic!("expected sweep cap error, got {other:?}"),
        }
    }

    #[test]
    fn select_accepts_one_cluster_for_clean_data() {
        let j = build_interactions(6, |_, _| 0.0f64).unwrap();
        let sel =
            select_cluster_count(&j, |_, _| 0.0f64, 5, 0.105, &AnnealConfig::with_seed(2)).unwrap();
        assert_eq!(sel.k, 1);
        assert!(sel.under_threshold);
        assert_eq!(sel.total_weight, 0.0);
    }

    #[test]
    fn select_needs_three_clusters_for_mutual_conflict() {
        let c = 0.999999;
        let conflict = move |_: usize, _: usize| c;
        let j = build_interactions(3, conflict).unwrap();
        let sel =
            select_cluster_count(&j, conflict, 5, 0.105, &AnnealConfig::with_seed(4)).unwrap();
        assert_eq!(sel.k, 3);
        assert!(sel.under_threshold);
        assert!(sel.total_weight < 1e-9);
        // K = 1 and K = 2 necessarily retained a conflicting pair.
        assert!(sel.weights_by_k[0].1 > 1.0);
        assert!(sel.weights_by_k[1].1 > 1.0);
    }

    #[test]
    fn partition_canonical_relabeling() {
        let a = Partition::new(vec![2, 2, 0, 1], 3);
        let b = Partition::new(vec![0, 0, 1, 2], 3);
        assert_eq!(a.canonical(), b.canonical());
        let c = Partition::new(vec![0, 1, 0, 2], 3);
        assert_ne!(a.canonical(), c.canonical());
    }
}
