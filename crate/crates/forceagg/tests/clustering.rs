//! Statistical and structural properties of the annealer beyond the
//! acceptance criteria.

mod common;

use forceagg::dsclust::{
    anneal, anneal_with_noise, build_interactions, select_cluster_count, total_weight_of_conflict,
    AnnealConfig, AnnealNoise, Partition, SeededNoise,
};
use forceagg::rng::CounterRng;
use forceagg::Float;

/// Random instance over three conflict levels.
fn random_conflict_table(rng: &CounterRng, trial: u64, n: usize) -> Vec<f64> {
    (0..n * n)
        .map(|i| {
            let u = rng.uniform(&[trial, 2 + i as u64]);
            if u < 0.4 {
                0.0
            } else if u < 0.8 {
                0.3
            } else {
                0.9
            }
        })
        .collect()
}

fn lookup(table: &[f64], n: usize) -> impl Fn(usize, usize) -> f64 + '_ {
    move |i, j| {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        table[a * n + b]
    }
}

/// The annealing drive: once the spins commit, the hard-assignment energy
/// only descends; and every run ends at or below the energy it started
/// from. (Above the commitment point the argmax of a near-uniform row is
/// noise, so per-step monotonicity is only meaningful afterwards.)
#[test]
fn hard_energy_descends_once_committed() {
    let rng = CounterRng::new(404);
    let runs = 50u64;
    let mut committed_monotone = 0;
    let mut overall_drop = 0;
    for trial in 0..runs {
        let n = 5 + (rng.uniform(&[trial, 0]) * 8.0) as usize;
        let k = 2 + (rng.uniform(&[trial, 1]) * 3.0) as usize;
        let table = random_conflict_table(&rng, trial, n);
        let j = build_interactions(n, lookup(&table, n)).unwrap();
        let outcome = anneal(&j, k, &AnnealConfig::with_seed(trial)).unwrap();

        let committed: Vec<_> = outcome
            .outer
            .iter()
            .skip_while(|o| o.saturation < 0.9)
            .collect();
        assert!(!committed.is_empty());
        if committed
            .windows(2)
            .all(|w| w[1].energy <= w[0].energy + 1e-9)
        {
            committed_monotone += 1;
        }
        let first = outcome.outer.first().unwrap().energy;
        let last = outcome.outer.last().unwrap().energy;
        if last <= first + 1e-9 {
            overall_drop += 1;
        }
    }
    assert!(
        committed_monotone * 10 >= runs * 9,
        "committed-phase energy monotone in only {committed_monotone}/{runs} runs"
    );
    assert!(
        overall_drop * 10 >= runs * 9,
        "energy dropped start-to-end in only {overall_drop}/{runs} runs"
    );
}

/// Noise keyed by element identity makes the run equivariant: permuting the
/// element order permutes the partition, up to cluster relabeling.
struct PermutedNoise<'a> {
    inner: &'a SeededNoise,
    /// New index -> original identity.
    perm: Vec<usize>,
}

impl<F: Float> AnnealNoise<F> for PermutedNoise<'_> {
    fn sample(&self, sweep: u64, element: usize, cluster: usize) -> F {
        self.inner.sample(sweep, self.perm[element], cluster)
    }
}

#[test]
fn permuting_elements_relabels_the_partition() {
    // Three strongly conflicting pairs with small distinct cross conflicts.
    let n = 6;
    let base = |i: usize, j: usize| -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        match (a, b) {
            (0, 1) | (2, 3) | (4, 5) => 0.95,
            _ => 0.01 * ((a * n + b) as f64 % 7.0) / 7.0,
        }
    };
    for k in [2usize, 3] {
        for (seed, perm) in [(9u64, vec![3usize, 0, 5, 2, 1, 4]), (21, vec![5, 4, 3, 2, 1, 0])] {
            let j_orig = build_interactions(n, base).unwrap();
            let j_perm = build_interactions(n, |i, jx| base(perm[i], perm[jx])).unwrap();
            let config = AnnealConfig::with_seed(seed);
            let noise = SeededNoise::new(seed ^ 0xABCD);
            let original = anneal_with_noise(&j_orig, k, &config, &noise).unwrap();
            let permuted = anneal_with_noise(
                &j_perm,
                k,
                &config,
                &PermutedNoise {
                    inner: &noise,
                    perm: perm.clone(),
                },
            )
            .unwrap();
            let mut mapped_back = vec![0usize; n];
            for (new_index, &orig) in perm.iter().enumerate() {
                mapped_back[orig] = permuted.partition.assignment()[new_index];
            }
            let mapped = Partition::new(mapped_back, k);
            assert_eq!(
                original.partition.canonical(),
                mapped.canonical(),
                "k={k} seed={seed}"
            );
        }
    }
}

/// Increasing K can only help: the remaining total weight of conflict is
/// non-increasing in K on average over seeds.
#[test]
fn remaining_conflict_shrinks_with_k() {
    let rng = CounterRng::new(7171);
    let n = 12;
    let k_max = 5;
    let seeds = 10u64;
    let mut avg = vec![0.0f64; k_max];
    for seed in 0..seeds {
        let table = random_conflict_table(&rng, seed, n);
        let j = build_interactions(n, lookup(&table, n)).unwrap();
        for k in 1..=k_max {
            let outcome = anneal(&j, k, &AnnealConfig::with_seed(seed)).unwrap();
            avg[k - 1] +=
                total_weight_of_conflict(&outcome.partition, lookup(&table, n)) / seeds as f64;
        }
    }
    for w in avg.windows(2) {
        assert!(
            w[1] <= w[0] + 1e-6,
            "average remaining conflict increased with K: {avg:?}"
        );
    }
}

/// The threshold scan stops at the first K under threshold and otherwise
/// returns the argmin.
#[test]
fn scan_returns_argmin_when_nothing_passes() {
    // Full mutual conflict among 4 elements: nothing under a tiny threshold
    // until K = 4, but cap the scan at 3.
    let conflict = |_: usize, _: usize| 0.999999f64;
    let j = build_interactions(4, conflict).unwrap();
    let selection =
        select_cluster_count(&j, conflict, 3, 1e-6, &AnnealConfig::with_seed(1)).unwrap();
    assert!(!selection.under_threshold);
    assert_eq!(selection.weights_by_k.len(), 3);
    let min_k = selection
        .weights_by_k
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap()
        .0;
    assert_eq!(selection.k, min_k);
}
