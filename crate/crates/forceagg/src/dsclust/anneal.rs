//! Potts-spin mean-field annealer.
//!
//! Each element i carries a K-state spin; the mean-field value `V[i][a]` is
//! the soft degree of membership of element i in cluster a. Starting from
//! the symmetric high-temperature state at the critical temperature, the
//! softmax fixed-point equations are iterated to equilibrium at each
//! temperature, the temperature is lowered geometrically, and the process
//! stops once the spins have saturated onto a hard partition.
//!
//! Updates are synchronous: every field H is computed from the previous
//! sweep's spin values, so a sweep is a pure function of the last one plus
//! the counter-keyed noise stream. The new values are damped against the
//! previous sweep (see [`UPDATE_DAMPING`]), and once the spins freeze a
//! zero-temperature descent removes any remaining single-element moves.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::float::Float;
use crate::rng::CounterRng;

use super::{DsclustError, InteractionMatrix, Partition};

/// A spin row counts as decided once its largest component reaches this.
const ROW_DECIDED_MIN: f64 = 0.9;

/// Guard against division blow-up when a cluster empties mid-anneal.
const G_FLOOR: f64 = 1e-12;

/// Blend factor between the previous spin values and the softmax update.
/// Synchronous updates on densely repulsive interactions oscillate with
/// period two; averaging with the previous sweep suppresses the cycle
/// without moving the fixed points.
const UPDATE_DAMPING: f64 = 0.5;

/// Annealing schedule and tolerances.
#[derive(Debug, Clone)]
pub struct AnnealConfig<F> {
    /// Self-coupling of the diagonal term.
    pub gamma: F,
    /// Per-K overrides of the cluster-balance coupling; K values not in the
    /// map use the built-in schedule (see `alpha_for`).
    pub alpha_by_k: BTreeMap<usize, F>,
    /// Amplitude of the additive exploration noise.
    pub epsilon: F,
    /// Geometric cooling factor, in (0, 1).
    pub tau: F,
    /// Inner-loop fix-point tolerance on the mean absolute spin change.
    pub inner_tol: F,
    /// Freezing threshold on the mean squared spin value.
    pub freeze_tol: F,
    /// Noise stream seed; the seed fully determines the run.
    pub seed: u64,
    /// Cap on total sweeps before giving up.
    pub max_sweeps: usize,
    /// Independent runs; the one with the lowest clustering cost wins.
    pub restarts: usize,
}

impl<F: Float> Default for AnnealConfig<F> {
    fn default() -> Self {
        AnnealConfig {
            gamma: F::real(0.5),
            alpha_by_k: BTreeMap::new(),
            epsilon: F::real(0.001),
            tau: F::real(0.9),
            inner_tol: F::real(0.01),
            freeze_tol: F::real(0.99),
            seed: 0,
            max_sweeps: 20_000,
            restarts: 3,
        }
    }
}

impl<F: Float> AnnealConfig<F> {
    pub fn with_seed(seed: u64) -> Self {
        AnnealConfig {
            seed,
            ..AnnealConfig::default()
        }
    }

    /// Cluster-balance coupling for a given K. Zero for small K, tiny
    /// positive values around K = 8..11 where the symmetric state needs a
    /// nudge, and the K = 11 value beyond.
    pub fn alpha_for(&self, k: usize) -> F {
        if let Some(&alpha) = self.alpha_by_k.get(&k) {
            return alpha;
        }
        match k {
            0..=7 => F::zero(),
            8 => F::real(1e-6),
            9 => F::zero(),
            10 => F::real(3e-7),
            _ => F::real(3e-8),
        }
    }
}

/// Mean-field spin values at some point of the anneal.
#[derive(Debug, Clone)]
pub struct SpinState<F> {
    pub n: usize,
    pub k: usize,
    /// Row-major n-by-K membership matrix; each row sums to 1.
    pub v: Vec<F>,
    pub temperature: F,
    pub sweep: usize,
}

impl<F: Float> SpinState<F> {
    pub fn row(&self, i: usize) -> &[F] {
        &self.v[i * self.k..(i + 1) * self.k]
    }

    /// Mean squared spin value, `(1/N) * sum V^2`; 1 when fully frozen.
    pub fn saturation(&self) -> F {
        self.v.iter().map(|&x| x * x).sum::<F>() / F::count(self.n)
    }

    /// Largest membership value of the least decided row.
    pub fn min_row_max(&self) -> F {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .fold(F::zero(), |acc, &x| acc.max(x))
            })
            .fold(F::one(), |acc, m| acc.min(m))
    }

    /// Hard assignment: per row, the cluster with the largest membership.
    pub fn hard_partition(&self) -> Partition {
        let assignment = (0..self.n)
            .map(|i| {
                let row = self.row(i);
                let mut best = 0;
                for a in 1..self.k {
                    if row[a] > row[best] {
                        best = a;
                    }
                }
                best
            })
            .collect();
        Partition::new(assignment, self.k)
    }
}

/// One record per sweep, suitable for plotting the convergence curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRecord<F> {
    pub sweep: usize,
    pub temperature: F,
    pub saturation: F,
}

/// One record per temperature step.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OuterRecord<F> {
    pub temperature: F,
    pub saturation: F,
    /// Potts energy of the hard assignment at this step.
    pub energy: F,
}

/// Result of a successful anneal.
#[derive(Debug, Clone)]
pub struct AnnealOutcome<F> {
    pub partition: Partition,
    pub state: SpinState<F>,
    pub sweeps: Vec<SweepRecord<F>>,
    pub outer: Vec<OuterRecord<F>>,
    /// Starting (critical) temperature of the run.
    pub critical_temperature: F,
}

/// Source of the exploration noise, keyed by stable identities so a run is
/// reproducible and independent of evaluation order.
pub trait AnnealNoise<F> {
    fn sample(&self, sweep: u64, element: usize, cluster: usize) -> F;
}

/// Default noise source: uniform draws from a counter-keyed hash.
#[derive(Debug, Clone, Copy)]
pub struct SeededNoise {
    rng: CounterRng,
}

impl SeededNoise {
    pub fn new(seed: u64) -> Self {
        SeededNoise {
            rng: CounterRng::new(seed),
        }
    }

    pub fn from_rng(rng: CounterRng) -> Self {
        SeededNoise { rng }
    }
}

impl<F: Float> AnnealNoise<F> for SeededNoise {
    fn sample(&self, sweep: u64, element: usize, cluster: usize) -> F {
        F::real(self.rng.uniform(&[sweep, element as u64, cluster as u64]))
    }
}

/// Starting temperature: `max(-lambda_min, lambda_max) / K` over the
/// spectrum of `M = J + alpha - gamma * I`. Falls back to `1/K` when the
/// estimate is not positive.
pub fn critical_temperature<F: Float>(
    j: &InteractionMatrix<F>,
    k: usize,
    alpha: F,
    gamma: F,
) -> Result<F, DsclustError> {
    assert!(k >= 1, "need at least one cluster");
    let n = j.len();
    let mut m = vec![F::zero(); n * n];
    for i in 0..n {
        for jj in 0..n {
            let mut v = j.get(i, jj) + alpha;
            if i == jj {
                v -= gamma;
            }
            m[i * n + jj] = v;
        }
    }
    let eig = super::eigen::symmetric_eigenvalues(&m, n).ok_or(DsclustError::EigenFailed)?;
    let (mut lo, mut hi) = (F::infinity(), F::neg_infinity());
    for e in eig {
        lo = lo.min(e);
        hi = hi.max(e);
    }
    let tc = (-lo).max(hi) / F::count(k);
    if tc > F::zero() {
        Ok(tc)
    } else {
        Ok(F::one() / F::count(k))
    }
}

/// Anneal `j` into `k` clusters. Runs `config.restarts` independent noise
/// streams and returns the outcome with the lowest clustering cost.
pub fn anneal<F: Float>(
    j: &InteractionMatrix<F>,
    k: usize,
    config: &AnnealConfig<F>,
) -> Result<AnnealOutcome<F>, DsclustError> {
    let base = CounterRng::new(config.seed).stream(k as u64);
    let mut best: Option<(F, AnnealOutcome<F>)> = None;
    let mut last_err = None;
    for restart in 0..config.restarts.max(1) {
        let noise = SeededNoise::from_rng(base.stream(restart as u64));
        match anneal_with_noise(j, k, config, &noise) {
            Ok(outcome) => {
                let cost = j.clustering_cost(&outcome.partition);
                if best.as_ref().map_or(true, |(c, _)| cost < *c) {
                    best = Some((cost, outcome));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((_, outcome)) => Ok(outcome),
        None => Err(last_err.expect("at least one restart ran")),
    }
}

/// Single annealing run with an explicit noise source.
pub fn anneal_with_noise<F: Float>(
    j: &InteractionMatrix<F>,
    k: usize,
    config: &AnnealConfig<F>,
    noise: &impl AnnealNoise<F>,
) -> Result<AnnealOutcome<F>, DsclustError> {
    assert!(k >= 1, "need at least one cluster");
    let n = j.len();
    assert!(n >= 1, "need at least one element");
    let alpha = config.alpha_for(k);
    let gamma = config.gamma;
    let tc = critical_temperature(j, k, alpha, gamma)?;

    let nf = F::count(n);
    let kf = F::count(k);
    let mut v = vec![F::zero(); n * k];
    for i in 0..n {
        for a in 0..k {
            v[i * k + a] = F::one() / kf + config.epsilon * noise.sample(0, i, a);
        }
        normalize_row(&mut v[i * k..(i + 1) * k]);
    }

    let mut temperature = tc;
    let mut sweep = 0usize;
    let mut sweeps = Vec::new();
    let mut outer = Vec::new();
    let mut prev = vec![F::zero(); n * k];
    let mut fields = vec![F::zero(); n * k];

    loop {
        // Relax to a fixed point at this temperature.
        loop {
            sweep += 1;
            if sweep > config.max_sweeps {
                let state = SpinState {
                    n,
                    k,
                    v,
                    temperature,
                    sweep: sweep - 1,
                };
                return Err(DsclustError::MaxSweepsExceeded {
                    max_sweeps: config.max_sweeps,
                    saturation: state.saturation().to_f64().unwrap_or(f64::NAN),
                    partial: state.hard_partition(),
                });
            }
            prev.copy_from_slice(&v);

            // Per-cluster normalizers from the previous sweep.
            let mut g = vec![F::zero(); k];
            for i in 0..n {
                for a in 0..k {
                    g[a] += prev[i * k + a];
                }
            }
            for ga in g.iter_mut() {
                *ga = (*ga * kf / nf).max(F::real(G_FLOOR));
            }

            // Mean fields, synchronous in the previous sweep's values.
            for i in 0..n {
                let row = j.row(i);
                for a in 0..k {
                    let mut s = F::zero();
                    for (jj, &w) in row.iter().enumerate() {
                        s += (w + alpha) * prev[jj * k + a];
                    }
                    fields[i * k + a] = (s - gamma * prev[i * k + a]) / g[a];
                }
            }

            // Softmax with max-shift, then noise, then back onto the simplex.
            for i in 0..n {
                let h = &fields[i * k..(i + 1) * k];
                let m = h
                    .iter()
                    .map(|&x| -x / temperature)
                    .fold(F::neg_infinity(), |acc, x| acc.max(x));
                let row = &mut v[i * k..(i + 1) * k];
                let mut sum = F::zero();
                for a in 0..k {
                    let e = (-h[a] / temperature - m).exp();
                    row[a] = e;
                    sum += e;
                }
                for a in 0..k {
                    row[a] /= sum;
                }
                debug_assert!(
                    (row.iter().copied().sum::<F>() - F::one()).abs() < F::real(1e-6),
                    "softmax row must sum to 1"
                );
                for a in 0..k {
                    row[a] += config.epsilon * noise.sample(sweep as u64, i, a);
                }
                normalize_row(row);
                let prow = &prev[i * k..(i + 1) * k];
                let w = F::real(UPDATE_DAMPING);
                for a in 0..k {
                    row[a] = w * row[a] + (F::one() - w) * prow[a];
                }
            }

            let diff = v
                .iter()
                .zip(prev.iter())
                .map(|(&a, &b)| (a - b).abs())
                .sum::<F>()
                / nf;
            let saturation = v.iter().map(|&x| x * x).sum::<F>() / nf;
            sweeps.push(SweepRecord {
                sweep,
                temperature,
                saturation,
            });
            if diff <= config.inner_tol {
                break;
            }
        }

        let state = SpinState {
            n,
            k,
            v: v.clone(),
            temperature,
            sweep,
        };
        let saturation = state.saturation();
        outer.push(OuterRecord {
            temperature,
            saturation,
            energy: potts_energy(j, &state.hard_partition(), gamma, alpha),
        });
        if saturation >= config.freeze_tol && state.min_row_max() >= F::real(ROW_DECIDED_MIN) {
            let mut state = state;
            let partition = zero_temperature_descent(j, &mut state);
            outer.push(OuterRecord {
                temperature,
                saturation: state.saturation(),
                energy: potts_energy(j, &partition, gamma, alpha),
            });
            return Ok(AnnealOutcome {
                partition,
                state,
                sweeps,
                outer,
                critical_temperature: tc,
            });
        }
        temperature = temperature * config.tau;
    }
}

/// Finish the anneal in the T -> 0 limit, where the softmax update
/// degenerates to moving each element to the cluster with the lowest field.
/// Sequential single-element moves descend the clustering cost strictly, so
/// the sweep terminates; rows that move are snapped onto the hard corner.
fn zero_temperature_descent<F: Float>(
    j: &InteractionMatrix<F>,
    state: &mut SpinState<F>,
) -> Partition {
    let n = state.n;
    let k = state.k;
    let mut assignment = state.hard_partition().assignment().to_vec();
    let mut costs = vec![F::zero(); k];
    loop {
        let mut moved = false;
        for i in 0..n {
            for c in costs.iter_mut() {
                *c = F::zero();
            }
            let row = j.row(i);
            for (jj, &w) in row.iter().enumerate() {
                if jj != i {
                    costs[assignment[jj]] += w;
                }
            }
            let mut best = assignment[i];
            for a in 0..k {
                if costs[a] < costs[best] {
                    best = a;
                }
            }
            if best != assignment[i] {
                assignment[i] = best;
                moved = true;
                let vrow = &mut state.v[i * k..(i + 1) * k];
                for (a, value) in vrow.iter_mut().enumerate() {
                    *value = if a == best { F::one() } else { F::zero() };
                }
            }
        }
        if !moved {
            break;
        }
    }
    Partition::new(assignment, k)
}

/// Potts energy of a hard assignment: pairwise clustering cost plus the
/// gamma self-coupling and alpha balance terms.
pub fn potts_energy<F: Float>(
    j: &InteractionMatrix<F>,
    partition: &Partition,
    gamma: F,
    alpha: F,
) -> F {
    let n = j.len();
    let mut e = j.clustering_cost(partition);
    e -= gamma * F::count(n) / F::real(2.0);
    let mut sizes = vec![0usize; partition.cluster_count()];
    for &c in partition.assignment() {
        sizes[c] += 1;
    }
    for s in sizes {
        e += alpha / F::real(2.0) * F::count(s * s);
    }
    e
}

fn normalize_row<F: Float>(row: &mut [F]) {
    let sum: F = row.iter().copied().sum();
    for x in row.iter_mut() {
        *x /= sum;
    }
}
