//! Pipeline configuration.
//!
//! Every parameter of the conflict measures, the annealer and the
//! classifier lives here with its published default, and any subset can be
//! overridden from a JSON config file.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::ClassifyConfig;
use crate::conflict::{DirectionParams, RampParams, ReportConflictParams, TrackConflictParams};
use crate::dsclust::AnnealConfig;
use crate::Real;

/// Annealer settings as they appear in the config file; the run seed is a
/// top-level pipeline field.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealSettings {
    pub gamma: Real,
    /// Per-K overrides of the balance coupling; the built-in schedule
    /// covers the rest.
    pub alpha_by_k: BTreeMap<usize, Real>,
    pub epsilon: Real,
    pub tau: Real,
    pub inner_tol: Real,
    pub freeze_tol: Real,
    pub max_sweeps: usize,
    pub restarts: usize,
}

impl Default for AnnealSettings {
    fn default() -> Self {
        let d: AnnealConfig<Real> = AnnealConfig::default();
        AnnealSettings {
            gamma: d.gamma,
            alpha_by_k: d.alpha_by_k,
            epsilon: d.epsilon,
            tau: d.tau,
            inner_tol: d.inner_tol,
            freeze_tol: d.freeze_tol,
            max_sweeps: d.max_sweeps,
            restarts: d.restarts,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Speed conflict ramp between reports.
    pub speed: RampParams<Real>,
    /// Heading conflict between reports.
    pub direction: DirectionParams<Real>,
    /// Median-distance ramp between tracks.
    pub track_distance: RampParams<Real>,
    /// Chord-heading ramp between tracks.
    pub track_direction: RampParams<Real>,
    pub anneal: AnnealSettings,
    /// Largest cluster count the scan will try.
    pub k_max: usize,
    /// Accept the first K whose total weight of conflict falls below this.
    pub cluster_threshold: Real,
    /// Hypotheses at or above this conflict never reach the solver.
    pub keep_threshold: Real,
    /// Candidate types within this distance of the best are presented as a
    /// disjunction.
    pub present_delta: Real,
    /// Conflict of the synthetic unaggregated-track hypothesis.
    pub unaggregated_conflict: Real,
    /// Optional cap on hypotheses per size per track during generation.
    pub per_track_cap: Option<usize>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            speed: RampParams::speed_default(),
            direction: DirectionParams::default_params(),
            track_distance: RampParams::track_distance_default(),
            track_direction: RampParams::track_direction_default(),
            anneal: AnnealSettings::default(),
            k_max: 16,
            cluster_threshold: 0.105,
            keep_threshold: 0.5,
            present_delta: 0.05,
            unaggregated_conflict: 0.5,
            per_track_cap: None,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn anneal_config(&self) -> AnnealConfig<Real> {
        AnnealConfig {
            gamma: self.anneal.gamma,
            alpha_by_k: self.anneal.alpha_by_k.clone(),
            epsilon: self.anneal.epsilon,
            tau: self.anneal.tau,
            inner_tol: self.anneal.inner_tol,
            freeze_tol: self.anneal.freeze_tol,
            seed: self.seed,
            max_sweeps: self.anneal.max_sweeps,
            restarts: self.anneal.restarts,
        }
    }

    pub fn report_params(&self) -> ReportConflictParams<Real> {
        ReportConflictParams {
            speed: self.speed,
            direction: self.direction,
        }
    }

    pub fn track_params(&self) -> TrackConflictParams<Real> {
        TrackConflictParams {
            distance: self.track_distance,
            direction: self.track_direction,
        }
    }

    pub fn classify_config(&self) -> ClassifyConfig<Real> {
        ClassifyConfig {
            keep_threshold: self.keep_threshold,
            present_delta: self.present_delta,
            fallback_conflict: self.unaggregated_conflict,
            per_track_cap: self.per_track_cap,
            track_params: self.track_params(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn defaults_match_published_values() {
        let c = PipelineConfig::default();
        assert_eq!((c.speed.p, c.speed.x1, c.speed.x2), (0.01, 22.0, 25.0));
        assert_eq!(c.direction.delta_d0, PI / 4.0);
        assert_eq!((c.direction.delta_t0, c.direction.k), (8.0, 10.0));
        assert_eq!(
            (c.track_distance.p, c.track_distance.x1, c.track_distance.x2),
            (0.01, 300.0, 1000.0)
        );
        assert_eq!(
            (c.track_direction.p, c.track_direction.x1, c.track_direction.x2),
            (0.0, 0.0, PI)
        );
        assert_eq!(c.anneal.gamma, 0.5);
        assert_eq!(c.anneal.epsilon, 0.001);
        assert_eq!(c.anneal.tau, 0.9);
        assert_eq!(c.anneal.inner_tol, 0.01);
        assert_eq!(c.anneal.freeze_tol, 0.99);
        assert!(c.anneal.alpha_by_k.is_empty());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: PipelineConfig =
            serde_json::from_str(r#"{"seed": 9, "anneal": {"tau": 0.8}}"#).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.anneal.tau, 0.8);
        assert_eq!(c.anneal.gamma, 0.5);
        assert_eq!(c.k_max, 16);
    }

    #[test]
    fn round_trips_through_json() {
        let c = PipelineConfig::default();
        let json = serde_json::to_string_pretty(&c).unwrap();
        let back: PipelineConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.cluster_threshold, c.cluster_threshold);
        assert_eq!(back.anneal.max_sweeps, c.anneal.max_sweeps);
    }
}
