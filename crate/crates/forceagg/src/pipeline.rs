//! File-based aggregation pipeline: the library side of the CLI.
//!
//! Reports aggregate into tracks, tracks classify into units, and every
//! stage is a pure function of its inputs plus the seed, so identical runs
//! produce identical bytes.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::classify_units;
use crate::config::PipelineConfig;
use crate::conflict::{report_conflict, ConflictError};
use crate::domain::{
    ClassId, ClassificationTree, DomainError, Report, SituationPicture, Track, TrackId,
    UnitTemplate,
};
use crate::dsclust::{
    cluster_conflicts, select_cluster_count, DsclustError, SweepRecord,
};
use crate::scengen::{ScengenError, ScoreError};
use crate::Real;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Conflict(#[from] ConflictError),
    #[error(transparent)]
    Clustering(#[from] DsclustError),
    #[error(transparent)]
    Scenario(#[from] ScengenError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    /// True when the failure is the annealer running out of sweeps rather
    /// than bad input.
    pub fn is_non_convergence(&self) -> bool {
        matches!(
            self,
            PipelineError::Clustering(DsclustError::MaxSweepsExceeded { .. })
        )
    }
}

/// Result of aggregating reports into tracks.
#[derive(Debug, Clone)]
pub struct AggregationOutput {
    pub tracks: Vec<Track<Real>>,
    /// Selected cluster count (before any class-consistency split).
    pub k: usize,
    /// Remaining conflict inside each final track, aligned with `tracks`.
    pub cluster_conflicts: Vec<Real>,
    /// Aggregate conflict recombined from the per-track values.
    pub metaconflict: Real,
    pub total_weight: Real,
    pub under_threshold: bool,
    /// (K, total weight of conflict) for each K the scan tried.
    pub weights_by_k: Vec<(usize, Real)>,
    /// Clusters the class-consistency repair had to split.
    pub split_clusters: usize,
    /// Convergence trace of the selected K's anneal.
    pub sweeps: Vec<SweepRecord<Real>>,
}

/// Cluster reports into per-vehicle tracks.
///
/// Pairwise conflicts feed the annealer; the cluster count comes from the
/// threshold scan. Should a cluster still contain a classification conflict
/// (the energy is soft), it is split into maximal class-consistent
/// subgroups before tracks are built, so the hard track invariant holds.
pub fn aggregate_reports(
    reports: &[Report<Real>],
    tree: &ClassificationTree,
    config: &PipelineConfig,
) -> Result<AggregationOutput, PipelineError> {
    let n = reports.len();
    if n == 0 {
        return Ok(AggregationOutput {
            tracks: Vec::new(),
            k: 0,
            cluster_conflicts: Vec::new(),
            metaconflict: 0.0,
            total_weight: 0.0,
            under_threshold: true,
            weights_by_k: Vec::new(),
            split_clusters: 0,
            sweeps: Vec::new(),
        });
    }

    let params = config.report_params();
    let mut matrix = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let c = report_conflict(&reports[i], &reports[j], tree, &params)?.value();
            matrix[i * n + j] = c;
            matrix[j * n + i] = c;
        }
    }
    let conflict_fn = |i: usize, j: usize| matrix[i * n + j];

    let interactions = crate::dsclust::build_interactions(n, conflict_fn)?;
    let selection = select_cluster_count(
        &interactions,
        conflict_fn,
        config.k_max.min(n),
        config.cluster_threshold,
        &config.anneal_config(),
    )?;

    // Class-consistency repair plus track construction.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut split_clusters = 0usize;
    for cluster in selection.partition.clusters() {
        let subgroups = split_by_class(&cluster, reports, tree);
        if subgroups.len() > 1 {
            split_clusters += 1;
        }
        groups.extend(subgroups);
    }
    let final_partition = {
        let mut assignment = vec![0usize; n];
        for (g, members) in groups.iter().enumerate() {
            for &m in members {
                assignment[m] = g;
            }
        }
        crate::dsclust::Partition::new(assignment, groups.len())
    };

    let cluster_conflicts = cluster_conflicts(&final_partition, conflict_fn);
    let metaconflict = 1.0
        - cluster_conflicts
            .iter()
            .fold(1.0, |acc, c| acc * (1.0 - c));
    let tracks = final_partition
        .clusters()
        .into_iter()
        .enumerate()
        .map(|(idx, members)| {
            let cluster_reports = members.iter().map(|&m| reports[m].clone()).collect();
            Track::new(TrackId(idx as u32), cluster_reports, tree)
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(AggregationOutput {
        tracks,
        k: selection.k,
        cluster_conflicts,
        metaconflict,
        total_weight: selection.total_weight,
        under_threshold: selection.under_threshold,
        weights_by_k: selection.weights_by_k,
        split_clusters,
        sweeps: selection.outcome.sweeps,
    })
}

/// Greedy split of a cluster into maximal groups whose classifications are
/// pairwise ancestor-related. A report joins the first group whose deepest
/// class it is related to.
fn split_by_class(
    members: &[usize],
    reports: &[Report<Real>],
    tree: &ClassificationTree,
) -> Vec<Vec<usize>> {
    let mut groups: Vec<(ClassId, Vec<usize>)> = Vec::new();
    for &m in members {
        let class = &reports[m].classification;
        let depth = tree.depth(class).expect("validated on parse");
        let mut placed = false;
        for (deepest, group) in groups.iter_mut() {
            if tree.is_descendant(class, deepest).expect("validated") {
                group.push(m);
                if depth > tree.depth(deepest).expect("validated") {
                    *deepest = class.clone();
                }
                placed = true;
                break;
            }
        }
        if !placed {
            groups.push((class.clone(), vec![m]));
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Classify tracks into units with the level-1 templates.
pub fn classify_tracks(
    tracks: &[Track<Real>],
    templates: &[UnitTemplate],
    tree: &ClassificationTree,
    config: &PipelineConfig,
) -> SituationPicture<Real> {
    classify_units(tracks, templates, tree, &config.classify_config())
}

/// On-disk track record: report indices into the source log plus the
/// embedded reports, so the file stands alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackRecord {
    pub id: TrackId,
    pub resolved_class: ClassId,
    pub cluster_conflict: Real,
    pub report_ids: Vec<usize>,
    pub reports: Vec<Report<Real>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TracksFile {
    pub k: usize,
    pub metaconflict: Real,
    pub total_weight: Real,
    pub tracks: Vec<TrackRecord>,
}

impl TracksFile {
    /// Build the file image from an aggregation run over `reports`.
    pub fn from_output(output: &AggregationOutput, reports: &[Report<Real>]) -> TracksFile {
        // Recover source indices by identity: reports are cloned untouched
        // into tracks, in input order within each cluster.
        let mut consumed = vec![false; reports.len()];
        let mut locate = |r: &Report<Real>| -> usize {
            for (i, original) in reports.iter().enumerate() {
                if !consumed[i] && original == r {
                    consumed[i] = true;
                    return i;
                }
            }
            unreachable!("track report missing from source log");
        };
        TracksFile {
            k: output.k,
            metaconflict: output.metaconflict,
            total_weight: output.total_weight,
            tracks: output
                .tracks
                .iter()
                .zip(output.cluster_conflicts.iter())
                .map(|(t, &c)| TrackRecord {
                    id: t.id,
                    resolved_class: t.resolved_class.clone(),
                    cluster_conflict: c,
                    report_ids: t.reports.iter().map(&mut locate).collect(),
                    reports: t.reports.clone(),
                })
                .collect(),
        }
    }

    /// Reconstruct tracks for the classification stage.
    pub fn to_tracks(&self, tree: &ClassificationTree) -> Result<Vec<Track<Real>>, PipelineError> {
        self.tracks
            .iter()
            .map(|r| Track::new(r.id, r.reports.clone(), tree).map_err(PipelineError::from))
            .collect()
    }
}

/// Write the per-sweep convergence trace as CSV.
pub fn write_trace_csv<W: Write>(
    sweeps: &[SweepRecord<Real>],
    mut writer: W,
) -> Result<(), PipelineError> {
    writeln!(writer, "sweep,temperature,saturation")?;
    for s in sweeps {
        writeln!(writer, "{},{},{}", s.sweep, s.temperature, s.saturation)?;
    }
    Ok(())
}
