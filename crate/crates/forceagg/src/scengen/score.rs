//! Scoring a situation picture against ground truth.
//!
//! The aggregation process never reads vehicle names; they exist exactly so
//! this module can grade its output.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ClassId, SituationPicture, Track};
use crate::Real;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("report from '{from}' at t={time} carries no vehicle name")]
    MissingNames { from: String, time: f64 },
    #[error("vehicle name '{0}' does not follow the unit/vehicle scheme")]
    BadName(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthVehicle {
    pub name: String,
    pub class: ClassId,
    /// Name of the unit the vehicle belongs to.
    pub unit: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthUnit {
    pub name: String,
    pub unit_type: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub vehicles: Vec<TruthVehicle>,
    pub units: Vec<TruthUnit>,
}

impl GroundTruth {
    /// Reconstruct the truth from report names of the form
    /// `<type>-<n>/<class>-<k>`. Only observed vehicles appear.
    pub fn from_reports<'a, I>(reports: I) -> Result<GroundTruth, ScoreError>
    where
        I: IntoIterator<Item = &'a crate::domain::Report<Real>>,
    {
        let mut vehicles: BTreeMap<String, TruthVehicle> = BTreeMap::new();
        for report in reports {
            let name = report.name.clone().ok_or_else(|| ScoreError::MissingNames {
                from: report.from.clone(),
                time: report.time,
            })?;
            let (unit, _vehicle_part) = name
                .split_once('/')
                .ok_or_else(|| ScoreError::BadName(name.clone()))?;
            vehicles
                .entry(name.clone())
                .or_insert_with(|| TruthVehicle {
                    name: name.clone(),
                    class: report.classification.clone(),
                    unit: unit.to_owned(),
                });
        }
        let mut units: BTreeMap<String, TruthUnit> = BTreeMap::new();
        for v in vehicles.values() {
            let unit_type = v
                .unit
                .rsplit_once('-')
                .map(|(ty, _)| ty.to_owned())
                .ok_or_else(|| ScoreError::BadName(v.name.clone()))?;
            units
                .entry(v.unit.clone())
                .or_insert_with(|| TruthUnit {
                    name: v.unit.clone(),
                    unit_type,
                    members: Vec::new(),
                })
                .members
                .push(v.name.clone());
        }
        Ok(GroundTruth {
            vehicles: vehicles.into_values().collect(),
            units: units.into_values().collect(),
        })
    }
}

/// Quality metrics of one aggregation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    /// Fraction of reports whose track is dominated by their vehicle.
    pub report_purity: f64,
    /// Same-vehicle fraction of same-track report pairs.
    pub pairwise_precision: f64,
    /// Same-track fraction of same-vehicle report pairs.
    pub pairwise_recall: f64,
    pub track_count: usize,
    pub true_vehicle_count: usize,
    /// Tracks minus observed vehicles (signed).
    pub vehicle_count_error: i64,
    pub predicted_units: usize,
    pub true_units: usize,
    pub matched_units: usize,
    /// Fraction of predicted units matching a true unit (members and type).
    pub unit_precision: f64,
    /// Fraction of true units recovered exactly.
    pub unit_recall: f64,
}

fn majority_name(track: &Track<Real>) -> Result<String, ScoreError> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for report in &track.reports {
        let name = report.name.as_deref().ok_or_else(|| ScoreError::MissingNames {
            from: report.from.clone(),
            time: report.time,
        })?;
        *counts.entry(name).or_insert(0) += 1;
    }
    // BTreeMap iteration breaks count ties towards the smaller name.
    Ok(counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(name, _)| (*name).to_owned())
        .expect("tracks are non-empty"))
}

/// Grade `picture` against `truth`.
pub fn score(picture: &SituationPicture<Real>, truth: &GroundTruth) -> Result<Metrics, ScoreError> {
    // Report-level clustering quality.
    let mut total_reports = 0usize;
    let mut majority_sum = 0usize;
    let mut same_track_pairs = 0usize;
    let mut same_track_same_name = 0usize;
    let mut name_counts: BTreeMap<String, usize> = BTreeMap::new();
    for track in &picture.tracks {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for report in &track.reports {
            let name = report.name.as_deref().ok_or_else(|| ScoreError::MissingNames {
                from: report.from.clone(),
                time: report.time,
            })?;
            *counts.entry(name).or_insert(0) += 1;
            *name_counts.entry(name.to_owned()).or_insert(0) += 1;
            total_reports += 1;
        }
        let n = track.reports.len();
        same_track_pairs += n * (n - 1) / 2;
        majority_sum += counts.values().copied().max().unwrap_or(0);
        same_track_same_name += counts.values().map(|&c| c * (c - 1) / 2).sum::<usize>();
    }
    let same_name_pairs: usize = name_counts.values().map(|&c| c * (c - 1) / 2).sum();

    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let report_purity = ratio(majority_sum, total_reports);
    let pairwise_precision = ratio(same_track_same_name, same_track_pairs);
    let pairwise_recall = ratio(same_track_same_name, same_name_pairs);

    let observed_vehicles = name_counts.len();
    let vehicle_count_error = picture.tracks.len() as i64 - observed_vehicles as i64;

    // Unit-level quality on (member name set, unit type).
    let track_names: BTreeMap<_, _> = picture
        .tracks
        .iter()
        .map(|t| Ok((t.id, majority_name(t)?)))
        .collect::<Result<_, ScoreError>>()?;
    let predicted: BTreeSet<(BTreeSet<&str>, &str)> = picture
        .units
        .iter()
        .filter_map(|u| {
            let ty = u.candidates.first()?.unit_type.as_str();
            let names = u
                .members
                .iter()
                .map(|id| track_names[id].as_str())
                .collect();
            Some((names, ty))
        })
        .collect();
    let observed: BTreeSet<&str> = name_counts.keys().map(String::as_str).collect();
    let actual: BTreeSet<(BTreeSet<&str>, &str)> = truth
        .units
        .iter()
        .filter_map(|u| {
            let names: BTreeSet<&str> = u
                .members
                .iter()
                .map(String::as_str)
                .filter(|n| observed.contains(n))
                .collect();
            (!names.is_empty()).then_some((names, u.unit_type.as_str()))
        })
        .collect();
    let matched_units = predicted.intersection(&actual).count();

    Ok(Metrics {
        report_purity,
        pairwise_precision,
        pairwise_recall,
        track_count: picture.tracks.len(),
        true_vehicle_count: observed_vehicles,
        vehicle_count_error,
        predicted_units: picture.units.len(),
        true_units: actual.len(),
        matched_units,
        unit_precision: ratio(matched_units, predicted.len()),
        unit_recall: ratio(matched_units, actual.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{
        AggregatedUnit, ClassificationTree, Position, Report, TrackId, UnitCandidate,
    };

    fn named_report(name: &str, time: f64) -> Report<Real> {
        Report::new(
            "obs",
            Some(name.to_owned()),
            Position::new(0.0, 0.0),
            time,
            "apc_tracked".into(),
            0.0,
        )
    }

    fn track_of(id: u32, names: &[&str]) -> Track<Real> {
        let tree = ClassificationTree::default_vehicles();
        let reports = names
            .iter()
            .enumerate()
            .map(|(i, n)| named_report(n, i as f64))
            .collect();
        Track::new(TrackId(id), reports, &tree).unwrap()
    }

    fn unit_of(members: &[u32], ty: &str) -> AggregatedUnit<Real> {
        AggregatedUnit {
            members: members.iter().map(|&i| TrackId(i)).collect(),
            candidates: vec![UnitCandidate {
                unit_type: ty.into(),
                classification_conflict: 0.0,
                support: 1.0,
                conflict: 0.0,
            }],
            formation_conflict: 0.0,
            conflict: 0.0,
        }
    }

    fn four_vehicle_truth() -> GroundTruth {
        let names: Vec<String> = (0..4)
            .map(|k| format!("mech_platoon-0/apc_tracked-{k}"))
            .collect();
        GroundTruth {
            vehicles: names
                .iter()
                .map(|n| TruthVehicle {
                    name: n.clone(),
                    class: "apc_tracked".into(),
                    unit: "mech_platoon-0".into(),
                })
                .collect(),
            units: vec![TruthUnit {
                name: "mech_platoon-0".into(),
                unit_type: "mech_platoon".into(),
                members: names,
            }],
        }
    }

    #[test]
    fn perfect_recovery_scores_ones() {
        let truth = four_vehicle_truth();
        let tracks: Vec<Track<Real>> = (0..4)
            .map(|i| {
                let name = format!("mech_platoon-0/apc_tracked-{i}");
                track_of(i, &[&name, &name, &name])
            })
            .collect();
        let picture = SituationPicture {
            tracks,
            units: vec![unit_of(&[0, 1, 2, 3], "mech_platoon")],
            unaggregated: vec![],
        };
        let m = score(&picture, &truth).unwrap();
        assert_eq!(m.report_purity, 1.0);
        assert_eq!(m.pairwise_precision, 1.0);
        assert_eq!(m.pairwise_recall, 1.0);
        assert_eq!(m.vehicle_count_error, 0);
        assert_eq!(m.unit_precision, 1.0);
        assert_eq!(m.unit_recall, 1.0);
    }

    #[test]
    fn one_lump_cluster_purity() {
        let truth = four_vehicle_truth();
        // All reports of 4 vehicles (equal counts) in a single track.
        let names: Vec<String> = (0..4)
            .map(|k| format!("mech_platoon-0/apc_tracked-{k}"))
            .collect();
        let mut all: Vec<&str> = Vec::new();
        for n in &names {
            for _ in 0..3 {
                all.push(n);
            }
        }
        let picture = SituationPicture {
            tracks: vec![track_of(0, &all)],
            units: vec![],
            unaggregated: vec![TrackId(0)],
        };
        let m = score(&picture, &truth).unwrap();
        assert!((m.report_purity - 0.25).abs() < 1e-12);
        assert_eq!(m.vehicle_count_error, 1 - 4);
    }

    #[test]
    fn empty_picture_has_zero_recall() {
        let truth = four_vehicle_truth();
        let name = "mech_platoon-0/apc_tracked-0";
        // One observed vehicle exists in the log-derived truth; the picture
        // aggregates nothing.
        let picture = SituationPicture {
            tracks: vec![track_of(0, &[name])],
            units: vec![],
            unaggregated: vec![TrackId(0)],
        };
        let m = score(&picture, &truth).unwrap();
        assert_eq!(m.unit_recall, 0.0);
        assert_eq!(m.predicted_units, 0);
    }

    #[test]
    fn missing_names_error() {
        let tree = ClassificationTree::default_vehicles();
        let anonymous = Report::new(
            "obs",
            None,
            Position::new(0.0, 0.0),
            0.0,
            ClassId::from("apc_tracked"),
            0.0,
        );
        let picture = SituationPicture {
            tracks: vec![Track::new(TrackId(0), vec![anonymous], &tree).unwrap()],
            units: vec![],
            unaggregated: vec![TrackId(0)],
        };
        assert!(matches!(
            score(&picture, &four_vehicle_truth()),
            Err(ScoreError::MissingNames { .. })
        ));
    }

    #[test]
    fn truth_from_reports_reconstructs_units() {
        let reports = vec![
            named_report("mech_platoon-0/apc_tracked-0", 0.0),
            named_report("mech_platoon-0/apc_tracked-1", 0.0),
            named_report("mbt_platoon-1/mbt-0", 0.0),
        ];
        let truth = GroundTruth::from_reports(&reports).unwrap();
        assert_eq!(truth.vehicles.len(), 3);
        assert_eq!(truth.units.len(), 2);
        let mech = truth
            .units
            .iter()
            .find(|u| u.name == "mech_platoon-0")
            .unwrap();
        assert_eq!(mech.unit_type, "mech_platoon");
        assert_eq!(mech.members.len(), 2);
    }
}
