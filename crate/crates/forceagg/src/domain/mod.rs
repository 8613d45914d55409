//! Core data types: observation reports, vehicle tracks, unit templates and
//! the aggregated situation picture.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::float::{wrap_angle, Float};

mod log;
mod template;
mod tree;

pub use log::{parse_report_log, serialize_report_log};
pub use template::{default_templates, CompositionSlot, UnitTemplate};
pub use tree::{ClassId, ClassificationTree};

#[cfg(test)]
pub(crate) use tree::tank_tree;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("unknown classification '{0}'")]
    UnknownClass(ClassId),
    #[error("classes '{a}' and '{b}' are not ancestor-related")]
    UnrelatedClasses { a: ClassId, b: ClassId },
    #[error("invalid classification tree: {0}")]
    InvalidTree(String),
    #[error("line {line}: field '{field}': {message}")]
    MalformedRecord {
        line: usize,
        field: String,
        message: String,
    },
    #[error("track must contain at least one report")]
    EmptyTrack,
    #[error("invalid template '{unit_type}': {message}")]
    InvalidTemplate { unit_type: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ground position in a local east/north frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position<F> {
    pub x: F,
    pub y: F,
}

impl<F: Float> Position<F> {
    pub fn new(x: F, y: F) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position<F>) -> F {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// One timestamped observation of a vehicle.
///
/// `name` identifies the true vehicle and exists only for validation and
/// scoring; no aggregation step reads it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<F> {
    pub from: String,
    pub name: Option<String>,
    pub position: Position<F>,
    pub time: F,
    pub classification: ClassId,
    pub orientation: F,
}

impl<F: Float> Report<F> {
    /// Construct a report, normalizing the orientation into [0, 2*pi).
    pub fn new(
        from: impl Into<String>,
        name: Option<String>,
        position: Position<F>,
        time: F,
        classification: ClassId,
        orientation: F,
    ) -> Self {
        Report {
            from: from.into(),
            name,
            position,
            time,
            classification,
            orientation: wrap_angle(orientation),
        }
    }
}

/// Identifier of an aggregated track (or, one level up, of a unit acting as
/// an element of a higher-level aggregation).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TrackId(pub u32);

impl std::fmt::Display for TrackId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Reports attributed to one vehicle, time-sorted, with the most specific
/// classification consistent with every member report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Track<F> {
    pub id: TrackId,
    pub reports: Vec<Report<F>>,
    pub resolved_class: ClassId,
}

impl<F: Float> Track<F> {
    /// Build a track from reports of one vehicle. Sorts by time and resolves
    /// the member classifications; unrelated classifications are an error
    /// because a track with an internal type conflict must not form.
    pub fn new(
        id: TrackId,
        mut reports: Vec<Report<F>>,
        tree: &ClassificationTree,
    ) -> Result<Self, DomainError> {
        if reports.is_empty() {
            return Err(DomainError::EmptyTrack);
        }
        reports.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite report times"));
        let resolved_class = tree.resolve_class(reports.iter().map(|r| &r.classification))?;
        Ok(Track {
            id,
            reports,
            resolved_class,
        })
    }

    pub fn first_time(&self) -> F {
        self.reports.first().expect("non-empty track").time
    }

    pub fn last_time(&self) -> F {
        self.reports.last().expect("non-empty track").time
    }
}

/// One classification candidate for an aggregated unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitCandidate<F> {
    pub unit_type: String,
    /// Conflict between the observed composition and the template.
    pub classification_conflict: F,
    /// Fraction of the template composition matched by exactly-typed members.
    pub support: F,
    /// Overall conflict of this candidate (classification and formation).
    pub conflict: F,
}

/// A group of tracks aggregated into one unit, possibly with several close
/// classification candidates presented as a disjunction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregatedUnit<F> {
    pub members: Vec<TrackId>,
    pub candidates: Vec<UnitCandidate<F>>,
    pub formation_conflict: F,
    /// Conflict of the best candidate.
    pub conflict: F,
}

/// Complete output of one aggregation pass: every track belongs to exactly
/// one unit or is listed as unaggregated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SituationPicture<F> {
    pub tracks: Vec<Track<F>>,
    pub units: Vec<AggregatedUnit<F>>,
    pub unaggregated: Vec<TrackId>,
}

impl<F: Float> SituationPicture<F> {
    /// Check the partition invariant: each track id occurs in exactly one
    /// unit or in the unaggregated list.
    pub fn is_complete_partition(&self) -> bool {
        let mut seen = std::collections::BTreeMap::new();
        for u in &self.units {
            for id in &u.members {
                *seen.entry(*id).or_insert(0usize) += 1;
            }
        }
        for id in &self.unaggregated {
            *seen.entry(*id).or_insert(0usize) += 1;
        }
        self.tracks.len() == seen.len()
            && self
                .tracks
                .iter()
                .all(|t| seen.get(&t.id).copied() == Some(1))
    }
}
