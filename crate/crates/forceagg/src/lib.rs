//! Conflict-based force aggregation.
//!
//! The engine builds a situation picture from raw observation reports in two
//! passes over the same machinery:
//!
//! 1. **Reports to tracks** — pairwise conflicts between reports (required
//!    speed, classification, heading) feed a Potts-spin mean-field annealer
//!    that partitions the reports into per-vehicle clusters by minimizing
//!    the total weight of conflict ([`dsclust`]).
//! 2. **Tracks to units** — unit templates generate classification
//!    hypotheses over the tracks; a depth-first search picks the complete,
//!    consistent hypothesis set with minimal combined conflict
//!    ([`classify`]).
//!
//! [`scengen`] provides a deterministic synthetic scenario generator and a
//! scoring harness, and [`pipeline`] wires everything into the file-based
//! flow the `forceagg` CLI exposes.
//!
//! All numerics are generic over the scalar type via [`float::Float`];
//! the aliases below fix f64, which is what the pipeline and file formats
//! use.

pub mod classify;
pub mod config;
pub mod conflict;
pub mod domain;
pub mod dsclust;
pub mod float;
pub mod pipeline;
pub mod rng;
pub mod scengen;

pub use float::Float;

/// Scalar used by the shipped pipeline and all file formats.
pub type Real = f64;

pub type Position64 = domain::Position<Real>;
pub type Report64 = domain::Report<Real>;
pub type Track64 = domain::Track<Real>;
pub type SituationPicture64 = domain::SituationPicture<Real>;
pub type ConflictValue64 = conflict::ConflictValue<Real>;
pub type InteractionMatrix64 = dsclust::InteractionMatrix<Real>;
pub type AnnealConfig64 = dsclust::AnnealConfig<Real>;
pub type Hypothesis64 = classify::Hypothesis<Real>;
