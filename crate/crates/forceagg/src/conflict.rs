//! Pairwise conflict measures.
//!
//! A conflict is a value in [0, 1]: 0 means the two elements are fully
//! compatible with having a common cause, 1 is an absolute contradiction.
//! Reports are compared by required speed, classification and heading;
//! tracks by median distance over their common time interval and by chord
//! heading. Aspect conflicts combine multiplicatively:
//! `C = 1 - prod(1 - C_a)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ClassId, ClassificationTree, DomainError, Position, Report, Track};
use crate::float::{angle_diff, Float};

/// Two simultaneous reports within this distance are treated as duplicate
/// observations of one vehicle rather than as an infinite-speed event.
const DUPLICATE_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ConflictError {
    #[error("time {t} outside track span [{start}, {end}]")]
    OutsideTrackSpan { t: f64, start: f64, end: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// A conflict value, guaranteed in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConflictValue<F>(F);

impl<F: Float> ConflictValue<F> {
    /// Wrap a raw value, clamping roundoff spill outside [0, 1].
    pub fn new(value: F) -> Self {
        debug_assert!(
            value >= -F::real(1e-9) && value <= F::one() + F::real(1e-9),
            "conflict far outside [0,1]: {value}"
        );
        ConflictValue(value.max(F::zero()).min(F::one()))
    }

    pub fn zero() -> Self {
        ConflictValue(F::zero())
    }

    pub fn one() -> Self {
        ConflictValue(F::one())
    }

    pub fn value(&self) -> F {
        self.0
    }
}

/// Piecewise-linear conflict ramp: `p` at the lower knee `x1`, 1 at and
/// beyond the upper knee `x2`, proportional below `x1`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RampParams<F> {
    pub p: F,
    pub x1: F,
    pub x2: F,
}

impl<F: Float> RampParams<F> {
    pub fn new(p: F, x1: F, x2: F) -> Self {
        assert!(p >= F::zero() && p <= F::one(), "p must be in [0,1]");
        assert!(F::zero() <= x1 && x1 < x2, "need 0 <= x1 < x2");
        RampParams { p, x1, x2 }
    }

    /// Published speed-conflict parameters: p = 0.01, knees at 22 and 25 m/s.
    pub fn speed_default() -> Self {
        RampParams::new(F::real(0.01), F::real(22.0), F::real(25.0))
    }

    /// Published track-distance parameters: p = 0.01, knees at 300 and 1000 m.
    pub fn track_distance_default() -> Self {
        RampParams::new(F::real(0.01), F::real(300.0), F::real(1000.0))
    }

    /// Track heading difference maps linearly onto [0, 1] over [0, pi].
    pub fn track_direction_default() -> Self {
        RampParams::new(F::zero(), F::zero(), F::real(std::f64::consts::PI))
    }
}

/// Parameters of the report heading comparison.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DirectionParams<F> {
    /// Smallest heading difference considered significant, radians.
    pub delta_d0: F,
    /// Reports further apart in time than this carry no heading evidence.
    pub delta_t0: F,
    /// Slope softener: larger k makes the conflict grow faster with heading
    /// difference relative to time separation.
    pub k: F,
}

impl<F: Float> DirectionParams<F> {
    pub fn new(delta_d0: F, delta_t0: F, k: F) -> Self {
        assert!(
            delta_d0 > F::zero() && delta_d0 <= F::real(std::f64::consts::PI),
            "delta_d0 must be in (0, pi]"
        );
        assert!(delta_t0 > F::zero(), "delta_t0 must be positive");
        assert!(k > F::zero(), "k must be positive");
        DirectionParams {
            delta_d0,
            delta_t0,
            k,
        }
    }

    /// Published values: quarter turn threshold, 8 s horizon, k = 10.
    pub fn default_params() -> Self {
        DirectionParams::new(
            F::real(std::f64::consts::FRAC_PI_4),
            F::real(8.0),
            F::real(10.0),
        )
    }
}

/// All parameters of the report-level conflict.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReportConflictParams<F> {
    pub speed: RampParams<F>,
    pub direction: DirectionParams<F>,
}

impl<F: Float> Default for ReportConflictParams<F> {
    fn default() -> Self {
        ReportConflictParams {
            speed: RampParams::speed_default(),
            direction: DirectionParams::default_params(),
        }
    }
}

/// All parameters of the track-level conflict.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrackConflictParams<F> {
    pub distance: RampParams<F>,
    pub direction: RampParams<F>,
}

impl<F: Float> Default for TrackConflictParams<F> {
    fn default() -> Self {
        TrackConflictParams {
            distance: RampParams::track_distance_default(),
            direction: RampParams::track_direction_default(),
        }
    }
}

/// Evaluate the conflict ramp at `x >= 0`.
pub fn ramp_conflict<F: Float>(x: F, params: &RampParams<F>) -> ConflictValue<F> {
    let RampParams { p, x1, x2 } = *params;
    let v = if x >= x2 {
        F::one()
    } else if x >= x1 {
        ((x - x1) + p * (x2 - x)) / (x2 - x1)
    } else {
        // Only reachable when x1 > 0, so the division is safe.
        x * p / x1
    };
    ConflictValue::new(v)
}

/// Combine aspect conflicts: `1 - prod(1 - c_a)`. Empty input combines to 0.
pub fn combine_aspects<F, I>(conflicts: I) -> ConflictValue<F>
where
    F: Float,
    I: IntoIterator<Item = ConflictValue<F>>,
{
    let survival = conflicts
        .into_iter()
        .fold(F::one(), |acc, c| acc * (F::one() - c.value()));
    ConflictValue::new(F::one() - survival)
}

/// Conflict from the speed a single vehicle would need to produce both
/// reports. Simultaneous reports at distinct positions are an absolute
/// conflict; within duplicate distance they are compatible.
pub fn speed_conflict<F: Float>(
    r1: &Report<F>,
    r2: &Report<F>,
    params: &RampParams<F>,
) -> ConflictValue<F> {
    let distance = r1.position.distance(&r2.position);
    let dt = (r1.time - r2.time).abs();
    if dt == F::zero() {
        return if distance > F::real(DUPLICATE_DISTANCE_M) {
            ConflictValue::one()
        } else {
            ConflictValue::zero()
        };
    }
    ramp_conflict(distance / dt, params)
}

/// Zero when one classification is a descendant of the other (or equal),
/// one otherwise.
pub fn type_conflict<F: Float>(
    c1: &ClassId,
    c2: &ClassId,
    tree: &ClassificationTree,
) -> Result<ConflictValue<F>, ConflictError> {
    Ok(if tree.is_descendant(c1, c2)? {
        ConflictValue::zero()
    } else {
        ConflictValue::one()
    })
}

/// Conflict from heading disagreement between two near-simultaneous reports.
pub fn direction_conflict<F: Float>(
    r1: &Report<F>,
    r2: &Report<F>,
    params: &DirectionParams<F>,
) -> ConflictValue<F> {
    let dd = angle_diff(r1.orientation, r2.orientation);
    let dt = (r1.time - r2.time).abs();
    if dt <= params.delta_t0 && dd >= params.delta_d0 {
        let v = params.k * dd / (F::real(std::f64::consts::PI) * (params.k + dt));
        ConflictValue::new(v.min(F::one()))
    } else {
        ConflictValue::zero()
    }
}

/// Overall conflict between two reports: speed, type and direction aspects
/// combined.
pub fn report_conflict<F: Float>(
    r1: &Report<F>,
    r2: &Report<F>,
    tree: &ClassificationTree,
    params: &ReportConflictParams<F>,
) -> Result<ConflictValue<F>, ConflictError> {
    Ok(combine_aspects([
        speed_conflict(r1, r2, &params.speed),
        type_conflict(&r1.classification, &r2.classification, tree)?,
        direction_conflict(r1, r2, &params.direction),
    ]))
}

/// Position of a track at time `t`, linearly interpolated between the
/// bracketing reports. No extrapolation outside the track span.
pub fn position_at<F: Float>(track: &Track<F>, t: F) -> Result<Position<F>, ConflictError> {
    let first = track.first_time();
    let last = track.last_time();
    if t < first || t > last {
        return Err(ConflictError::OutsideTrackSpan {
            t: t.to_f64().unwrap_or(f64::NAN),
            start: first.to_f64().unwrap_or(f64::NAN),
            end: last.to_f64().unwrap_or(f64::NAN),
        });
    }
    let reports = &track.reports;
    let after = reports
        .iter()
        .position(|r| r.time >= t)
        .expect("t <= last report time");
    let b = &reports[after];
    if b.time == t || after == 0 {
        return Ok(b.position);
    }
    let a = &reports[after - 1];
    let span = b.time - a.time;
    if span == F::zero() {
        return Ok(a.position);
    }
    let w = (t - a.time) / span;
    Ok(Position::new(
        a.position.x + (b.position.x - a.position.x) * w,
        a.position.y + (b.position.y - a.position.y) * w,
    ))
}

/// Overlap of two track spans: (max of first times, min of last times), or
/// none when the tracks do not coexist.
pub fn common_interval<F: Float>(a: &Track<F>, b: &Track<F>) -> Option<(F, F)> {
    let start = a.first_time().max(b.first_time());
    let end = a.last_time().min(b.last_time());
    (start <= end).then_some((start, end))
}

/// Distinct report times of both tracks inside their common interval; the
/// instants at which track-to-track distances are sampled.
pub fn common_sample_times<F: Float>(a: &Track<F>, b: &Track<F>) -> Vec<F> {
    let Some((start, end)) = common_interval(a, b) else {
        return Vec::new();
    };
    let mut times: Vec<F> = a
        .reports
        .iter()
        .chain(b.reports.iter())
        .map(|r| r.time)
        .filter(|t| *t >= start && *t <= end)
        .collect();
    times.sort_by(|x, y| x.partial_cmp(y).expect("finite report times"));
    times.dedup();
    times
}

fn median<F: Float>(sorted: &[F]) -> F {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / F::real(2.0)
    }
}

/// Conflict from the median distance between two tracks over their common
/// time interval. Without overlap only weak spatial evidence remains: the
/// distance between the temporally nearest reports is used instead.
pub fn distance_conflict<F: Float>(
    a: &Track<F>,
    b: &Track<F>,
    params: &RampParams<F>,
) -> ConflictValue<F> {
    let times = common_sample_times(a, b);
    let x = if times.is_empty() {
        if a.last_time() < b.first_time() {
            a.reports
                .last()
                .expect("non-empty track")
                .position
                .distance(&b.reports.first().expect("non-empty track").position)
        } else {
            b.reports
                .last()
                .expect("non-empty track")
                .position
                .distance(&a.reports.first().expect("non-empty track").position)
        }
    } else {
        let mut distances: Vec<F> = times
            .iter()
            .map(|&t| {
                let pa = position_at(a, t).expect("t inside common interval");
                let pb = position_at(b, t).expect("t inside common interval");
                pa.distance(&pb)
            })
            .collect();
        distances.sort_by(|x, y| x.partial_cmp(y).expect("finite distances"));
        median(&distances)
    };
    ramp_conflict(x, params)
}

/// Conflict from overall heading disagreement: each track is reduced to the
/// chord from its position at the common start to its position at the common
/// end. A stationary chord carries no motion evidence and yields 0.
pub fn track_direction_conflict<F: Float>(
    a: &Track<F>,
    b: &Track<F>,
    params: &RampParams<F>,
) -> ConflictValue<F> {
    let Some((start, end)) = common_interval(a, b) else {
        return ConflictValue::zero();
    };
    if start == end {
        return ConflictValue::zero();
    }
    let heading = |t: &Track<F>| -> Option<F> {
        let p0 = position_at(t, start).expect("start inside span");
        let p1 = position_at(t, end).expect("end inside span");
        let (dx, dy) = (p1.x - p0.x, p1.y - p0.y);
        (dx != F::zero() || dy != F::zero()).then(|| dy.atan2(dx))
    };
    match (heading(a), heading(b)) {
        (Some(ha), Some(hb)) => ramp_conflict(angle_diff(ha, hb), params),
        _ => ConflictValue::zero(),
    }
}

/// Overall conflict between two tracks: distance and direction aspects
/// combined.
pub fn track_conflict<F: Float>(
    a: &Track<F>,
    b: &Track<F>,
    params: &TrackConflictParams<F>,
) -> ConflictValue<F> {
    combine_aspects([
        distance_conflict(a, b, &params.distance),
        track_direction_conflict(a, b, &params.direction),
    ])
}
