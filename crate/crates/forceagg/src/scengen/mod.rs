//! Synthetic scenario generator.
//!
//! Ground-truth units expand into vehicles that drive waypoint paths in
//! line-abreast formation; observers emit one report per visible vehicle
//! every report period, with Gaussian position and orientation noise and a
//! classification coarsened by distance. Everything is a pure function of
//! the spec and seed, so a scenario reproduces byte for byte.
//!
//! Vehicle names encode the ground truth (`mech_platoon-0/apc_tracked-2`):
//! the part before `/` names the unit, its trailing `-N` separates units of
//! the same type. Scoring reconstructs the truth from these names alone.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ClassId, ClassificationTree, Position, Report, UnitTemplate};
use crate::rng::CounterRng;
use crate::Real;

mod score;

pub use score::{score, GroundTruth, Metrics, ScoreError, TruthUnit, TruthVehicle};

#[derive(Debug, Error)]
pub enum ScengenError {
    #[error("no template for unit type '{0}'")]
    UnknownTemplate(String),
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
}

/// One ground-truth unit: type, route and formation spacing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitSpec {
    pub unit_type: String,
    pub start: Position<Real>,
    #[serde(default)]
    pub waypoints: Vec<Position<Real>>,
    /// Meters per second along the route.
    pub speed: Real,
    /// Lateral spacing between adjacent vehicles, meters.
    #[serde(default = "default_spacing")]
    pub spacing: Real,
}

fn default_spacing() -> Real {
    100.0
}

/// A sensor platform; static unless waypoints are given.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObserverSpec {
    pub id: String,
    pub position: Position<Real>,
    #[serde(default)]
    pub waypoints: Vec<Position<Real>>,
    #[serde(default)]
    pub speed: Real,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub position_sigma: Real,
    pub orientation_sigma: Real,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            position_sigma: 15.0,
            orientation_sigma: 0.1,
        }
    }
}

/// Classification detail available within a range: reports from at most
/// `max_range` meters reveal tree depth `depth`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoarseningBand {
    pub max_range: Real,
    pub depth: usize,
}

fn default_coarsening() -> Vec<CoarseningBand> {
    vec![
        CoarseningBand {
            max_range: 1000.0,
            depth: 8,
        },
        CoarseningBand {
            max_range: 2500.0,
            depth: 1,
        },
    ]
}

fn default_sensing_range() -> Real {
    4000.0
}

/// Complete description of a synthetic scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub units: Vec<UnitSpec>,
    pub observers: Vec<ObserverSpec>,
    /// Scenario length, seconds.
    pub duration: Real,
    /// Seconds between report ticks.
    pub report_period: Real,
    #[serde(default)]
    pub noise: NoiseSpec,
    /// Ranges of increasing coarseness; beyond the last band a vehicle is
    /// still detected (as the root class) out to `sensing_range`.
    #[serde(default = "default_coarsening")]
    pub coarsening: Vec<CoarseningBand>,
    #[serde(default = "default_sensing_range")]
    pub sensing_range: Real,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    fn validate(&self) -> Result<(), ScengenError> {
        let bad = |msg: String| Err(ScengenError::InvalidSpec(msg));
        if !(self.report_period > 0.0) {
            return bad(format!("report_period must be > 0, got {}", self.report_period));
        }
        if self.duration < 0.0 {
            return bad("duration must be >= 0".into());
        }
        for w in self.coarsening.windows(2) {
            if !(w[0].max_range < w[1].max_range) {
                return bad("coarsening ranges must be strictly increasing".into());
            }
        }
        for u in &self.units {
            if !(u.speed >= 0.0 && u.speed <= 22.0) {
                return bad(format!(
                    "unit '{}' speed {} outside [0, 22] m/s",
                    u.unit_type, u.speed
                ));
            }
            if !(u.spacing > 0.0) {
                return bad(format!("unit '{}' spacing must be > 0", u.unit_type));
            }
        }
        Ok(())
    }
}

/// Position and heading along a waypoint route at constant speed; the mover
/// halts at the final waypoint.
fn route_state(points: &[Position<Real>], speed: Real, t: Real) -> (Position<Real>, Real) {
    debug_assert!(!points.is_empty());
    let mut heading = 0.0;
    if points.len() == 1 || speed == 0.0 {
        if points.len() > 1 {
            let (dx, dy) = (points[1].x - points[0].x, points[1].y - points[0].y);
            heading = dy.atan2(dx);
        }
        return (points[0], heading);
    }
    let mut remaining = speed * t;
    for leg in points.windows(2) {
        let (dx, dy) = (leg[1].x - leg[0].x, leg[1].y - leg[0].y);
        let len = (dx * dx + dy * dy).sqrt();
        if len > 0.0 {
            heading = dy.atan2(dx);
            if remaining <= len {
                let w = remaining / len;
                return (
                    Position::new(leg[0].x + dx * w, leg[0].y + dy * w),
                    heading,
                );
            }
            remaining -= len;
        }
    }
    (*points.last().expect("non-empty route"), heading)
}

struct Vehicle {
    name: String,
    class: ClassId,
    route: Vec<Position<Real>>,
    speed: Real,
    /// Signed lateral offset from the unit path, meters.
    offset: Real,
}

impl Vehicle {
    fn state_at(&self, t: Real) -> (Position<Real>, Real) {
        let (center, heading) = route_state(&self.route, self.speed, t);
        // Line abreast: offset perpendicular to the direction of travel.
        let (px, py) = (-heading.sin(), heading.cos());
        (
            Position::new(center.x + px * self.offset, center.y + py * self.offset),
            heading,
        )
    }
}

/// Expand the spec into ground truth and the full report log.
pub fn generate_scenario(
    spec: &ScenarioSpec,
    templates: &[UnitTemplate],
    tree: &ClassificationTree,
) -> Result<(GroundTruth, Vec<Report<Real>>), ScengenError> {
    spec.validate()?;

    let mut vehicles: Vec<Vehicle> = Vec::new();
    let mut truth_vehicles = Vec::new();
    let mut truth_units = Vec::new();
    for (ui, unit) in spec.units.iter().enumerate() {
        let template = templates
            .iter()
            .find(|t| t.unit_type == unit.unit_type && t.level == 1)
            .ok_or_else(|| ScengenError::UnknownTemplate(unit.unit_type.clone()))?;
        let unit_name = format!("{}-{ui}", unit.unit_type);
        let total = template.expected_count() as usize;
        let mut route = vec![unit.start];
        route.extend(unit.waypoints.iter().copied());
        let mut members = Vec::new();
        let mut slot_index = 0usize;
        for slot in &template.composition {
            for k in 0..slot.count {
                let name = format!("{unit_name}/{}-{k}", slot.class);
                let idx = slot_index as f64;
                vehicles.push(Vehicle {
                    name: name.clone(),
                    class: slot.class.clone(),
                    route: route.clone(),
                    speed: unit.speed,
                    offset: (idx - (total as f64 - 1.0) / 2.0) * unit.spacing,
                });
                truth_vehicles.push(TruthVehicle {
                    name: name.clone(),
                    class: slot.class.clone(),
                    unit: unit_name.clone(),
                });
                members.push(name);
                slot_index += 1;
            }
        }
        truth_units.push(TruthUnit {
            name: unit_name,
            unit_type: unit.unit_type.clone(),
            members,
        });
    }

    let rng = CounterRng::new(spec.seed);
    let mut reports = Vec::new();
    let ticks = (spec.duration / spec.report_period).floor() as u64;
    for tick in 0..=ticks {
        let t = tick as Real * spec.report_period;
        for (oi, observer) in spec.observers.iter().enumerate() {
            let obs_pos = if observer.waypoints.is_empty() {
                observer.position
            } else {
                let mut route = vec![observer.position];
                route.extend(observer.waypoints.iter().copied());
                route_state(&route, observer.speed, t).0
            };
            for (vi, vehicle) in vehicles.iter().enumerate() {
                let (true_pos, true_heading) = vehicle.state_at(t);
                let range = obs_pos.distance(&true_pos);
                if range > spec.sensing_range {
                    continue;
                }
                let depth = spec
                    .coarsening
                    .iter()
                    .find(|band| range <= band.max_range)
                    .map_or(0, |band| band.depth);
                let classification = tree
                    .truncate_to_depth(&vehicle.class, depth)
                    .map_err(|e| ScengenError::InvalidSpec(e.to_string()))?;
                let key = [tick, oi as u64, vi as u64];
                let position = Position::new(
                    true_pos.x + spec.noise.position_sigma * rng.normal(&[1, key[0], key[1], key[2], 0]),
                    true_pos.y + spec.noise.position_sigma * rng.normal(&[1, key[0], key[1], key[2], 1]),
                );
                let orientation =
                    true_heading + spec.noise.orientation_sigma * rng.normal(&[2, key[0], key[1], key[2]]);
                reports.push(Report::new(
                    observer.id.clone(),
                    Some(vehicle.name.clone()),
                    position,
                    t,
                    classification,
                    orientation,
                ));
            }
        }
    }

    Ok((
        GroundTruth {
            vehicles: truth_vehicles,
            units: truth_units,
        },
        reports,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conflict::{speed_conflict, type_conflict, RampParams};
    use crate::domain::{default_templates, serialize_report_log};

    fn base_spec() -> ScenarioSpec {
        ScenarioSpec {
            units: vec![UnitSpec {
                unit_type: "mech_platoon".into(),
                start: Position::new(0.0, 0.0),
                waypoints: vec![Position::new(600.0, 0.0)],
                speed: 5.0,
                spacing: 100.0,
            }],
            observers: vec![ObserverSpec {
                id: "obs1".into(),
                position: Position::new(300.0, 400.0),
                waypoints: vec![],
                speed: 0.0,
            }],
            duration: 60.0,
            report_period: 10.0,
            noise: NoiseSpec {
                position_sigma: 0.0,
                orientation_sigma: 0.0,
            },
            coarsening: default_coarsening(),
            sensing_range: 4000.0,
            seed: 7,
        }
    }

    #[test]
    fn close_observer_sees_every_vehicle_fully_classified() {
        let tree = ClassificationTree::default_vehicles();
        let templates = default_templates();
        let (truth, reports) = generate_scenario(&base_spec(), &templates, &tree).unwrap();
        // 4 vehicles x 7 ticks.
        assert_eq!(reports.len(), 28);
        assert_eq!(truth.vehicles.len(), 4);
        assert_eq!(truth.units.len(), 1);
        assert!(reports
            .iter()
            .all(|r| r.classification == ClassId::from("apc_tracked")));
    }

    #[test]
    fn distant_observer_sees_unknowns_and_farther_nothing() {
        let tree = ClassificationTree::default_vehicles();
        let templates = default_templates();
        let mut spec = base_spec();
        spec.observers[0].position = Position::new(300.0, 3000.0);
        let (_, reports) = generate_scenario(&spec, &templates, &tree).unwrap();
        assert!(!reports.is_empty());
        assert!(reports
            .iter()
            .all(|r| r.classification == ClassId::from("unknown")));

        spec.observers[0].position = Position::new(300.0, 4500.0);
        let (_, reports) = generate_scenario(&spec, &templates, &tree).unwrap();
        assert!(reports.is_empty());
    }

    #[test]
    fn zero_noise_kinematics_are_self_consistent() {
        let tree = ClassificationTree::default_vehicles();
        let templates = default_templates();
        let (_, reports) = generate_scenario(&base_spec(), &templates, &tree).unwrap();
        let params: RampParams<f64> = RampParams::speed_default();
        let mine: Vec<&Report<f64>> = reports
            .iter()
            .filter(|r| r.name.as_deref() == Some("mech_platoon-0/apc_tracked-0"))
            .collect();
        assert_eq!(mine.len(), 7);
        for pair in mine.windows(2) {
            let d = pair[0].position.distance(&pair[1].position);
            let dt = (pair[1].time - pair[0].time).abs();
            assert!((d / dt - 5.0).abs() < 1e-9, "required speed {}", d / dt);
            assert!(speed_conflict(pair[0], pair[1], &params).value() < 0.01);
            assert_eq!(
                type_conflict::<f64>(&pair[0].classification, &pair[1].classification, &tree)
                    .unwrap()
                    .value(),
                0.0
            );
        }
    }

    #[test]
    fn identical_spec_and_seed_reproduce_bytes() {
        let tree = ClassificationTree::default_vehicles();
        let templates = default_templates();
        let mut spec = base_spec();
        spec.noise = NoiseSpec::default();
        let (_, a) = generate_scenario(&spec, &templates, &tree).unwrap();
        let (_, b) = generate_scenario(&spec, &templates, &tree).unwrap();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        serialize_report_log(&a, &mut buf_a).unwrap();
        serialize_report_log(&b, &mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);

        spec.seed = 8;
        let (_, c) = generate_scenario(&spec, &templates, &tree).unwrap();
        let mut buf_c = Vec::new();
        serialize_report_log(&c, &mut buf_c).unwrap();
        assert_ne!(buf_a, buf_c);
    }

    #[test]
    fn unknown_unit_type_is_an_error() {
        let tree = ClassificationTree::default_vehicles();
        let templates = default_templates();
        let mut spec = base_spec();
        spec.units[0].unit_type = "zeppelin_wing".into();
        assert!(matches!(
            generate_scenario(&spec, &templates, &tree),
            Err(ScengenError::UnknownTemplate(_))
        ));
    }

    #[test]
    fn overspeed_is_rejected() {
        let tree = ClassificationTree::default_vehicles();
        let templates = default_templates();
        let mut spec = base_spec();
        spec.units[0].speed = 30.0;
        assert!(matches!(
            generate_scenario(&spec, &templates, &tree),
            Err(ScengenError::InvalidSpec(_))
        ));
    }
}
