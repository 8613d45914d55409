//! Unit templates: the expected composition and spacing of each unit type.

use serde::{Deserialize, Serialize};

use super::{ClassId, DomainError};

/// One composition entry: `count` elements of class `class`.
///
/// At level 1 the class is a vehicle classification; at higher levels it may
/// name a unit type produced by the level below.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompositionSlot {
    pub class: ClassId,
    pub count: u32,
}

/// Declarative description of a unit type.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitTemplate {
    pub unit_type: String,
    pub composition: Vec<CompositionSlot>,
    /// Typical spacing between unit members, meters. Recorded for future
    /// per-template formation checks; the current formation conflict uses
    /// the global distance ramp.
    pub spacing_min: f64,
    pub spacing_max: f64,
    /// 1 = platoon, 2 = company, ...
    pub level: u32,
}

impl UnitTemplate {
    pub fn new(
        unit_type: impl Into<String>,
        composition: Vec<(ClassId, u32)>,
        spacing_min: f64,
        spacing_max: f64,
        level: u32,
    ) -> Result<Self, DomainError> {
        let unit_type = unit_type.into();
        if !(spacing_min < spacing_max) {
            return Err(DomainError::InvalidTemplate {
                unit_type,
                message: format!("spacing_min {spacing_min} must be < spacing_max {spacing_max}"),
            });
        }
        if composition.is_empty() || composition.iter().any(|(_, n)| *n == 0) {
            return Err(DomainError::InvalidTemplate {
                unit_type,
                message: "composition must list at least one slot with count >= 1".into(),
            });
        }
        Ok(UnitTemplate {
            unit_type,
            composition: composition
                .into_iter()
                .map(|(class, count)| CompositionSlot { class, count })
                .collect(),
            spacing_min,
            spacing_max,
            level,
        })
    }

    /// Total number of elements the template expects.
    pub fn expected_count(&self) -> u32 {
        self.composition.iter().map(|s| s.count).sum()
    }
}

/// Built-in templates: three platoon types plus a two-variant mechanized
/// company. The company expects a commander vehicle, three mechanized
/// platoons and either an MBT platoon or an anti-tank platoon; the
/// alternative heavy platoon is expressed as two templates sharing the
/// `company` unit type.
pub fn default_templates() -> Vec<UnitTemplate> {
    vec![
        UnitTemplate::new(
            "mech_platoon",
            vec![(ClassId::from("apc_tracked"), 4)],
            50.0,
            200.0,
            1,
        )
        .unwrap(),
        UnitTemplate::new("mbt_platoon", vec![(ClassId::from("mbt"), 5)], 50.0, 200.0, 1).unwrap(),
        UnitTemplate::new(
            "at_platoon",
            vec![(ClassId::from("atgm_launcher"), 5)],
            50.0,
            200.0,
            1,
        )
        .unwrap(),
        UnitTemplate::new(
            "company",
            vec![
                (ClassId::from("apc_tracked"), 1),
                (ClassId::from("mech_platoon"), 3),
                (ClassId::from("mbt_platoon"), 1),
            ],
            200.0,
            2000.0,
            2,
        )
        .unwrap(),
        UnitTemplate::new(
            "company",
            vec![
                (ClassId::from("apc_tracked"), 1),
                (ClassId::from("mech_platoon"), 3),
                (ClassId::from("at_platoon"), 1),
            ],
            200.0,
            2000.0,
            2,
        )
        .unwrap(),
    ]
}
