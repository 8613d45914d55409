//! Company-level aggregation. Experimental: the pipeline validates the
//! report-to-vehicle and vehicle-to-platoon levels; this module runs the
//! same machinery one level up, with each aggregated unit reduced to a
//! centroid pseudo-track.

use crate::conflict::{position_at, track_conflict};
use crate::domain::{
    ClassId, ClassificationTree, Position, Report, SituationPicture, Track, TrackId, UnitTemplate,
};
use crate::float::Float;

use super::{generate_hypotheses, solve_into_units, ClassifyConfig, Element};

/// Reduce a unit to the trajectory of its members' mean position, sampled
/// at every member report time. The pseudo-reports carry the root class;
/// the unit type lives on the element instead.
fn centroid_track<F: Float>(
    id: TrackId,
    members: &[&Track<F>],
    tree: &ClassificationTree,
) -> Track<F> {
    let mut times: Vec<F> = members
        .iter()
        .flat_map(|t| t.reports.iter().map(|r| r.time))
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite report times"));
    times.dedup();

    let mut reports = Vec::new();
    for &t in &times {
        let mut sum = Position::new(F::zero(), F::zero());
        let mut count = 0usize;
        for track in members {
            if t >= track.first_time() && t <= track.last_time() {
                let p = position_at(track, t).expect("t inside span");
                sum.x += p.x;
                sum.y += p.y;
                count += 1;
            }
        }
        if count > 0 {
            let cf = F::count(count);
            reports.push(Report::new(
                "centroid",
                None,
                Position::new(sum.x / cf, sum.y / cf),
                t,
                tree.root().clone(),
                F::zero(),
            ));
        }
    }
    Track::new(id, reports, tree).expect("centroid reports are valid")
}

/// Aggregate a platoon-level picture into companies using the level-2
/// templates.
///
/// The returned picture's tracks are pseudo-tracks: one per input unit (in
/// order), followed by one per input unaggregated track, with ids
/// renumbered from 0 in that order.
pub fn aggregate_level2<F: Float>(
    picture: &SituationPicture<F>,
    templates: &[UnitTemplate],
    tree: &ClassificationTree,
    config: &ClassifyConfig<F>,
) -> SituationPicture<F> {
    let by_id: std::collections::BTreeMap<TrackId, &Track<F>> =
        picture.tracks.iter().map(|t| (t.id, t)).collect();

    let mut pseudo_tracks: Vec<Track<F>> = Vec::new();
    let mut elements: Vec<Element> = Vec::new();
    for unit in &picture.units {
        let id = TrackId(pseudo_tracks.len() as u32);
        let members: Vec<&Track<F>> = unit.members.iter().map(|m| by_id[m]).collect();
        pseudo_tracks.push(centroid_track(id, &members, tree));
        let unit_type = unit
            .candidates
            .first()
            .map(|c| c.unit_type.clone())
            .unwrap_or_else(|| tree.root().to_string());
        elements.push(Element {
            id,
            class: ClassId::new(unit_type),
        });
    }
    for track_id in &picture.unaggregated {
        let id = TrackId(pseudo_tracks.len() as u32);
        let mut track = by_id[track_id].clone();
        track.id = id;
        elements.push(Element {
            id,
            class: track.resolved_class.clone(),
        });
        pseudo_tracks.push(track);
    }

    let level2: Vec<&UnitTemplate> = templates.iter().filter(|t| t.level == 2).collect();
    let n = pseudo_tracks.len();
    let mut matrix = vec![F::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let c = track_conflict(&pseudo_tracks[i], &pseudo_tracks[j], &config.track_params)
                .value();
            matrix[i * n + j] = c;
            matrix[j * n + i] = c;
        }
    }
    let conflict_fn = |a: TrackId, b: TrackId| matrix[a.0 as usize * n + b.0 as usize];

    let hypotheses = generate_hypotheses(&elements, &level2, tree, conflict_fn, config);
    let (units, unaggregated) = solve_into_units(&elements, hypotheses, conflict_fn, config);
    SituationPicture {
        tracks: pseudo_tracks,
        units,
        unaggregated,
    }
}
