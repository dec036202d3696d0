//! Synthetic camera, person boxes and occlusion rates.
//!
//! A box is occluded by every box strictly in front of it in the
//! `(depth, person_id)` order. Rates are continuous-area ratios.

mod area;
mod camera;

pub use area::{frontmost_areas, union_area, Rect};
pub use camera::{project_scene, sample_camera, CameraConfig, CameraRanges, Interval, PosedCamera};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImagingError {
    #[error("camera config: {0}")]
    Config(String),
    #[error("camera stands on person `{person_id}`")]
    DegenerateProjection { person_id: String },
    #[error("no box for person `{0}`")]
    NotFound(String),
    #[error("group has zero visible area; occlusion rate undefined")]
    UndefinedRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub person_id: String,
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    /// Forward distance from the camera, meters.
    pub depth: f64,
}

impl BoundingBox {
    pub fn rect(&self) -> Rect {
        Rect::new(self.x1, self.y1, self.x2, self.y2)
    }
}

fn front_order(a: &BoundingBox, b: &BoundingBox) -> std::cmp::Ordering {
    a.depth.total_cmp(&b.depth).then_with(|| a.person_id.cmp(&b.person_id))
}

pub fn sort_front_to_back(boxes: &mut [BoundingBox]) {
    boxes.sort_by(front_order);
}

fn sorted_refs(boxes: &[BoundingBox]) -> Vec<&BoundingBox> {
    let mut refs: Vec<&BoundingBox> = boxes.iter().collect();
    refs.sort_by(|a, b| front_order(a, b));
    refs
}

/// Visible area of `targets` (indices into the front-to-back list), each
/// measured against everything in front of it, within `window`.
fn visible_area(ordered: &[&BoundingBox], targets: &[usize], window: &Rect) -> f64 {
    let last = match targets.iter().max() {
        Some(&i) => i,
        None => return 0.0,
    };
    let mut clipped = Vec::with_capacity(last + 1);
    let mut index_of = vec![None; last + 1];
    for (i, b) in ordered[..=last].iter().enumerate() {
        if let Some(r) = b.rect().intersection(window) {
            index_of[i] = Some(clipped.len());
            clipped.push(r);
        }
    }
    let owned = frontmost_areas(&clipped);
    targets.iter().filter_map(|&t| index_of[t].map(|j| owned[j])).sum()
}

/// Share of box `person_id` that nearer boxes do not cover.
pub fn individual_non_occlusion(boxes: &[BoundingBox], person_id: &str) -> Result<f64, ImagingError> {
    let ordered = sorted_refs(boxes);
    let k = ordered
        .iter()
        .position(|b| b.person_id == person_id)
        .ok_or_else(|| ImagingError::NotFound(person_id.to_string()))?;
    let target = ordered[k].rect();
    let area = target.area();
    if area <= 0.0 {
        return Err(ImagingError::UndefinedRate);
    }
    Ok(visible_area(&ordered, &[k], &target) / area)
}

/// Share of box `person_id` covered by nearer boxes, in `[0, 1]`.
pub fn individual_occlusion(boxes: &[BoundingBox], person_id: &str) -> Result<f64, ImagingError> {
    Ok(1.0 - individual_non_occlusion(boxes, person_id)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupOcclusion {
    pub non_occlusion: f64,
    pub occlusion: f64,
}

/// Visible share of the union of a group's boxes. Each member's visible
/// part is measured against all nearer boxes in the scene, including fellow
/// members. Members without a box contribute nothing.
pub fn group_occlusion<S: AsRef<str>>(boxes: &[BoundingBox], members: &[S]) -> Result<GroupOcclusion, ImagingError> {
    let ordered = sorted_refs(boxes);
    let targets: Vec<usize> = members
        .iter()
        .filter_map(|m| ordered.iter().position(|b| b.person_id == m.as_ref()))
        .collect();
    let rects: Vec<Rect> = targets.iter().map(|&i| ordered[i].rect()).collect();
    let total = union_area(&rects);
    if targets.is_empty() || total <= 0.0 {
        return Err(ImagingError::UndefinedRate);
    }
    let hull = rects.iter().skip(1).fold(rects[0], |h, r| Rect {
        x1: h.x1.min(r.x1),
        y1: h.y1.min(r.y1),
        x2: h.x2.max(r.x2),
        y2: h.y2.max(r.y2),
    });
    let non_occlusion = (visible_area(&ordered, &targets, &hull) / total).clamp(0.0, 1.0);
    Ok(GroupOcclusion { non_occlusion, occlusion: 1.0 - non_occlusion })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonRate {
    pub person_id: String,
    pub occlusion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRate {
    pub group_index: usize,
    pub non_occlusion: f64,
    pub occlusion: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OcclusionStats {
    /// One entry per box, front to back.
    pub individual: Vec<PersonRate>,
    /// Groups with at least one visible member, in input order.
    pub groups: Vec<GroupRate>,
}

pub fn occlusion_stats<S: AsRef<str>>(boxes: &[BoundingBox], groups: &[Vec<S>]) -> Result<OcclusionStats, ImagingError> {
    let individual = sorted_refs(boxes)
        .into_iter()
        .map(|b| {
            Ok(PersonRate { person_id: b.person_id.clone(), occlusion: individual_occlusion(boxes, &b.person_id)? })
        })
        .collect::<Result<_, ImagingError>>()?;
    let mut rates = Vec::with_capacity(groups.len());
    for (group_index, members) in groups.iter().enumerate() {
        match group_occlusion(boxes, members) {
            Ok(g) => rates.push(GroupRate { group_index, non_occlusion: g.non_occlusion, occlusion: g.occlusion }),
            Err(ImagingError::UndefinedRate) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(OcclusionStats { individual, groups: rates })
}

#[cfg(test)]
mod tests;
