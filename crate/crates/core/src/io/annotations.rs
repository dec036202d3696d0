//! Scene and annotation JSON documents.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, write_json, DataError, SCHEMA_VERSION};
use crate::geometry::Vec2;
use crate::imaging::{BoundingBox, CameraConfig};
use crate::synthesis::SceneGeometry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenesFile {
    pub schema_version: u32,
    pub scenes: Vec<SceneGeometry>,
}

pub fn write_scenes(scenes: &[SceneGeometry], path: impl AsRef<Path>) -> Result<(), DataError> {
    write_json(path, &ScenesFile { schema_version: SCHEMA_VERSION, scenes: scenes.to_vec() })
}

pub fn read_scenes(path: impl AsRef<Path>) -> Result<Vec<SceneGeometry>, DataError> {
    let path = path.as_ref();
    let file: ScenesFile = read_json(path)?;
    for (i, scene) in file.scenes.iter().enumerate() {
        for g in &scene.groups {
            g.validate().map_err(|e| {
                DataError::Validation(format!("{}: scene {i} (`{}`): {e}", path.display(), scene.scene_id))
            })?;
        }
    }
    Ok(file.scenes)
}

/// Image box in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PixelBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonAnnotation {
    pub person_id: String,
    /// Ground position, meters.
    pub position: Vec2,
    /// Absent when the person is outside the image or behind the camera.
    pub bbox: Option<PixelBox>,
    /// Camera-frame depth, meters; present exactly when `bbox` is.
    pub depth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub scene_id: String,
    pub camera: CameraConfig,
    pub persons: Vec<PersonAnnotation>,
    pub groups: Vec<Vec<String>>,
}

impl AnnotationRecord {
    pub fn validate(&self) -> Result<(), String> {
        let mut ids = HashSet::new();
        for p in &self.persons {
            if !ids.insert(p.person_id.as_str()) {
                return Err(format!("person `{}` listed twice", p.person_id));
            }
            if !(p.position.x.is_finite() && p.position.y.is_finite()) {
                return Err(format!("person `{}` has a non-finite position", p.person_id));
            }
            match (&p.bbox, p.depth) {
                (None, None) => {}
                (Some(b), Some(depth)) => {
                    let finite = [b.x1, b.y1, b.x2, b.y2, depth].iter().all(|v| v.is_finite());
                    if !finite || b.x1 >= b.x2 || b.y1 >= b.y2 || depth <= 0.0 {
                        return Err(format!(
                            "person `{}` needs finite x1 < x2, y1 < y2 and depth > 0",
                            p.person_id
                        ));
                    }
                }
                _ => return Err(format!("person `{}` must have both bbox and depth or neither", p.person_id)),
            }
        }
        let mut grouped = HashSet::new();
        for (i, g) in self.groups.iter().enumerate() {
            if g.is_empty() {
                return Err(format!("group {i} is empty"));
            }
            for id in g {
                if !ids.contains(id.as_str()) {
                    return Err(format!("group {i} names unknown person `{id}`"));
                }
                if !grouped.insert(id.as_str()) {
                    return Err(format!("person `{id}` appears in more than one group"));
                }
            }
        }
        Ok(())
    }

    /// Boxes of the visible persons, in listing order.
    pub fn boxes(&self) -> Vec<BoundingBox> {
        self.persons
            .iter()
            .filter_map(|p| {
                let (b, depth) = (p.bbox?, p.depth?);
                Some(BoundingBox { person_id: p.person_id.clone(), x1: b.x1, y1: b.y1, x2: b.x2, y2: b.y2, depth })
            })
            .collect()
    }

    pub fn visible_count(&self) -> usize {
        self.persons.iter().filter(|p| p.bbox.is_some()).count()
    }
}

/// Joins a scene with its projected boxes. Persons without a box are kept
/// with `bbox: None`.
pub fn build_record(scene: &SceneGeometry, camera: &CameraConfig, boxes: &[BoundingBox]) -> AnnotationRecord {
    let by_id: HashMap<&str, &BoundingBox> = boxes.iter().map(|b| (b.person_id.as_str(), b)).collect();
    let persons = scene
        .groups
        .iter()
        .flat_map(|g| &g.members)
        .map(|m| {
            let b = by_id.get(m.person_id.as_str());
            PersonAnnotation {
                person_id: m.person_id.clone(),
                position: m.position,
                bbox: b.map(|b| PixelBox { x1: b.x1, y1: b.y1, x2: b.x2, y2: b.y2 }),
                depth: b.map(|b| b.depth),
            }
        })
        .collect();
    let groups = scene
        .groups
        .iter()
        .map(|g| g.members.iter().map(|m| m.person_id.clone()).collect())
        .collect();
    AnnotationRecord { scene_id: scene.scene_id.clone(), camera: *camera, persons, groups }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationsFile {
    pub schema_version: u32,
    pub records: Vec<AnnotationRecord>,
}

pub fn write_annotations(records: &[AnnotationRecord], path: impl AsRef<Path>) -> Result<(), DataError> {
    write_json(path, &AnnotationsFile { schema_version: SCHEMA_VERSION, records: records.to_vec() })
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotationRecord>, DataError> {
    let path = path.as_ref();
    let file: AnnotationsFile = read_json(path)?;
    for (i, r) in file.records.iter().enumerate() {
        r.validate().map_err(|m| {
            DataError::Validation(format!("{}: record {i} (`{}`): {m}", path.display(), r.scene_id))
        })?;
    }
    Ok(file.records)
}
