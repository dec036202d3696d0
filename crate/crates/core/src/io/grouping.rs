//! Group partitions per frame (JSON) and affinity matrices (CSV).
//!
//! An affinity CSV has one row of person ids followed by one row of values
//! per id, in the same order.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::annotations::AnnotationRecord;
use super::{read_json, write_json, DataError, SCHEMA_VERSION};
use crate::evaluation::{AffinityMatrix, FrameScore, GroupPartition, ScoreReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub frame_id: String,
    pub groups: GroupPartition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupingFile {
    pub schema_version: u32,
    pub frames: Vec<Frame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationReport {
    pub schema_version: u32,
    /// Grouping hyperparameters, when predictions came from affinities.
    pub link_threshold: Option<f64>,
    pub graph_cut_rate: Option<f64>,
    pub drop_singletons: bool,
    /// Matches and group counts pooled over all frames.
    pub overall: ScoreReport,
    pub frames: Vec<FrameScore>,
}

pub fn write_groupings(frames: &[Frame], path: impl AsRef<Path>) -> Result<(), DataError> {
    write_json(path, &GroupingFile { schema_version: SCHEMA_VERSION, frames: frames.to_vec() })
}

pub fn read_groupings(path: impl AsRef<Path>) -> Result<Vec<Frame>, DataError> {
    let path = path.as_ref();
    let file: GroupingFile = read_json(path)?;
    let mut seen = HashSet::new();
    if let Some(dup) = file.frames.iter().find(|f| !seen.insert(f.frame_id.as_str())) {
        return Err(DataError::Validation(format!("{}: frame `{}` listed twice", path.display(), dup.frame_id)));
    }
    Ok(file.frames)
}

/// Ground-truth frames from annotation records, one per scene.
pub fn frames_from_annotations(records: &[AnnotationRecord]) -> Result<Vec<Frame>, DataError> {
    records
        .iter()
        .map(|r| {
            let groups = GroupPartition::new(r.groups.clone())
                .map_err(|e| DataError::Validation(format!("scene `{}`: {e}", r.scene_id)))?;
            Ok(Frame { frame_id: r.scene_id.clone(), groups })
        })
        .collect()
}

/// Frames from either a grouping file or an annotation file.
pub fn read_frames(path: impl AsRef<Path>) -> Result<Vec<Frame>, DataError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| DataError::io(path, e))?;
    let probe: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| DataError::parse(e.line() as u64, e.to_string()).with_path(path))?;
    if probe.get("records").is_some() {
        frames_from_annotations(&super::annotations::read_annotations(path)?)
    } else {
        read_groupings(path)
    }
}

pub fn read_affinity_csv(reader: impl Read) -> Result<AffinityMatrix, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let ids: Vec<String> = match records.next() {
        Some(r) => r.map_err(|e| DataError::parse(1, e.to_string()))?.iter().map(str::to_string).collect(),
        None => return Err(DataError::parse(1, "missing id row")),
    };
    let mut rows = Vec::with_capacity(ids.len());
    for record in records {
        let record = record.map_err(|e| DataError::parse(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .map(|cell| cell.parse::<f64>().map_err(|_| DataError::parse(line, format!("`{cell}` is not a number"))))
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    AffinityMatrix::new(ids, rows).map_err(|e| DataError::Validation(e.to_string()))
}

pub fn load_affinity_csv(path: impl AsRef<Path>) -> Result<AffinityMatrix, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    read_affinity_csv(file).map_err(|e| e.with_path(path))
}
