//! Dataset statistics: counts, people-per-scene and occlusion histograms,
//! and a per-split summary table.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::annotations::{read_annotations, AnnotationRecord};
use super::{write_atomic, write_json, DataError, SCHEMA_VERSION};
use crate::imaging::{occlusion_stats, OcclusionStats};

pub const DECILES: usize = 10;

/// Decile of a rate in `[0, 1]`; 1.0 falls in the last bin.
pub fn decile(rate: f64) -> usize {
    ((rate * DECILES as f64).floor().max(0.0) as usize).min(DECILES - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub split: String,
    pub scene_count: u64,
    /// Persons with a bounding box.
    pub person_count: u64,
    /// Groups with non-zero visible area.
    pub group_count: u64,
    /// Visible persons per scene → number of scenes.
    pub people_per_scene: BTreeMap<u64, u64>,
    /// Person counts by individual occlusion decile.
    pub individual_occlusion: [u64; DECILES],
    /// Group counts by group occlusion decile.
    pub group_occlusion: [u64; DECILES],
}

impl DatasetManifest {
    fn empty(split: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            split: split.to_string(),
            scene_count: 0,
            person_count: 0,
            group_count: 0,
            people_per_scene: BTreeMap::new(),
            individual_occlusion: [0; DECILES],
            group_occlusion: [0; DECILES],
        }
    }

    fn add(&mut self, record: &AnnotationRecord) -> Result<(), DataError> {
        let boxes = record.boxes();
        let stats = occlusion_stats(&boxes, &record.groups)
            .map_err(|e| DataError::Validation(format!("scene `{}`: {e}", record.scene_id)))?;
        self.scene_count += 1;
        self.person_count += boxes.len() as u64;
        self.group_count += stats.groups.len() as u64;
        *self.people_per_scene.entry(boxes.len() as u64).or_default() += 1;
        for p in &stats.individual {
            self.individual_occlusion[decile(p.occlusion)] += 1;
        }
        for g in &stats.groups {
            self.group_occlusion[decile(g.occlusion)] += 1;
        }
        Ok(())
    }

    fn merge(&mut self, other: &DatasetManifest) {
        self.scene_count += other.scene_count;
        self.person_count += other.person_count;
        self.group_count += other.group_count;
        for (&k, &v) in &other.people_per_scene {
            *self.people_per_scene.entry(k).or_default() += v;
        }
        for i in 0..DECILES {
            self.individual_occlusion[i] += other.individual_occlusion[i];
            self.group_occlusion[i] += other.group_occlusion[i];
        }
    }
}

pub fn manifest_from_records(split: &str, records: &[AnnotationRecord]) -> Result<DatasetManifest, DataError> {
    if records.is_empty() {
        return Err(DataError::Validation(format!("split `{split}` has no scenes")));
    }
    let mut m = DatasetManifest::empty(split);
    for r in records {
        m.add(r)?;
    }
    Ok(m)
}

fn histogram_csv<K: ToString>(header: [&str; 2], rows: impl IntoIterator<Item = (K, u64)>) -> Result<Vec<u8>, DataError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| DataError::Validation(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for (k, v) in rows {
        w.write_record([k.to_string(), v.to_string()]).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| DataError::Validation(e.to_string()))
}

fn decile_rows(counts: &[u64; DECILES]) -> impl Iterator<Item = (String, u64)> + '_ {
    counts.iter().enumerate().map(|(i, &c)| (format!("{:.1}-{:.1}", i as f64 / 10.0, (i + 1) as f64 / 10.0), c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneOcclusion {
    pub scene_id: String,
    pub stats: OcclusionStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcclusionFile {
    pub schema_version: u32,
    pub scenes: Vec<SceneOcclusion>,
}

/// Individual and group occlusion rates of every record.
pub fn occlusion_report(records: &[AnnotationRecord]) -> Result<OcclusionFile, DataError> {
    let scenes = records
        .iter()
        .map(|r| {
            let stats = occlusion_stats(&r.boxes(), &r.groups)
                .map_err(|e| DataError::Validation(format!("scene `{}`: {e}", r.scene_id)))?;
            Ok(SceneOcclusion { scene_id: r.scene_id.clone(), stats })
        })
        .collect::<Result<_, DataError>>()?;
    Ok(OcclusionFile { schema_version: SCHEMA_VERSION, scenes })
}

/// Reads every annotation file, then writes `manifest.json`,
/// `people_per_scene.csv`, `individual_occlusion.csv` and
/// `group_occlusion.csv` into `out_dir`.
pub fn stats_report(split: &str, paths: &[impl AsRef<Path>], out_dir: impl AsRef<Path>) -> Result<DatasetManifest, DataError> {
    let mut records = Vec::new();
    for p in paths {
        records.extend(read_annotations(p)?);
    }
    let manifest = manifest_from_records(split, &records)?;
    write_manifest(&manifest, out_dir)?;
    Ok(manifest)
}

pub fn write_manifest(manifest: &DatasetManifest, out_dir: impl AsRef<Path>) -> Result<(), DataError> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| DataError::io(dir, e))?;
    write_json(dir.join("manifest.json"), manifest)?;
    write_atomic(
        &dir.join("people_per_scene.csv"),
        &histogram_csv(["people", "scenes"], manifest.people_per_scene.iter().map(|(&k, &v)| (k, v)))?,
    )?;
    write_atomic(
        &dir.join("individual_occlusion.csv"),
        &histogram_csv(["occlusion", "persons"], decile_rows(&manifest.individual_occlusion))?,
    )?;
    write_atomic(
        &dir.join("group_occlusion.csv"),
        &histogram_csv(["occlusion", "groups"], decile_rows(&manifest.group_occlusion))?,
    )
}

/// Counts per split plus an `all` column.
pub fn split_table(manifests: &[DatasetManifest]) -> Result<Vec<u8>, DataError> {
    let mut all = DatasetManifest::empty("all");
    for m in manifests {
        all.merge(m);
    }
    let columns: Vec<&DatasetManifest> = manifests.iter().chain(std::iter::once(&all)).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| DataError::Validation(e.to_string());
    let header = std::iter::once("statistic".to_string()).chain(columns.iter().map(|m| m.split.clone()));
    w.write_record(header).map_err(csv_err)?;
    let rows: [(&str, fn(&DatasetManifest) -> u64); 3] = [
        ("images", |m| m.scene_count),
        ("people", |m| m.person_count),
        ("groups", |m| m.group_count),
    ];
    for (name, get) in rows {
        let row = std::iter::once(name.to_string()).chain(columns.iter().map(|m| get(m).to_string()));
        w.write_record(row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| DataError::Validation(e.to_string()))
}
