//! Group pool CSV.
//!
//! Columns: `scene_id,group_id,person_id,x_m,y_m,body_orientation_rad,head_orientation_rad`.
//! The head orientation cell may be empty. Rows are grouped into scenes and
//! groups in order of first appearance.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::geometry::{DistanceMode, GroupGeometry, GroupPool, PersonPose, PoolScene, Vec2};

pub const POOL_HEADER: [&str; 7] = [
    "scene_id",
    "group_id",
    "person_id",
    "x_m",
    "y_m",
    "body_orientation_rad",
    "head_orientation_rad",
];

#[derive(Debug, Serialize, Deserialize)]
struct PoolRow {
    scene_id: String,
    group_id: String,
    person_id: String,
    x_m: f64,
    y_m: f64,
    body_orientation_rad: f64,
    head_orientation_rad: Option<f64>,
}

pub fn load_pool(path: impl AsRef<Path>, mode: DistanceMode) -> Result<GroupPool, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    read_pool(file, mode).map_err(|e| e.with_path(path))
}

pub fn read_pool(reader: impl Read, mode: DistanceMode) -> Result<GroupPool, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| DataError::parse(1, e.to_string()))?.clone();
    if headers.iter().ne(POOL_HEADER.iter().copied()) {
        return Err(DataError::parse(1, format!("expected header `{}`", POOL_HEADER.join(","))));
    }
    let mut scenes: Vec<PoolScene> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            DataError::parse(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: PoolRow = record
            .deserialize(Some(&headers))
            .map_err(|e| DataError::parse(line, e.to_string()))?;
        let pose = PersonPose::new(
            row.person_id,
            Vec2::new(row.x_m, row.y_m),
            row.body_orientation_rad,
            row.head_orientation_rad,
        )
        .map_err(|e| DataError::parse(line, e.to_string()))?;
        let scene = match scenes.iter().position(|s| s.scene_id == row.scene_id) {
            Some(i) => &mut scenes[i],
            None => {
                scenes.push(PoolScene { scene_id: row.scene_id, groups: Vec::new() });
                scenes.last_mut().expect("just pushed")
            }
        };
        match scene.groups.iter_mut().find(|g| g.group_id == row.group_id) {
            Some(g) => g.members.push(pose),
            None => scene.groups.push(GroupGeometry { group_id: row.group_id, members: vec![pose] }),
        }
    }
    if scenes.is_empty() {
        return Err(DataError::Validation("pool file has no rows".into()));
    }
    let pool = GroupPool { scenes, distance_mode: mode };
    for scene in &pool.scenes {
        for g in &scene.groups {
            g.validate()
                .map_err(|e| DataError::Validation(format!("scene `{}`: {e}", scene.scene_id)))?;
        }
    }
    pool.validate().map_err(|e| DataError::Validation(e.to_string()))?;
    Ok(pool)
}

pub fn write_pool(pool: &GroupPool, writer: impl Write) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    for scene in &pool.scenes {
        for g in &scene.groups {
            for m in &g.members {
                w.serialize(PoolRow {
                    scene_id: scene.scene_id.clone(),
                    group_id: g.group_id.clone(),
                    person_id: m.person_id.clone(),
                    x_m: m.position.x,
                    y_m: m.position.y,
                    body_orientation_rad: m.body_orientation,
                    head_orientation_rad: m.head_orientation,
                })
                .map_err(|e| DataError::Validation(e.to_string()))?;
            }
        }
    }
    w.flush().map_err(|e| DataError::Io { path: None, source: e })?;
    Ok(())
}

pub fn save_pool(pool: &GroupPool, path: impl AsRef<Path>) -> Result<(), DataError> {
    let mut buf = Vec::new();
    write_pool(pool, &mut buf)?;
    super::write_atomic(path.as_ref(), &buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_SCENES: &str = "\
scene_id,group_id,person_id,x_m,y_m,body_orientation_rad,head_orientation_rad
s1,a,p1,0.0,0.0,0.0,
s1,a,p2,1.0,0.0,3.14,3.0
s1,b,p3,4.0,0.0,0.0,
s1,b,p4,5.0,1.0,1.0,
s2,a,p1,0.0,0.0,0.5,0.5
s2,a,p2,0.0,1.0,0.5,
";

    #[test]
    fn reads_two_scene_fixture() {
        let pool = read_pool(TWO_SCENES.as_bytes(), DistanceMode::Euclidean).unwrap();
        assert_eq!(pool.scenes.len(), 2);
        assert_eq!(pool.scenes[0].scene_id, "s1");
        assert_eq!(pool.scenes[0].groups.len(), 2);
        assert_eq!(pool.scenes[0].groups[1].group_id, "b");
        assert_eq!(pool.scenes[0].groups[0].members[1].person_id, "p2");
        assert_eq!(pool.scenes[0].groups[0].members[1].head_orientation, Some(3.0));
        assert_eq!(pool.scenes[0].groups[0].members[0].head_orientation, None);
        assert_eq!(pool.scenes[1].groups[0].members.len(), 2);
    }

    #[test]
    fn round_trips_through_csv() {
        let pool = read_pool(TWO_SCENES.as_bytes(), DistanceMode::Euclidean).unwrap();
        let mut buf = Vec::new();
        write_pool(&pool, &mut buf).unwrap();
        assert_eq!(read_pool(buf.as_slice(), DistanceMode::Euclidean).unwrap(), pool);
    }

    #[test]
    fn non_numeric_x_names_the_line() {
        let bad = TWO_SCENES.replace("s1,b,p3,4.0", "s1,b,p3,four");
        let err = read_pool(bad.as_bytes(), DistanceMode::Euclidean).unwrap_err();
        match err {
            DataError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err_string(&bad).contains("line 4"));
    }

    fn err_string(text: &str) -> String {
        read_pool(text.as_bytes(), DistanceMode::Euclidean).unwrap_err().to_string()
    }

    #[test]
    fn singleton_group_is_rejected() {
        let text = "scene_id,group_id,person_id,x_m,y_m,body_orientation_rad,head_orientation_rad\ns,solo,p,0,0,0,\n";
        let err = read_pool(text.as_bytes(), DistanceMode::Euclidean).unwrap_err();
        assert!(matches!(err, DataError::Validation(_)));
        assert!(err.to_string().contains("solo"));
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = err_string("scene,group\ns,a\n");
        assert!(err.contains("line 1"));
    }
}
