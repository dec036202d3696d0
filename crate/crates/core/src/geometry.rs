//! Group geometry: member poses, Gaussian group summaries, inter-group
//! distance, directional spread and rigid group transforms.

use std::collections::HashSet;
use std::f64::consts::TAU;

use nalgebra::{Matrix2, Rotation2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Lower bound applied to every directional spread, in meters.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// Centers closer than this (meters) have no usable direction.
pub const DIRECTION_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("group `{group_id}` has {count} member(s); at least 2 are required")]
    TooFewMembers { group_id: String, count: usize },
    #[error("group `{group_id}` lists person `{person_id}` more than once")]
    DuplicatePerson { group_id: String, person_id: String },
    #[error("person `{person_id}` has a non-finite {field}")]
    NonFinite { person_id: String, field: &'static str },
    #[error("group centers coincide; direction is undefined")]
    DegenerateDirection,
    #[error("no scene in the pool contains two or more groups")]
    InsufficientPairs,
    #[error("scene `{scene_id}` lists group `{group_id}` more than once")]
    DuplicateGroup { scene_id: String, group_id: String },
    #[error("scene `{scene_id}` has no groups")]
    EmptyScene { scene_id: String },
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    // rem_euclid rounds tiny negative inputs up to exactly TAU
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonPose {
    pub person_id: String,
    /// Ground-plane position in meters.
    pub position: Vec2,
    /// Radians in `[0, 2π)`.
    pub body_orientation: f64,
    /// Radians in `[0, 2π)`. Carried through, not used by any computation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_orientation: Option<f64>,
}

impl PersonPose {
    pub fn new(
        person_id: impl Into<String>,
        position: Vec2,
        body_orientation: f64,
        head_orientation: Option<f64>,
    ) -> Result<Self, GeometryError> {
        let person_id = person_id.into();
        if !position.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinite { person_id, field: "position" });
        }
        if !body_orientation.is_finite() {
            return Err(GeometryError::NonFinite { person_id, field: "body orientation" });
        }
        if head_orientation.is_some_and(|h| !h.is_finite()) {
            return Err(GeometryError::NonFinite { person_id, field: "head orientation" });
        }
        Ok(Self {
            person_id,
            position,
            body_orientation: normalize_angle(body_orientation),
            head_orientation: head_orientation.map(normalize_angle),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupGeometry {
    pub group_id: String,
    pub members: Vec<PersonPose>,
}

impl GroupGeometry {
    /// Builds a group and checks member count and id uniqueness.
    pub fn new(group_id: impl Into<String>, members: Vec<PersonPose>) -> Result<Self, GeometryError> {
        let group = Self { group_id: group_id.into(), members };
        group.validate()?;
        Ok(group)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.members.len() < 2 {
            return Err(GeometryError::TooFewMembers {
                group_id: self.group_id.clone(),
                count: self.members.len(),
            });
        }
        let mut seen = HashSet::with_capacity(self.members.len());
        for m in &self.members {
            if !seen.insert(m.person_id.as_str()) {
                return Err(GeometryError::DuplicatePerson {
                    group_id: self.group_id.clone(),
                    person_id: m.person_id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Arithmetic mean of member positions.
    pub fn center(&self) -> Vec2 {
        if self.members.is_empty() {
            return Vec2::zeros();
        }
        let sum = self.members.iter().fold(Vec2::zeros(), |acc, m| acc + m.position);
        sum / self.members.len() as f64
    }
}

/// Gaussian summary of a group: center and population covariance of the
/// member positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSummary {
    pub mu: Vec2,
    pub sigma: Mat2,
}

impl GaussianSummary {
    pub fn isotropic(mu: Vec2, std_dev: f64) -> Self {
        Self { mu, sigma: Mat2::identity() * (std_dev * std_dev) }
    }

    /// Spread along a unit direction, floored at [`SIGMA_FLOOR`].
    pub fn spread_along(&self, unit_dir: &Vec2) -> f64 {
        let q = (unit_dir.transpose() * self.sigma * unit_dir)[(0, 0)];
        q.max(0.0).sqrt().max(SIGMA_FLOOR)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// Squared Euclidean norm between centers.
    LiteralSquared,
    /// Plain Euclidean norm between centers.
    #[default]
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolScene {
    pub scene_id: String,
    pub groups: Vec<GroupGeometry>,
}

/// Group geometries harvested from recorded scenes, kept per scene so
/// same-scene statistics can be estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPool {
    pub scenes: Vec<PoolScene>,
    #[serde(default)]
    pub distance_mode: DistanceMode,
}

impl GroupPool {
    pub fn validate(&self) -> Result<(), GeometryError> {
        for scene in &self.scenes {
            if scene.groups.is_empty() {
                return Err(GeometryError::EmptyScene { scene_id: scene.scene_id.clone() });
            }
            let mut ids = HashSet::new();
            for g in &scene.groups {
                if !ids.insert(g.group_id.as_str()) {
                    return Err(GeometryError::DuplicateGroup {
                        scene_id: scene.scene_id.clone(),
                        group_id: g.group_id.clone(),
                    });
                }
                g.validate()?;
            }
        }
        Ok(())
    }

    /// All groups in scene order, paired with their scene id.
    pub fn groups(&self) -> impl Iterator<Item = (&str, &GroupGeometry)> {
        self.scenes
            .iter()
            .flat_map(|s| s.groups.iter().map(move |g| (s.scene_id.as_str(), g)))
    }

    pub fn group_count(&self) -> usize {
        self.scenes.iter().map(|s| s.groups.len()).sum()
    }
}

pub fn summarize_group(g: &GroupGeometry) -> Result<GaussianSummary, GeometryError> {
    if g.members.len() < 2 {
        return Err(GeometryError::TooFewMembers {
            group_id: g.group_id.clone(),
            count: g.members.len(),
        });
    }
    let n = g.members.len() as f64;
    let mu = g.center();
    let mut sigma = Mat2::zeros();
    for m in &g.members {
        let d = m.position - mu;
        sigma += d * d.transpose();
    }
    sigma /= n;
    // exact symmetry regardless of summation order
    let off = 0.5 * (sigma[(0, 1)] + sigma[(1, 0)]);
    sigma[(0, 1)] = off;
    sigma[(1, 0)] = off;
    Ok(GaussianSummary { mu, sigma })
}

pub fn inter_group_distance(a: &GaussianSummary, b: &GaussianSummary, mode: DistanceMode) -> f64 {
    let sq = (a.mu - b.mu).norm_squared();
    match mode {
        DistanceMode::LiteralSquared => sq,
        DistanceMode::Euclidean => sq.sqrt(),
    }
}

/// Spread of `from` along the direction pointing at `toward`.
pub fn directional_variance(
    from: &GaussianSummary,
    toward: &GaussianSummary,
) -> Result<f64, GeometryError> {
    let delta = toward.mu - from.mu;
    let len = delta.norm();
    if len <= DIRECTION_EPS {
        return Err(GeometryError::DegenerateDirection);
    }
    Ok(from.spread_along(&(delta / len)))
}

/// Mean over ordered same-scene group pairs of distance divided by
/// directional spread.
pub fn estimate_distance_variance_ratio(pool: &GroupPool) -> Result<f64, GeometryError> {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for scene in &pool.scenes {
        if scene.groups.len() < 2 {
            continue;
        }
        let summaries = scene
            .groups
            .iter()
            .map(summarize_group)
            .collect::<Result<Vec<_>, _>>()?;
        for (i, a) in summaries.iter().enumerate() {
            for (j, b) in summaries.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = inter_group_distance(a, b, pool.distance_mode);
                let sigma = match directional_variance(a, b) {
                    Ok(s) => s,
                    Err(GeometryError::DegenerateDirection) => a.spread_along(&Vec2::x()),
                    Err(e) => return Err(e),
                };
                total += d / sigma;
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        return Err(GeometryError::InsufficientPairs);
    }
    Ok(total / pairs as f64)
}

/// Rotates members about the group mean, then translates. Orientations turn
/// with the group.
pub fn transform_group(g: &GroupGeometry, rotation: f64, translation: Vec2) -> GroupGeometry {
    let center = g.center();
    let rot = Rotation2::new(rotation);
    let members = g
        .members
        .iter()
        .map(|m| PersonPose {
            person_id: m.person_id.clone(),
            position: center + rot * (m.position - center) + translation,
            body_orientation: normalize_angle(m.body_orientation + rotation),
            head_orientation: m.head_orientation.map(|h| normalize_angle(h + rotation)),
        })
        .collect();
    GroupGeometry { group_id: g.group_id.clone(), members }
}
