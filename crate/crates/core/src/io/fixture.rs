//! Synthetic circular F-formations used as a stand-in group pool.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::geometry::{DistanceMode, GroupGeometry, GroupPool, PersonPose, PoolScene, Vec2};
use crate::synthesis::CountRange;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixtureSpec {
    pub scenes: usize,
    pub groups_per_scene: CountRange,
    pub members_per_group: CountRange,
    /// Circle radius, meters.
    pub radius: f64,
    /// Each member's radius is perturbed uniformly within `±radius_jitter`.
    pub radius_jitter: f64,
    /// Grid pitch between group centers within a scene, meters.
    pub group_spacing: f64,
    /// Group centers are shifted uniformly within `±center_jitter` per axis.
    pub center_jitter: f64,
    pub distance_mode: DistanceMode,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            scenes: 8,
            groups_per_scene: CountRange { min: 2, max: 5 },
            members_per_group: CountRange { min: 3, max: 5 },
            radius: 0.7,
            radius_jitter: 0.1,
            group_spacing: 3.5,
            center_jitter: 0.4,
            distance_mode: DistanceMode::Euclidean,
        }
    }
}

impl FixtureSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let fail = |m: &str| Err(DataError::Validation(format!("fixture spec: {m}")));
        if self.scenes < 1 {
            return fail("scenes must be >= 1");
        }
        let g = self.groups_per_scene;
        if g.min < 1 || g.min > g.max {
            return fail("groups_per_scene must satisfy 1 <= min <= max");
        }
        let m = self.members_per_group;
        if m.min < 2 || m.min > m.max {
            return fail("members_per_group must satisfy 2 <= min <= max");
        }
        if !(self.radius > 0.0) || !(self.radius_jitter >= 0.0) || self.radius_jitter >= self.radius {
            return fail("need radius > 0 and 0 <= radius_jitter < radius");
        }
        if !(self.group_spacing > 0.0) || !(self.center_jitter >= 0.0) {
            return fail("need group_spacing > 0 and center_jitter >= 0");
        }
        Ok(())
    }
}

/// Members evenly spaced on a circle around `center`, each facing it.
pub fn circular_group(
    group_id: &str,
    center: Vec2,
    members: usize,
    radius: f64,
    phase: f64,
    mut radius_offset: impl FnMut(usize) -> f64,
) -> GroupGeometry {
    let members = (0..members)
        .map(|j| {
            let angle = phase + TAU * j as f64 / members as f64;
            let r = radius + radius_offset(j);
            let position = center + Vec2::new(r * angle.cos(), r * angle.sin());
            let facing = angle + PI;
            PersonPose::new(format!("p{j}"), position, facing, Some(facing)).expect("finite fixture pose")
        })
        .collect();
    GroupGeometry { group_id: group_id.to_string(), members }
}

pub fn generate_fixture_pool(spec: &FixtureSpec, seed: u64) -> Result<GroupPool, DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenes = Vec::with_capacity(spec.scenes);
    for s in 0..spec.scenes {
        let n_groups = rng.random_range(spec.groups_per_scene.min..=spec.groups_per_scene.max);
        let cols = (n_groups as f64).sqrt().ceil() as usize;
        let mut groups = Vec::with_capacity(n_groups);
        for k in 0..n_groups {
            let jitter = |rng: &mut ChaCha8Rng| {
                if spec.center_jitter > 0.0 {
                    rng.random_range(-spec.center_jitter..=spec.center_jitter)
                } else {
                    0.0
                }
            };
            let center = Vec2::new(
                (k % cols) as f64 * spec.group_spacing + jitter(&mut rng),
                (k / cols) as f64 * spec.group_spacing + jitter(&mut rng),
            );
            let members = rng.random_range(spec.members_per_group.min..=spec.members_per_group.max);
            let phase = rng.random_range(0.0..TAU);
            let offsets: Vec<f64> = (0..members)
                .map(|_| {
                    if spec.radius_jitter > 0.0 {
                        rng.random_range(-spec.radius_jitter..=spec.radius_jitter)
                    } else {
                        0.0
                    }
                })
                .collect();
            groups.push(circular_group(&format!("G{k}"), center, members, spec.radius, phase, |j| offsets[j]));
        }
        scenes.push(PoolScene { scene_id: format!("S{s}"), groups });
    }
    Ok(GroupPool { scenes, distance_mode: spec.distance_mode })
}
