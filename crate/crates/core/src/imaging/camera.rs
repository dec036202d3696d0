//! Pinhole camera orbiting the scene and person-box projection.
//!
//! The camera sits on a circle of radius `distance` around the centroid of
//! the group centers, at `height` above the ground, and looks at that
//! centroid on the ground plane. World `z` is up. Image `x` grows to the
//! right and image `y` grows downward, principal point at the image center.
//!
//! A person is a vertical cylinder. Its box is the screen extent of the
//! camera-facing rectangle through the cylinder axis, `2·radius` wide and
//! `height` tall.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BoundingBox, ImagingError};
use crate::geometry::Vec2;
use crate::synthesis::SceneGeometry;

type Vec3 = Vector3<f64>;

/// Ground positions closer than this to the camera cannot be projected.
const DEGENERATE_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    /// Horizontal distance from the camera to the centroid of group centers, meters.
    pub distance: f64,
    /// Height above ground, meters.
    pub height: f64,
    /// Angle of the camera position around the centroid, radians.
    pub yaw: f64,
    /// Focal length in pixels.
    pub focal_length: f64,
    /// `[width, height]` in pixels.
    pub image_size: [u32; 2],
    pub person_height: f64,
    pub person_radius: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            distance: 12.0,
            height: 3.0,
            yaw: 0.0,
            focal_length: 1000.0,
            image_size: [1920, 1080],
            person_height: 1.75,
            person_radius: 0.25,
        }
    }
}

impl CameraConfig {
    pub fn validate(&self) -> Result<(), ImagingError> {
        let finite = [self.distance, self.height, self.yaw, self.focal_length, self.person_height, self.person_radius]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(ImagingError::Config("camera fields must be finite".into()));
        }
        if self.distance <= 0.0 {
            return Err(ImagingError::Config("distance must be > 0".into()));
        }
        if self.focal_length <= 0.0 {
            return Err(ImagingError::Config("focal_length must be > 0".into()));
        }
        if self.image_size[0] < 1 || self.image_size[1] < 1 {
            return Err(ImagingError::Config("image dimensions must be >= 1".into()));
        }
        if self.person_height <= 0.0 || self.person_radius <= 0.0 {
            return Err(ImagingError::Config("person dimensions must be > 0".into()));
        }
        Ok(())
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn check(&self, name: &str) -> Result<(), ImagingError> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi {
            Ok(())
        } else {
            Err(ImagingError::Config(format!("{name} interval [{}, {}] is empty or inverted", self.lo, self.hi)))
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.random();
        self.lo + u * (self.hi - self.lo)
    }
}

/// Sampling ranges for the camera; fields without a range are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraRanges {
    pub distance: Interval,
    pub height: Interval,
    pub yaw: Interval,
    pub focal_length: f64,
    pub image_size: [u32; 2],
    pub person_height: f64,
    pub person_radius: f64,
}

impl Default for CameraRanges {
    fn default() -> Self {
        let fixed = CameraConfig::default();
        Self {
            distance: Interval::new(8.0, 16.0),
            height: Interval::new(2.0, 6.0),
            yaw: Interval::new(0.0, TAU),
            focal_length: fixed.focal_length,
            image_size: fixed.image_size,
            person_height: fixed.person_height,
            person_radius: fixed.person_radius,
        }
    }
}

pub fn sample_camera(ranges: &CameraRanges, seed: u64) -> Result<CameraConfig, ImagingError> {
    ranges.distance.check("distance")?;
    ranges.height.check("height")?;
    ranges.yaw.check("yaw")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cam = CameraConfig {
        distance: ranges.distance.draw(&mut rng),
        height: ranges.height.draw(&mut rng),
        yaw: ranges.yaw.draw(&mut rng),
        focal_length: ranges.focal_length,
        image_size: ranges.image_size,
        person_height: ranges.person_height,
        person_radius: ranges.person_radius,
    };
    cam.validate()?;
    Ok(cam)
}

/// A camera posed in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosedCamera {
    pub config: CameraConfig,
    pub position: Vec3,
    right: Vec3,
    up: Vec3,
    forward: Vec3,
}

impl PosedCamera {
    /// Places the camera around `target` (ground point) per `config`.
    pub fn looking_at(target: Vec2, config: CameraConfig) -> Result<Self, ImagingError> {
        config.validate()?;
        let (s, c) = config.yaw.sin_cos();
        let position = Vec3::new(target.x + config.distance * c, target.y + config.distance * s, config.height);
        let forward = (Vec3::new(target.x, target.y, 0.0) - position).normalize();
        let right = forward.cross(&Vec3::z()).normalize();
        let up = right.cross(&forward);
        Ok(Self { config, position, right, up, forward })
    }

    /// `(x, y, forward depth)` in the camera frame.
    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        let rel = p - self.position;
        Vec3::new(rel.dot(&self.right), rel.dot(&self.up), rel.dot(&self.forward))
    }

    /// Pixel coordinates of a camera-frame point with positive depth.
    pub fn to_pixel(&self, cam: &Vec3) -> (f64, f64) {
        let f = self.config.focal_length;
        let cx = self.config.image_size[0] as f64 / 2.0;
        let cy = self.config.image_size[1] as f64 / 2.0;
        (cx + f * cam.x / cam.z, cy - f * cam.y / cam.z)
    }

    /// Box of a person standing at `ground`, or `None` when any part of the
    /// person is behind the camera or the clipped box has no area.
    pub fn project_person(&self, person_id: &str, ground: &Vec2) -> Result<Option<BoundingBox>, ImagingError> {
        let horizontal = (ground - self.position.xy()).norm();
        if horizontal <= DEGENERATE_DISTANCE {
            return Err(ImagingError::DegenerateProjection { person_id: person_id.to_string() });
        }
        let cfg = &self.config;
        let base = Vec3::new(ground.x, ground.y, 0.0);
        let top = Vec3::new(ground.x, ground.y, cfg.person_height);
        let side = self.right * cfg.person_radius;
        let corners = [base - side, base + side, top - side, top + side].map(|p| self.to_camera(&p));
        if corners.iter().any(|c| c.z <= 0.0) {
            return Ok(None);
        }
        let (mut x1, mut y1) = (f64::INFINITY, f64::INFINITY);
        let (mut x2, mut y2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in &corners {
            let (u, v) = self.to_pixel(c);
            x1 = x1.min(u);
            x2 = x2.max(u);
            y1 = y1.min(v);
            y2 = y2.max(v);
        }
        let w = cfg.image_size[0] as f64;
        let h = cfg.image_size[1] as f64;
        let (x1, x2) = (x1.clamp(0.0, w), x2.clamp(0.0, w));
        let (y1, y2) = (y1.clamp(0.0, h), y2.clamp(0.0, h));
        if !(x2 > x1 && y2 > y1) {
            return Ok(None);
        }
        let depth = self.to_camera(&(base + Vec3::z() * (cfg.person_height / 2.0))).z;
        Ok(Some(BoundingBox { person_id: person_id.to_string(), x1, y1, x2, y2, depth }))
    }
}

/// Boxes of every visible person, nearest first (ties by person id).
pub fn project_scene(scene: &SceneGeometry, cam: &CameraConfig) -> Result<Vec<BoundingBox>, ImagingError> {
    let camera = PosedCamera::looking_at(scene.centroid(), *cam)?;
    let mut boxes = Vec::with_capacity(scene.person_count());
    for g in &scene.groups {
        for m in &g.members {
            if let Some(b) = camera.project_person(&m.person_id, &m.position)? {
                boxes.push(b);
            }
        }
    }
    super::sort_front_to_back(&mut boxes);
    Ok(boxes)
}
