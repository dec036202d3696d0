use super::*;
use crate::geometry::{GroupGeometry, PersonPose, Vec2};
use crate::placement::PlacementParams;
use crate::synthesis::SceneGeometry;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn bx(id: &str, x1: f64, y1: f64, x2: f64, y2: f64, depth: f64) -> BoundingBox {
    BoundingBox { person_id: id.into(), x1, y1, x2, y2, depth }
}

fn scene(positions: &[(f64, f64)]) -> SceneGeometry {
    let members = positions
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| PersonPose::new(format!("p{i}"), Vec2::new(x, y), 0.0, None).unwrap())
        .collect();
    SceneGeometry {
        scene_id: "s".into(),
        groups: vec![GroupGeometry { group_id: "g0".into(), members }],
        provenance: vec![],
        constraint_report: vec![],
        placement: PlacementParams::default(),
    }
}

fn level_camera(distance: f64) -> CameraConfig {
    CameraConfig { distance, height: 0.0, yaw: 0.0, image_size: [4000, 4000], ..CameraConfig::default() }
}

#[test]
fn on_axis_box_matches_similar_triangles() {
    // camera at (D, 0, 0) looking along -x; both people on the optical axis
    let s = scene(&[(-1.0, 0.0), (1.0, 0.0)]);
    let cam = level_camera(10.0);
    let boxes = project_scene(&s, &cam).unwrap();
    assert_eq!(boxes.len(), 2);
    let near = &boxes[0];
    assert_eq!(near.person_id, "p1");
    let f = cam.focal_length;
    assert_abs_diff_eq!(near.depth, 9.0, epsilon = 1e-12);
    assert_abs_diff_eq!(near.y2 - near.y1, f * cam.person_height / 9.0, epsilon = 1e-9);
    assert_abs_diff_eq!(near.x2 - near.x1, f * 2.0 * cam.person_radius / 9.0, epsilon = 1e-9);
    assert_abs_diff_eq!((near.x1 + near.x2) / 2.0, 2000.0, epsilon = 1e-9);
    assert_abs_diff_eq!(boxes[1].depth, 11.0, epsilon = 1e-12);
}

#[test]
fn doubling_depth_halves_box() {
    let s = scene(&[(-0.5, 0.0), (0.5, 0.0)]);
    let near = project_scene(&s, &level_camera(6.5)).unwrap()[0].clone();
    // person p1 at forward depth 6 vs 12
    let far = project_scene(&s, &level_camera(12.5)).unwrap()[0].clone();
    assert_abs_diff_eq!(near.depth * 2.0, far.depth, epsilon = 1e-12);
    assert_abs_diff_eq!((near.y2 - near.y1) / 2.0, far.y2 - far.y1, epsilon = 1e-9);
    assert_abs_diff_eq!((near.x2 - near.x1) / 2.0, far.x2 - far.x1, epsilon = 1e-9);
}

#[test]
fn person_behind_camera_is_dropped() {
    // centroid at (10, 0); camera at distance 5 along +x sits at (15, 0)
    let s = scene(&[(0.0, 0.0), (20.0, 0.0)]);
    let boxes = project_scene(&s, &level_camera(5.0)).unwrap();
    assert_eq!(boxes.len(), 1);
    assert_eq!(boxes[0].person_id, "p0");
}

#[test]
fn camera_on_person_is_degenerate() {
    let s = scene(&[(0.0, 0.0), (10.0, 0.0)]);
    let err = project_scene(&s, &level_camera(5.0)).unwrap_err();
    assert_eq!(err, ImagingError::DegenerateProjection { person_id: "p1".into() });
}

#[test]
fn boxes_are_sorted_clipped_and_deterministic() {
    let s = scene(&[(-1.0, 0.3), (1.2, -0.4), (0.1, 1.5), (0.0, -1.1)]);
    let cam = CameraConfig { height: 4.0, yaw: 1.1, distance: 7.0, ..CameraConfig::default() };
    let a = project_scene(&s, &cam).unwrap();
    let b = project_scene(&s, &cam).unwrap();
    assert_eq!(a, b);
    for w in a.windows(2) {
        assert!(w[0].depth <= w[1].depth);
    }
    for b in &a {
        assert!(b.x1 >= 0.0 && b.y1 >= 0.0 && b.x2 <= 1920.0 && b.y2 <= 1080.0);
        assert!(b.x2 > b.x1 && b.y2 > b.y1);
    }
}

#[test]
fn sample_camera_point_intervals_and_errors() {
    let ranges = CameraRanges {
        distance: Interval::point(9.0),
        height: Interval::point(2.5),
        yaw: Interval::point(PI),
        ..CameraRanges::default()
    };
    let cam = sample_camera(&ranges, 5).unwrap();
    assert_eq!((cam.distance, cam.height, cam.yaw), (9.0, 2.5, PI));
    let r = CameraRanges::default();
    assert_eq!(sample_camera(&r, 3).unwrap(), sample_camera(&r, 3).unwrap());
    let inverted = CameraRanges { height: Interval::new(3.0, 1.0), ..r };
    assert!(matches!(sample_camera(&inverted, 3), Err(ImagingError::Config(_))));
    let zero_distance = CameraRanges { distance: Interval::point(0.0), ..r };
    assert!(matches!(sample_camera(&zero_distance, 3), Err(ImagingError::Config(_))));
}

#[test]
fn sampled_yaw_is_uniform() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let r = CameraRanges::default();
    let bins = 10;
    let mut counts = vec![0f64; bins];
    for seed in 0..1000u64 {
        let cam = sample_camera(&r, seed).unwrap();
        let b = ((cam.yaw - r.yaw.lo) / (r.yaw.hi - r.yaw.lo) * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1.0;
    }
    let expected = 100.0;
    let stat: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat);
    assert!(p > 0.01, "chi2 {stat} p {p}");
}

#[test]
fn individual_occlusion_cases() {
    let target = bx("k", 0.0, 0.0, 10.0, 10.0, 5.0);
    assert_eq!(individual_occlusion(&[target.clone(), bx("far", 0.0, 0.0, 10.0, 10.0, 6.0)], "k").unwrap(), 0.0);
    assert_eq!(individual_occlusion(&[target.clone(), bx("n", 0.0, 0.0, 10.0, 10.0, 4.0)], "k").unwrap(), 1.0);
    assert_eq!(individual_occlusion(&[target.clone(), bx("n", 0.0, 0.0, 5.0, 10.0, 4.0)], "k").unwrap(), 0.5);
    assert_eq!(individual_occlusion(&[target.clone()], "k").unwrap(), 0.0);
    assert_eq!(individual_occlusion(&[target], "nobody").unwrap_err(), ImagingError::NotFound("nobody".into()));
}

#[test]
fn equal_depth_ties_break_by_id() {
    let a = bx("a", 0.0, 0.0, 4.0, 4.0, 3.0);
    let b = bx("b", 0.0, 0.0, 4.0, 4.0, 3.0);
    let boxes = [b, a];
    assert_eq!(individual_occlusion(&boxes, "a").unwrap(), 0.0);
    assert_eq!(individual_occlusion(&boxes, "b").unwrap(), 1.0);
}

#[test]
fn group_occlusion_cases() {
    let lone = [bx("a", 0.0, 0.0, 4.0, 4.0, 3.0)];
    let g = group_occlusion(&lone, &["a"]).unwrap();
    assert_eq!((g.non_occlusion, g.occlusion), (1.0, 0.0));

    let boxes = [
        bx("a", 0.0, 0.0, 4.0, 4.0, 3.0),
        bx("b", 10.0, 0.0, 14.0, 4.0, 3.0),
        bx("x", 9.0, -1.0, 15.0, 5.0, 1.0),
    ];
    let g = group_occlusion(&boxes, &["a", "b"]).unwrap();
    assert_eq!(g.non_occlusion, 0.5);

    let covered = [bx("a", 0.0, 0.0, 4.0, 4.0, 3.0), bx("x", -1.0, -1.0, 20.0, 20.0, 1.0)];
    assert_eq!(group_occlusion(&covered, &["a"]).unwrap().occlusion, 1.0);

    // a member without a box contributes nothing
    let g = group_occlusion(&boxes, &["a", "ghost"]).unwrap();
    assert_eq!(g.non_occlusion, 1.0);
    assert_eq!(group_occlusion(&boxes, &["ghost"]).unwrap_err(), ImagingError::UndefinedRate);
}

#[test]
fn fellow_members_occlude_each_other() {
    let boxes = [bx("a", 0.0, 0.0, 4.0, 4.0, 3.0), bx("b", 2.0, 0.0, 6.0, 4.0, 2.0)];
    let g = group_occlusion(&boxes, &["a", "b"]).unwrap();
    // union is fully visible: b in front, a's uncovered half behind it
    assert_eq!(g.non_occlusion, 1.0);
    assert_eq!(individual_occlusion(&boxes, "a").unwrap(), 0.5);
}

/// Pixel-center rasterization over a `res × res` grid spanning `extent`.
pub(crate) fn raster_rates(boxes: &[BoundingBox], group: &[&str], extent: Rect, res: usize) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| front_order(&boxes[a], &boxes[b]));
    let mut inside = vec![0usize; boxes.len()];
    let mut visible = vec![0usize; boxes.len()];
    let (mut group_total, mut group_visible) = (0usize, 0usize);
    let dx = extent.width() / res as f64;
    let dy = extent.height() / res as f64;
    for i in 0..res {
        let x = extent.x1 + (i as f64 + 0.5) * dx;
        for j in 0..res {
            let y = extent.y1 + (j as f64 + 0.5) * dy;
            let hit = |b: &BoundingBox| b.x1 <= x && x < b.x2 && b.y1 <= y && y < b.y2;
            let mut front = None;
            let mut any_group = false;
            for &k in &order {
                if hit(&boxes[k]) {
                    inside[k] += 1;
                    front.get_or_insert(k);
                    any_group |= group.contains(&boxes[k].person_id.as_str());
                }
            }
            if let Some(k) = front {
                visible[k] += 1;
                if group.contains(&boxes[k].person_id.as_str()) {
                    group_visible += 1;
                }
            }
            if any_group {
                group_total += 1;
            }
        }
    }
    let individual = (0..boxes.len()).map(|k| 1.0 - visible[k] as f64 / inside[k].max(1) as f64).collect();
    (individual, group_visible as f64 / group_total.max(1) as f64)
}

#[test]
fn sweep_agrees_with_rasterization() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let boxes: Vec<BoundingBox> = (0..6)
            .map(|i| {
                let x = rng.random_range(0.0..60.0);
                let y = rng.random_range(0.0..60.0);
                bx(&format!("p{i}"), x, y, x + rng.random_range(10.0..40.0), y + rng.random_range(10.0..40.0), rng.random_range(1.0..5.0))
            })
            .collect();
        let (raster, raster_group) = raster_rates(&boxes, &["p0", "p1"], Rect::new(0.0, 0.0, 100.0, 100.0), 400);
        for (k, b) in boxes.iter().enumerate() {
            let exact = individual_occlusion(&boxes, &b.person_id).unwrap();
            assert!((exact - raster[k]).abs() <= 1e-2, "{exact} vs {}", raster[k]);
        }
        let g = group_occlusion(&boxes, &["p0", "p1"]).unwrap();
        assert!((g.non_occlusion - raster_group).abs() <= 1e-2);
    }
}

fn arb_boxes() -> impl Strategy<Value = Vec<BoundingBox>> {
    prop::collection::vec((0.0..50.0f64, 0.0..50.0f64, 1.0..30.0f64, 1.0..30.0f64, 0.5..10.0f64), 1..8).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (x, y, w, h, d))| bx(&format!("p{i}"), x, y, x + w, y + h, d))
            .collect()
    })
}

proptest! {
    #[test]
    fn adding_an_occluder_never_lowers_occlusion(boxes in arb_boxes(), extra in (0.0..50.0f64, 0.0..50.0f64, 1.0..30.0f64, 1.0..30.0f64, 0.1..10.0f64)) {
        let (x, y, w, h, d) = extra;
        let mut more = boxes.clone();
        more.push(bx("zz", x, y, x + w, y + h, d));
        for b in &boxes {
            let before = individual_occlusion(&boxes, &b.person_id).unwrap();
            let after = individual_occlusion(&more, &b.person_id).unwrap();
            prop_assert!(after >= before - 1e-12);
            prop_assert!((0.0..=1.0).contains(&before));
        }
    }

    #[test]
    fn singleton_group_equals_individual(boxes in arb_boxes()) {
        for b in &boxes {
            let g = group_occlusion(&boxes, &[b.person_id.as_str()]).unwrap();
            let no = individual_non_occlusion(&boxes, &b.person_id).unwrap();
            prop_assert_eq!(g.non_occlusion, no);
            prop_assert!((g.occlusion + g.non_occlusion - 1.0).abs() <= 1e-12);
        }
    }
}
