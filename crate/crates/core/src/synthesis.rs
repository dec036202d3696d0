//! Scene synthesis: draw a group count, sample group geometries from the
//! pool, spin each one about its center and place them one after another.

use std::collections::HashSet;
use std::f64::consts::TAU;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    estimate_distance_variance_ratio, summarize_group, transform_group, GaussianSummary,
    GeometryError, GroupGeometry, GroupPool, Vec2,
};
use crate::placement::{pair_hinges, place_group, PairHinges, PlacementError, PlacementParams};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("group pool is empty")]
    EmptyPool,
    #[error("pool holds {available} groups but {requested} were requested without replacement")]
    PoolExhausted { requested: usize, available: usize },
    #[error("invalid scene config: {0}")]
    InvalidConfig(String),
    #[error("scene {index}: {source}")]
    Scene {
        index: usize,
        #[source]
        source: Box<SynthesisError>,
    },
    #[error("could not build worker pool: {0}")]
    Workers(String),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

/// Half-open angle interval `[start, end)` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleRange {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolSampling {
    #[default]
    UniformWithReplacement,
    UniformWithoutReplacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PersonIdPolicy {
    /// `g{index}/{original id}`, unique within the scene.
    #[default]
    GroupPrefix,
    /// Keep pool ids; the scene is rejected if they collide.
    Keep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub group_count_range: CountRange,
    pub rotation_range: AngleRange,
    pub placement: PlacementParams,
    pub pool_sampling: PoolSampling,
    pub person_id_policy: PersonIdPolicy,
    /// Replace `placement.r_d` with the pool's distance-to-spread ratio.
    pub estimate_r_d: bool,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            group_count_range: CountRange { min: 3, max: 10 },
            rotation_range: AngleRange { start: 0.0, end: TAU },
            placement: PlacementParams::default(),
            pool_sampling: PoolSampling::default(),
            person_id_policy: PersonIdPolicy::default(),
            estimate_r_d: true,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SynthesisError> {
        let r = self.group_count_range;
        if r.min < 1 || r.min > r.max {
            return Err(SynthesisError::InvalidConfig(format!(
                "group_count_range [{}, {}] must satisfy 1 <= min <= max",
                r.min, r.max
            )));
        }
        let a = self.rotation_range;
        if !(a.start.is_finite() && a.end.is_finite() && a.start <= a.end) {
            return Err(SynthesisError::InvalidConfig(format!(
                "rotation_range [{}, {}) is not a finite interval",
                a.start, a.end
            )));
        }
        if !self.estimate_r_d {
            self.placement.validate()?;
        }
        Ok(())
    }

    /// The config with `r_d` resolved against `pool`.
    pub fn resolve(&self, pool: &GroupPool) -> Result<SceneConfig, SynthesisError> {
        let mut cfg = self.clone();
        if cfg.estimate_r_d {
            cfg.placement.r_d = estimate_distance_variance_ratio(pool)?;
            cfg.estimate_r_d = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupProvenance {
    pub pool_scene_id: String,
    pub source_group_id: String,
    /// Rotation applied about the group center, radians.
    pub rotation: f64,
    /// Placed center minus source center, meters.
    pub translation: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    /// Index of the earlier group in `SceneGeometry::groups`.
    pub existing: usize,
    pub hinges: PairHinges,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementReport {
    pub group: usize,
    pub iterations: usize,
    pub final_loss: f64,
    /// Every hinge against every earlier group is within tolerance.
    pub converged: bool,
    pub pairs: Vec<PairReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGeometry {
    pub scene_id: String,
    pub groups: Vec<GroupGeometry>,
    pub provenance: Vec<GroupProvenance>,
    pub constraint_report: Vec<PlacementReport>,
    /// Parameters the scene was placed with, `r_d` resolved.
    pub placement: PlacementParams,
}

impl SceneGeometry {
    pub fn person_count(&self) -> usize {
        self.groups.iter().map(|g| g.members.len()).sum()
    }

    pub fn fully_converged(&self) -> bool {
        self.constraint_report.iter().all(|r| r.converged)
    }

    /// Mean of the group centers.
    pub fn centroid(&self) -> Vec2 {
        if self.groups.is_empty() {
            return Vec2::zeros();
        }
        let sum = self.groups.iter().fold(Vec2::zeros(), |acc, g| acc + g.center());
        sum / self.groups.len() as f64
    }
}

/// Hinge residuals of every group against each earlier group, recomputed
/// from the placed member positions.
pub fn constraint_hinges(
    groups: &[GroupGeometry],
    params: &PlacementParams,
) -> Result<Vec<Vec<PairHinges>>, GeometryError> {
    let summaries: Vec<GaussianSummary> =
        groups.iter().map(summarize_group).collect::<Result<_, _>>()?;
    Ok((0..summaries.len())
        .map(|k| {
            summaries[..k]
                .iter()
                .map(|e| pair_hinges(&summaries[k], e, params))
                .collect()
        })
        .collect())
}

fn rekey(group: &GroupGeometry, index: usize, policy: PersonIdPolicy) -> GroupGeometry {
    let mut g = group.clone();
    g.group_id = format!("g{index}");
    if policy == PersonIdPolicy::GroupPrefix {
        for m in &mut g.members {
            m.person_id = format!("g{index}/{}", m.person_id);
        }
    }
    g
}

pub fn synthesize_scene(
    pool: &GroupPool,
    cfg: &SceneConfig,
    scene_id: impl Into<String>,
    seed: u64,
) -> Result<SceneGeometry, SynthesisError> {
    let cfg = cfg.resolve(pool)?;
    let sources: Vec<(&str, &GroupGeometry)> = pool.groups().collect();
    if sources.is_empty() {
        return Err(SynthesisError::EmptyPool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(cfg.group_count_range.min..=cfg.group_count_range.max);
    let picks: Vec<usize> = match cfg.pool_sampling {
        PoolSampling::UniformWithReplacement => {
            (0..n).map(|_| rng.random_range(0..sources.len())).collect()
        }
        PoolSampling::UniformWithoutReplacement => {
            if n > sources.len() {
                return Err(SynthesisError::PoolExhausted { requested: n, available: sources.len() });
            }
            sample(&mut rng, sources.len(), n).into_vec()
        }
    };

    let AngleRange { start, end } = cfg.rotation_range;
    let mut groups: Vec<GroupGeometry> = Vec::with_capacity(n);
    let mut provenance = Vec::with_capacity(n);
    let mut outcomes = Vec::with_capacity(n);
    for (index, &pick) in picks.iter().enumerate() {
        let (pool_scene_id, source) = sources[pick];
        let rotation = start + rng.random::<f64>() * (end - start);
        let place_seed: u64 = rng.random();
        let candidate = rekey(&transform_group(source, rotation, Vec2::zeros()), index, cfg.person_id_policy);
        let outcome = place_group(&candidate, &groups, &cfg.placement, place_seed)?;
        provenance.push(GroupProvenance {
            pool_scene_id: pool_scene_id.to_string(),
            source_group_id: source.group_id.clone(),
            rotation,
            translation: outcome.placed.center() - source.center(),
        });
        outcomes.push((outcome.iterations, outcome.final_loss));
        groups.push(outcome.placed);
    }

    if cfg.person_id_policy == PersonIdPolicy::Keep {
        let mut seen = HashSet::new();
        for g in &groups {
            for m in &g.members {
                if !seen.insert(m.person_id.as_str()) {
                    return Err(GeometryError::DuplicatePerson {
                        group_id: g.group_id.clone(),
                        person_id: m.person_id.clone(),
                    }
                    .into());
                }
            }
        }
    }

    let hinges = constraint_hinges(&groups, &cfg.placement)?;
    let constraint_report = hinges
        .into_iter()
        .zip(outcomes)
        .enumerate()
        .map(|(group, (pairs, (iterations, final_loss)))| PlacementReport {
            group,
            iterations,
            final_loss,
            converged: pairs.iter().all(PairHinges::satisfied),
            pairs: pairs
                .into_iter()
                .enumerate()
                .map(|(existing, hinges)| PairReport { existing, hinges })
                .collect(),
        })
        .collect();

    Ok(SceneGeometry {
        scene_id: scene_id.into(),
        groups,
        provenance,
        constraint_report,
        placement: cfg.placement,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of scene `index` within a batch.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index))
}

pub fn batch_scene_id(index: usize) -> String {
    format!("scene_{index:06}")
}

/// Generates `count` scenes. Scene `k` depends only on `(pool, cfg,
/// master_seed, k)`, so the worker count never changes the output.
/// `workers == 0` uses the global thread pool.
pub fn synthesize_batch(
    pool: &GroupPool,
    cfg: &SceneConfig,
    count: usize,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<SceneGeometry>, SynthesisError> {
    if count == 0 {
        return Err(SynthesisError::InvalidConfig("batch count must be >= 1".into()));
    }
    let cfg = cfg.resolve(pool)?;
    let run = || {
        (0..count)
            .into_par_iter()
            .map(|k| {
                synthesize_scene(pool, &cfg, batch_scene_id(k), derive_seed(master_seed, k as u64))
                    .map_err(|e| SynthesisError::Scene { index: k, source: Box::new(e) })
            })
            .collect::<Result<Vec<_>, _>>()
    };
    if workers == 0 {
        return run();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SynthesisError::Workers(e.to_string()))?
        .install(run)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BatchSummary {
    pub scenes: usize,
    pub groups: usize,
    pub persons: usize,
    pub non_converged_groups: usize,
    pub fully_converged_scenes: usize,
}

pub fn summarize_batch(scenes: &[SceneGeometry]) -> BatchSummary {
    let mut s = BatchSummary { scenes: scenes.len(), ..Default::default() };
    for scene in scenes {
        s.groups += scene.groups.len();
        s.persons += scene.person_count();
        s.non_converged_groups += scene.constraint_report.iter().filter(|r| !r.converged).count();
        if scene.fully_converged() {
            s.fully_converged_scenes += 1;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::fixture::{generate_fixture_pool, FixtureSpec};
    use crate::placement::RESIDUAL_TOL;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn pool() -> GroupPool {
        generate_fixture_pool(&FixtureSpec::default(), 9).unwrap()
    }

    #[test]
    fn single_group_sits_at_origin() {
        let cfg = SceneConfig { group_count_range: CountRange { min: 1, max: 1 }, ..Default::default() };
        let scene = synthesize_scene(&pool(), &cfg, "s", 3).unwrap();
        assert_eq!(scene.groups.len(), 1);
        assert!(scene.groups[0].center().norm() < 1e-12);
        assert!(scene.constraint_report[0].converged);
        assert!(scene.constraint_report[0].pairs.is_empty());
    }

    #[test]
    fn group_count_is_uniform() {
        let pool = pool();
        let cfg = SceneConfig::default();
        let mut counts = [0u32; 8];
        for k in 0..2000 {
            let s = synthesize_scene(&pool, &cfg, "s", derive_seed(77, k)).unwrap();
            counts[s.groups.len() - 3] += 1;
        }
        let expected = 2000.0 / 8.0;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let p = 1.0 - ChiSquared::new(7.0).unwrap().cdf(stat);
        assert!(p > 0.01, "counts {counts:?}, p = {p}");
    }

    #[test]
    fn scene_invariants_hold() {
        let pool = pool();
        let cfg = SceneConfig::default().resolve(&pool).unwrap();
        for k in 0..40 {
            let s = synthesize_scene(&pool, &cfg, "s", k).unwrap();
            assert!((3..=10).contains(&s.groups.len()));
            let mut ids = HashSet::new();
            for g in &s.groups {
                assert!(g.members.len() >= 2);
                for m in &g.members {
                    assert!(ids.insert(m.person_id.clone()));
                }
            }
            let hinges = constraint_hinges(&s.groups, &s.placement).unwrap();
            for (report, fresh) in s.constraint_report.iter().zip(&hinges) {
                for (pair, h) in report.pairs.iter().zip(fresh) {
                    assert!((pair.hinges.max() - h.max()).abs() <= 1e-9);
                    assert!((pair.hinges.sum() - h.sum()).abs() <= 1e-9);
                }
                assert_eq!(report.converged, fresh.iter().all(|h| h.max() <= RESIDUAL_TOL));
            }
            for (g, prov) in s.groups.iter().zip(&s.provenance) {
                let src = pool
                    .scenes
                    .iter()
                    .find(|p| p.scene_id == prov.pool_scene_id)
                    .and_then(|p| p.groups.iter().find(|g| g.group_id == prov.source_group_id))
                    .unwrap();
                assert!((src.center() + prov.translation - g.center()).norm() < 1e-9);
                assert!((0.0..TAU).contains(&prov.rotation));
            }
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let pool = pool();
        let cfg = SceneConfig::default();
        let a = synthesize_scene(&pool, &cfg, "s", 5).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&synthesize_scene(&pool, &cfg, "s", 5).unwrap()).unwrap());
        assert_ne!(a.groups, synthesize_scene(&pool, &cfg, "s", 6).unwrap().groups);
    }

    #[test]
    fn batch_of_one_matches_scene() {
        let pool = pool();
        let cfg = SceneConfig::default();
        let batch = synthesize_batch(&pool, &cfg, 1, 1234, 1).unwrap();
        let scene = synthesize_scene(&pool, &cfg, batch_scene_id(0), derive_seed(1234, 0)).unwrap();
        assert_eq!(batch, vec![scene]);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let pool = pool();
        let cfg = SceneConfig::default();
        let one = synthesize_batch(&pool, &cfg, 12, 8, 1).unwrap();
        let many = synthesize_batch(&pool, &cfg, 12, 8, 4).unwrap();
        assert_eq!(serde_json::to_vec(&one).unwrap(), serde_json::to_vec(&many).unwrap());
        let other = synthesize_batch(&pool, &cfg, 1, 9, 1).unwrap();
        assert_ne!(one[0].groups, other[0].groups);
    }

    #[test]
    fn without_replacement_can_exhaust_the_pool() {
        let pool = pool();
        let n = pool.group_count();
        let cfg = SceneConfig {
            group_count_range: CountRange { min: n + 1, max: n + 1 },
            pool_sampling: PoolSampling::UniformWithoutReplacement,
            ..Default::default()
        };
        assert!(matches!(
            synthesize_scene(&pool, &cfg, "s", 0),
            Err(SynthesisError::PoolExhausted { requested, available }) if requested == n + 1 && available == n
        ));
        let cfg = SceneConfig { group_count_range: CountRange { min: n, max: n }, ..cfg };
        let s = synthesize_scene(&pool, &cfg, "s", 0).unwrap();
        let mut sources: Vec<_> = s.provenance.iter().map(|p| (&p.pool_scene_id, &p.source_group_id)).collect();
        sources.sort();
        sources.dedup();
        assert_eq!(sources.len(), n);
    }

    #[test]
    fn keep_policy_rejects_colliding_ids() {
        let cfg = SceneConfig { person_id_policy: PersonIdPolicy::Keep, ..Default::default() };
        // Fixture ids repeat across groups (`p0`, `p1`, ...), so any scene with two groups collides.
        assert!(matches!(
            synthesize_scene(&pool(), &cfg, "s", 0),
            Err(SynthesisError::Geometry(GeometryError::DuplicatePerson { .. }))
        ));
    }

    #[test]
    fn config_validation() {
        let bad = SceneConfig { group_count_range: CountRange { min: 0, max: 3 }, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SceneConfig { group_count_range: CountRange { min: 5, max: 3 }, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SceneConfig { rotation_range: AngleRange { start: 1.0, end: f64::NAN }, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(synthesize_batch(&pool(), &SceneConfig::default(), 0, 1, 1).is_err());
        let empty = GroupPool { scenes: vec![], distance_mode: Default::default() };
        assert!(synthesize_scene(&empty, &SceneConfig { estimate_r_d: false, ..Default::default() }, "s", 0).is_err());
    }

    #[test]
    fn summary_counts() {
        let scenes = synthesize_batch(&pool(), &SceneConfig::default(), 5, 2, 0).unwrap();
        let s = summarize_batch(&scenes);
        assert_eq!(s.scenes, 5);
        assert_eq!(s.groups, scenes.iter().map(|x| x.groups.len()).sum::<usize>());
        assert_eq!(s.persons, scenes.iter().map(SceneGeometry::person_count).sum::<usize>());
    }
}
