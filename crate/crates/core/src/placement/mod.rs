//! Placement of a new group relative to already placed groups.
//!
//! Each existing group contributes three hinge terms: the new group must sit
//! at least `r_d·σ + β` away measured against either group's spread toward the
//! other, plus a threshold term on the raw distance. The scene loss averages
//! those terms and adds an attraction regularizer `θ·mean(d)` so the new group
//! does not drift away. Only the new group's center is optimized.

mod adam;

pub use adam::Adam;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    summarize_group, transform_group, DistanceMode, GaussianSummary, GeometryError, GroupGeometry,
    Mat2, Vec2, DIRECTION_EPS, SIGMA_FLOOR,
};

/// A hinge residual at or below this counts as satisfied.
pub const RESIDUAL_TOL: f64 = 1e-3;

/// Number of iterations spanned by the loss-change stopping test.
pub const STOP_WINDOW: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlacementError {
    #[error("loss is undefined without existing groups")]
    NoExistingGroups,
    #[error("invalid placement parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Which side of `γ` the third hinge term penalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `max{γ − d, 0}`: penalizes groups closer than `γ`.
    #[default]
    Repel,
    /// `max{d − γ, 0}`: penalizes groups farther than `γ`.
    Attract,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementParams {
    /// Closeness margin, added to the scaled spread.
    pub beta: f64,
    /// Distance threshold.
    pub gamma: f64,
    /// Regularization rate of the attraction term.
    pub theta: f64,
    /// Distance-to-spread ratio scaling both closeness hinges.
    pub r_d: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once the loss changes by less than this over [`STOP_WINDOW`] iterations.
    pub convergence_tol: f64,
    pub threshold_mode: ThresholdMode,
    pub distance_mode: DistanceMode,
    /// Extra seeded starts tried while no start satisfies every hinge.
    pub restarts: usize,
}

impl Default for PlacementParams {
    fn default() -> Self {
        Self {
            beta: 0.4,
            gamma: 2.0,
            theta: 0.1,
            r_d: 2.0,
            learning_rate: 5e-2,
            max_iters: 500,
            convergence_tol: 1e-6,
            threshold_mode: ThresholdMode::Repel,
            distance_mode: DistanceMode::Euclidean,
            restarts: 7,
        }
    }
}

impl PlacementParams {
    pub fn validate(&self) -> Result<(), PlacementError> {
        let bad = |what: &str| Err(PlacementError::InvalidParams(what.to_string()));
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be finite and >= 0");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be finite and > 0");
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return bad("theta must be finite and >= 0");
        }
        if !(self.r_d > 0.0 && self.r_d.is_finite()) {
            return bad("r_d must be finite and > 0");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and > 0");
        }
        if self.max_iters < 1 {
            return bad("max_iters must be >= 1");
        }
        if !(self.convergence_tol >= 0.0) {
            return bad("convergence_tol must be >= 0");
        }
        Ok(())
    }
}

/// Hinge values for one (new, existing) pair. All are `>= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PairHinges {
    /// `max{r_d·σ(new→existing) + β − d, 0}`
    pub new_spread: f64,
    /// `max{r_d·σ(existing→new) + β − d, 0}`
    pub existing_spread: f64,
    /// Threshold term, orientation set by [`ThresholdMode`].
    pub threshold: f64,
}

impl PairHinges {
    pub fn sum(&self) -> f64 {
        self.new_spread + self.existing_spread + self.threshold
    }

    pub fn max(&self) -> f64 {
        self.new_spread.max(self.existing_spread).max(self.threshold)
    }

    pub fn satisfied(&self) -> bool {
        self.max() <= RESIDUAL_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementOutcome {
    pub placed: GroupGeometry,
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// One entry per existing group, in input order.
    pub per_pair_hinge_residuals: Vec<PairHinges>,
}

/// Per-pair geometric quantities shared by the loss and its gradient.
struct PairTerms {
    d: f64,
    grad_d: Vec2,
    sigma_new: f64,
    grad_sigma_new: Vec2,
    sigma_existing: f64,
    grad_sigma_existing: Vec2,
}

/// Spread of `sigma` along `dir` and its gradient with respect to the
/// (unnormalized) direction vector of length `len`.
fn spread_and_grad(sigma: &Mat2, dir: &Vec2, len: f64) -> (f64, Vec2) {
    let se = sigma * dir;
    let q = dir.dot(&se).max(0.0);
    let s = q.sqrt();
    if s <= SIGMA_FLOOR {
        return (SIGMA_FLOOR, Vec2::zeros());
    }
    (s, (se - dir * q) / (len * s))
}

fn pair_terms(new_mu: &Vec2, new_sigma: &Mat2, existing: &GaussianSummary, mode: DistanceMode) -> PairTerms {
    let offset = new_mu - existing.mu;
    let len = offset.norm();
    let (d, grad_d) = match mode {
        DistanceMode::Euclidean if len > DIRECTION_EPS => (len, offset / len),
        DistanceMode::Euclidean => (len, Vec2::zeros()),
        DistanceMode::LiteralSquared => (len * len, 2.0 * offset),
    };
    if len <= DIRECTION_EPS {
        let axis = Vec2::x();
        let spread = |s: &Mat2| (axis.dot(&(s * axis))).max(0.0).sqrt().max(SIGMA_FLOOR);
        return PairTerms {
            d,
            grad_d,
            sigma_new: spread(new_sigma),
            grad_sigma_new: Vec2::zeros(),
            sigma_existing: spread(&existing.sigma),
            grad_sigma_existing: Vec2::zeros(),
        };
    }
    let toward_new = offset / len;
    // the new group looks toward the existing one; moving the new center
    // moves that direction vector the opposite way
    let (sigma_new, g_new) = spread_and_grad(new_sigma, &(-toward_new), len);
    let (sigma_existing, g_existing) = spread_and_grad(&existing.sigma, &toward_new, len);
    PairTerms {
        d,
        grad_d,
        sigma_new,
        grad_sigma_new: -g_new,
        sigma_existing,
        grad_sigma_existing: g_existing,
    }
}

fn hinges_from_terms(t: &PairTerms, p: &PlacementParams) -> PairHinges {
    let threshold_arg = match p.threshold_mode {
        ThresholdMode::Repel => p.gamma - t.d,
        ThresholdMode::Attract => t.d - p.gamma,
    };
    PairHinges {
        new_spread: (p.r_d * t.sigma_new + p.beta - t.d).max(0.0),
        existing_spread: (p.r_d * t.sigma_existing + p.beta - t.d).max(0.0),
        threshold: threshold_arg.max(0.0),
    }
}

/// Loss of a new group (given by its covariance) as a function of its center.
#[derive(Debug, Clone)]
pub struct SceneObjective<'a> {
    new_sigma: Mat2,
    existing: &'a [GaussianSummary],
    params: PlacementParams,
}

impl<'a> SceneObjective<'a> {
    pub fn new(
        new_sigma: Mat2,
        existing: &'a [GaussianSummary],
        params: PlacementParams,
    ) -> Result<Self, PlacementError> {
        if existing.is_empty() {
            return Err(PlacementError::NoExistingGroups);
        }
        Ok(Self { new_sigma, existing, params })
    }

    pub fn hinges(&self, mu: &Vec2) -> Vec<PairHinges> {
        self.existing
            .iter()
            .map(|e| hinges_from_terms(&pair_terms(mu, &self.new_sigma, e, self.params.distance_mode), &self.params))
            .collect()
    }

    pub fn loss(&self, mu: &Vec2) -> f64 {
        let mut hinge_total = 0.0;
        let mut dist_total = 0.0;
        for e in self.existing {
            let t = pair_terms(mu, &self.new_sigma, e, self.params.distance_mode);
            hinge_total += hinges_from_terms(&t, &self.params).sum();
            dist_total += t.d;
        }
        let n = self.existing.len() as f64;
        hinge_total / n + self.params.theta * dist_total / n
    }

    /// Subgradient of [`Self::loss`]; hinges sitting exactly on their kink
    /// contribute nothing.
    pub fn gradient(&self, mu: &Vec2) -> Vec2 {
        let p = &self.params;
        let mut grad = Vec2::zeros();
        for e in self.existing {
            let t = pair_terms(mu, &self.new_sigma, e, p.distance_mode);
            if p.r_d * t.sigma_new + p.beta - t.d > 0.0 {
                grad += p.r_d * t.grad_sigma_new - t.grad_d;
            }
            if p.r_d * t.sigma_existing + p.beta - t.d > 0.0 {
                grad += p.r_d * t.grad_sigma_existing - t.grad_d;
            }
            match p.threshold_mode {
                ThresholdMode::Repel if p.gamma - t.d > 0.0 => grad -= t.grad_d,
                ThresholdMode::Attract if t.d - p.gamma > 0.0 => grad += t.grad_d,
                _ => {}
            }
            grad += p.theta * t.grad_d;
        }
        grad / self.existing.len() as f64
    }
}

pub fn pair_hinges(new: &GaussianSummary, existing: &GaussianSummary, p: &PlacementParams) -> PairHinges {
    hinges_from_terms(&pair_terms(&new.mu, &new.sigma, existing, p.distance_mode), p)
}

pub fn pairwise_loss(new: &GaussianSummary, existing: &GaussianSummary, p: &PlacementParams) -> f64 {
    pair_hinges(new, existing, p).sum()
}

fn summaries(groups: &[GroupGeometry]) -> Result<Vec<GaussianSummary>, PlacementError> {
    Ok(groups.iter().map(summarize_group).collect::<Result<Vec<_>, _>>()?)
}

pub fn scene_loss(
    new: &GroupGeometry,
    existing: &[GroupGeometry],
    p: &PlacementParams,
) -> Result<f64, PlacementError> {
    let new_summary = summarize_group(new)?;
    let existing = summaries(existing)?;
    Ok(SceneObjective::new(new_summary.sigma, &existing, *p)?.loss(&new_summary.mu))
}

/// Gradient of [`scene_loss`] with respect to the new group's center.
pub fn loss_gradient(
    new: &GroupGeometry,
    existing: &[GroupGeometry],
    p: &PlacementParams,
) -> Result<Vec2, PlacementError> {
    let new_summary = summarize_group(new)?;
    let existing = summaries(existing)?;
    Ok(SceneObjective::new(new_summary.sigma, &existing, *p)?.gradient(&new_summary.mu))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterSolution {
    pub center: Vec2,
    pub loss: f64,
    pub iterations: usize,
    pub hinges: Vec<PairHinges>,
}

impl CenterSolution {
    /// Every hinge is within [`RESIDUAL_TOL`].
    pub fn feasible(&self) -> bool {
        self.hinges.iter().all(PairHinges::satisfied)
    }
}

/// Runs Adam on the new group's center from `init` and returns the best
/// iterate seen: the lowest-loss iterate satisfying every hinge if there
/// is one, else the lowest-loss iterate.
pub fn optimize_center(objective: &SceneObjective<'_>, init: Vec2) -> CenterSolution {
    let p = &objective.params;
    let mut adam = Adam::new(p.learning_rate);
    let mut x = init;
    let mut best = Candidate::at(objective, x);
    let mut history = Vec::with_capacity(p.max_iters + 1);
    history.push(best.loss);
    let mut iterations = 0;
    while iterations < p.max_iters {
        let g = objective.gradient(&x);
        adam.update(&mut x, &g);
        iterations += 1;
        let current = Candidate::at(objective, x);
        let loss = current.loss;
        if current.better_than(&best) {
            best = current;
        }
        history.push(loss);
        if history.len() > STOP_WINDOW {
            let past = history[history.len() - 1 - STOP_WINDOW];
            if (loss - past).abs() < p.convergence_tol {
                break;
            }
        }
    }
    CenterSolution { center: best.center, loss: best.loss, iterations, hinges: best.hinges }
}

struct Candidate {
    center: Vec2,
    loss: f64,
    worst: f64,
    hinges: Vec<PairHinges>,
}

impl Candidate {
    fn at(objective: &SceneObjective<'_>, center: Vec2) -> Self {
        let hinges = objective.hinges(&center);
        let worst = hinges.iter().map(PairHinges::max).fold(0.0, f64::max);
        Self { center, loss: objective.loss(&center), worst, hinges }
    }

    fn feasible(&self) -> bool {
        self.worst <= RESIDUAL_TOL
    }

    fn better_than(&self, other: &Self) -> bool {
        match (self.feasible(), other.feasible()) {
            (true, false) => true,
            (false, true) => false,
            _ => self.loss < other.loss,
        }
    }
}

/// Places `candidate` among `existing` groups by optimizing its center.
///
/// With no existing groups the candidate is centered on the origin.
/// Otherwise the center starts at a seeded uniform draw inside the bounding
/// rectangle of existing centers grown by `γ` on every side.
pub fn place_group(
    candidate: &GroupGeometry,
    existing: &[GroupGeometry],
    p: &PlacementParams,
    seed: u64,
) -> Result<PlacementOutcome, PlacementError> {
    p.validate()?;
    candidate.validate()?;
    let summary = summarize_group(candidate)?;
    if existing.is_empty() {
        return Ok(PlacementOutcome {
            placed: transform_group(candidate, 0.0, -summary.mu),
            final_loss: 0.0,
            iterations: 0,
            converged: true,
            per_pair_hinge_residuals: Vec::new(),
        });
    }
    let existing = summaries(existing)?;
    let objective = SceneObjective::new(summary.sigma, &existing, *p)?;
    let mut best: Option<CenterSolution> = None;
    let mut iterations = 0;
    for init in initial_centers(&existing, p.gamma, seed).take(p.restarts + 1) {
        let solution = optimize_center(&objective, init);
        iterations += solution.iterations;
        let feasible = solution.feasible();
        if best.as_ref().is_none_or(|b| solution.loss < b.loss || (feasible && !b.feasible())) {
            best = Some(solution);
        }
        if feasible {
            break;
        }
    }
    let solution = best.expect("at least one start");
    let converged = solution.feasible();
    Ok(PlacementOutcome {
        placed: transform_group(candidate, 0.0, solution.center - summary.mu),
        final_loss: solution.loss,
        iterations,
        converged,
        per_pair_hinge_residuals: solution.hinges,
    })
}

/// Uniform draw inside the existing centers' bounding box grown by `margin`.
pub fn initial_center(existing: &[GaussianSummary], margin: f64, seed: u64) -> Vec2 {
    initial_centers(existing, margin, seed).next().expect("endless stream")
}

/// Independent uniform draws from the region of [`initial_center`]; the
/// first equals `initial_center(existing, margin, seed)`.
pub fn initial_centers(existing: &[GaussianSummary], margin: f64, seed: u64) -> impl Iterator<Item = Vec2> {
    let mut lo = Vec2::repeat(f64::INFINITY);
    let mut hi = Vec2::repeat(f64::NEG_INFINITY);
    for e in existing {
        lo = lo.inf(&e.mu);
        hi = hi.sup(&e.mu);
    }
    lo -= Vec2::repeat(margin);
    hi += Vec2::repeat(margin);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::iter::repeat_with(move || {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        Vec2::new(lo.x + u * (hi.x - lo.x), lo.y + v * (hi.y - lo.y))
    })
}
