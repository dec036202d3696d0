//! Tolerant one-to-one group matching and F1.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{EvaluationError, GroupPartition};

/// Slack for the ceil/floor bounds so that, e.g., `(2/3)·3` counts as 2.
const BOUND_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    /// Index into the ground-truth groups as given.
    pub gt: usize,
    /// Index into the predicted groups as given.
    pub pred: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tolerance: f64,
    /// Groups scored on each side, after singleton removal.
    pub gt_groups: usize,
    pub pred_groups: usize,
    pub matches: Vec<MatchedPair>,
}

impl ScoreReport {
    fn from_counts(matched: usize, gt: usize, pred: usize, tolerance: f64, matches: Vec<MatchedPair>) -> Self {
        let (precision, recall) = if gt == 0 && pred == 0 {
            (1.0, 1.0)
        } else {
            let ratio = |d: usize| if d == 0 { 0.0 } else { matched as f64 / d as f64 };
            (ratio(pred), ratio(gt))
        };
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Self { precision, recall, f1, tolerance, gt_groups: gt, pred_groups: pred, matches }
    }
}

fn check_tolerance(t: f64) -> Result<(), EvaluationError> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(EvaluationError::InvalidParameter(format!("tolerance T = {t} must lie in (0, 1]")))
    }
}

/// Overlap of `pred` with `gt` when `pred` matches `gt` at tolerance `t`.
fn match_overlap(gt: &HashSet<&str>, pred: &[String], t: f64) -> Option<usize> {
    let size = gt.len() as f64;
    let inter = pred.iter().filter(|id| gt.contains(id.as_str())).count();
    let extra = pred.len() - inter;
    let need = (t * size - BOUND_EPS).ceil();
    let allow = ((1.0 - t) * size + BOUND_EPS).floor();
    (inter as f64 >= need && extra as f64 <= allow).then_some(inter)
}

/// Kuhn's augmenting path from ground-truth group `g`.
fn augment(g: usize, adj: &[Vec<usize>], pred_owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &p in &adj[g] {
        if seen[p] {
            continue;
        }
        seen[p] = true;
        if pred_owner[p].is_none_or(|other| augment(other, adj, pred_owner, seen)) {
            pred_owner[p] = Some(g);
            return true;
        }
    }
    false
}

fn match_groups(gt: &[&Vec<String>], pred: &[&Vec<String>], t: f64) -> Vec<(usize, usize)> {
    let gt_sets: Vec<HashSet<&str>> = gt.iter().map(|g| g.iter().map(String::as_str).collect()).collect();
    let mut candidates = Vec::new();
    let mut adj = vec![Vec::new(); gt.len()];
    for (gi, g) in gt_sets.iter().enumerate() {
        for (pi, p) in pred.iter().enumerate() {
            if let Some(inter) = match_overlap(g, p, t) {
                candidates.push((inter, gi, pi));
                adj[gi].push(pi);
            }
        }
    }
    // Greedy by overlap, then ground-truth and prediction order.
    candidates.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut gt_owner: Vec<Option<usize>> = vec![None; gt.len()];
    let mut pred_owner: Vec<Option<usize>> = vec![None; pred.len()];
    for &(_, gi, pi) in &candidates {
        if gt_owner[gi].is_none() && pred_owner[pi].is_none() {
            gt_owner[gi] = Some(pi);
            pred_owner[pi] = Some(gi);
        }
    }
    // Below T = 1/2 one prediction can fit several ground-truth groups and
    // greedy may stop short of the largest matching; augment to fix that.
    for gi in 0..gt.len() {
        if gt_owner[gi].is_none() {
            let mut seen = vec![false; pred.len()];
            augment(gi, &adj, &mut pred_owner, &mut seen);
        }
    }
    let mut pairs: Vec<(usize, usize)> =
        pred_owner.iter().enumerate().filter_map(|(pi, g)| g.map(|gi| (gi, pi))).collect();
    pairs.sort_unstable();
    pairs
}

fn kept(p: &GroupPartition, drop_singletons: bool) -> Vec<(usize, &Vec<String>)> {
    p.groups().iter().enumerate().filter(|(_, g)| !drop_singletons || g.len() > 1).collect()
}

/// Tolerant F1 between two partitions. A prediction `P` matches a
/// ground-truth group `G` when `|P∩G| >= ceil(T·|G|)` and
/// `|P\G| <= floor((1-T)·|G|)`; matches are one-to-one.
pub fn f1_at_t(
    gt: &GroupPartition,
    pred: &GroupPartition,
    tolerance: f64,
    drop_singletons: bool,
) -> Result<ScoreReport, EvaluationError> {
    check_tolerance(tolerance)?;
    let gt_kept = kept(gt, drop_singletons);
    let pred_kept = kept(pred, drop_singletons);
    let gt_groups: Vec<&Vec<String>> = gt_kept.iter().map(|(_, g)| *g).collect();
    let pred_groups: Vec<&Vec<String>> = pred_kept.iter().map(|(_, g)| *g).collect();
    let matches: Vec<MatchedPair> = match_groups(&gt_groups, &pred_groups, tolerance)
        .into_iter()
        .map(|(gi, pi)| MatchedPair { gt: gt_kept[gi].0, pred: pred_kept[pi].0 })
        .collect();
    Ok(ScoreReport::from_counts(matches.len(), gt_groups.len(), pred_groups.len(), tolerance, matches))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame_id: String,
    pub report: ScoreReport,
}

/// Per-frame reports and a pooled report over all frames, where matches and
/// group counts are summed before taking ratios.
pub fn score_frames<'a>(
    frames: impl IntoIterator<Item = (&'a str, &'a GroupPartition, &'a GroupPartition)>,
    tolerance: f64,
    drop_singletons: bool,
) -> Result<(ScoreReport, Vec<FrameScore>), EvaluationError> {
    check_tolerance(tolerance)?;
    let mut per_frame = Vec::new();
    let (mut matched, mut gt, mut pred) = (0, 0, 0);
    for (frame_id, g, p) in frames {
        let report = f1_at_t(g, p, tolerance, drop_singletons)?;
        matched += report.matches.len();
        gt += report.gt_groups;
        pred += report.pred_groups;
        per_frame.push(FrameScore { frame_id: frame_id.to_string(), report });
    }
    Ok((ScoreReport::from_counts(matched, gt, pred, tolerance, Vec::new()), per_frame))
}
