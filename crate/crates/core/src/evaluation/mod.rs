//! Grouping from pairwise affinities and tolerant group-detection scoring.

mod cluster;
mod score;

pub use cluster::{cluster_affinity, connected_components, min_cut, MinCut};
pub use score::{f1_at_t, score_frames, FrameScore, MatchedPair, ScoreReport};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluationError {
    #[error("affinity matrix: {0}")]
    InvalidMatrix(String),
    #[error("partition: {0}")]
    InvalidPartition(String),
    #[error("{0}")]
    InvalidParameter(String),
}

/// Square affinity table over person ids, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
}

impl AffinityMatrix {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, EvaluationError> {
        let n = ids.len();
        let bad = |m: String| Err(EvaluationError::InvalidMatrix(m));
        if n == 0 {
            return bad("needs at least one id".into());
        }
        let mut seen = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return bad(format!("id `{dup}` repeated"));
        }
        if rows.len() != n {
            return bad(format!("{} ids but {} rows", n, rows.len()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return bad(format!("row {i} has {} values, expected {n}", rows[i].len()));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if !(0.0..=1.0).contains(&v) {
                    return bad(format!("value {v} at ({i}, {j}) is outside [0, 1]"));
                }
                if (v - values[j * n + i]).abs() > SYMMETRY_TOL {
                    return bad(format!("not symmetric at ({i}, {j})"));
                }
            }
            if (values[i * n + i] - 1.0).abs() > SYMMETRY_TOL {
                return bad(format!("diagonal entry {i} is not 1"));
            }
        }
        Ok(Self { ids, values })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }
}

/// Disjoint, non-empty groups of person ids.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<String>>", into = "Vec<Vec<String>>")]
pub struct GroupPartition {
    groups: Vec<Vec<String>>,
}

impl GroupPartition {
    pub fn new(groups: Vec<Vec<String>>) -> Result<Self, EvaluationError> {
        let mut seen = HashSet::new();
        for (i, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(EvaluationError::InvalidPartition(format!("group {i} is empty")));
            }
            for id in g {
                if !seen.insert(id.as_str()) {
                    return Err(EvaluationError::InvalidPartition(format!("person `{id}` is in two groups")));
                }
            }
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Vec<String>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Members sorted within groups, groups sorted; equal partitions compare equal.
    pub fn canonical(&self) -> Self {
        let mut groups: Vec<Vec<String>> = self
            .groups
            .iter()
            .map(|g| {
                let mut g = g.clone();
                g.sort();
                g
            })
            .collect();
        groups.sort();
        Self { groups }
    }
}

impl TryFrom<Vec<Vec<String>>> for GroupPartition {
    type Error = EvaluationError;

    fn try_from(groups: Vec<Vec<String>>) -> Result<Self, Self::Error> {
        Self::new(groups)
    }
}

impl From<GroupPartition> for Vec<Vec<String>> {
    fn from(p: GroupPartition) -> Self {
        p.groups
    }
}

/// Grouping and scoring hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub link_threshold: f64,
    pub graph_cut_rate: f64,
    pub tolerance: f64,
    pub drop_singletons: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { link_threshold: 0.9, graph_cut_rate: 0.3, tolerance: 2.0 / 3.0, drop_singletons: true }
    }
}
