//! Link-threshold graph, connected components and normalized min-cut
//! refinement.

use super::{AffinityMatrix, EvaluationError, GroupPartition};

/// Components of the graph with an edge `(i, j)` iff `m[i, j] >= link_threshold`,
/// restricted to `nodes`. Each component lists its nodes in the order given,
/// and components are ordered by their first node.
pub fn connected_components(m: &AffinityMatrix, link_threshold: f64, nodes: &[usize]) -> Vec<Vec<usize>> {
    let mut assigned = vec![false; nodes.len()];
    let mut components = Vec::new();
    for start in 0..nodes.len() {
        if assigned[start] {
            continue;
        }
        assigned[start] = true;
        let mut stack = vec![start];
        let mut members = vec![start];
        while let Some(a) = stack.pop() {
            for b in 0..nodes.len() {
                if !assigned[b] && m.get(nodes[a], nodes[b]) >= link_threshold {
                    assigned[b] = true;
                    stack.push(b);
                    members.push(b);
                }
            }
        }
        members.sort_unstable();
        components.push(members.into_iter().map(|k| nodes[k]).collect());
    }
    components
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinCut {
    pub weight: f64,
    /// One side of the cut, as indices into the weight matrix, ascending.
    pub side: Vec<usize>,
}

/// Global minimum cut of an undirected weighted graph (Stoer–Wagner).
/// `weights` must be square and symmetric with at least two vertices.
/// Among equal-weight phase cuts the earliest is kept.
pub fn min_cut(weights: &[Vec<f64>]) -> MinCut {
    let n = weights.len();
    assert!(n >= 2, "min cut needs two vertices");
    let mut w: Vec<Vec<f64>> = weights.to_vec();
    let mut merged: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut best = MinCut { weight: f64::INFINITY, side: Vec::new() };

    while active.len() > 1 {
        let mut in_a = vec![false; n];
        let mut attach = vec![0.0; n];
        let mut prev = active[0];
        let mut last = active[0];
        for step in 0..active.len() {
            let next = active
                .iter()
                .copied()
                .filter(|&v| !in_a[v])
                .fold(None, |acc: Option<usize>, v| match acc {
                    Some(u) if attach[u] >= attach[v] => Some(u),
                    _ => Some(v),
                })
                .expect("an unvisited vertex remains");
            in_a[next] = true;
            if step + 1 == active.len() {
                last = next;
                break;
            }
            prev = next;
            for &v in &active {
                if !in_a[v] {
                    attach[v] += w[next][v];
                }
            }
        }
        if attach[last] < best.weight {
            let mut side = merged[last].clone();
            side.sort_unstable();
            best = MinCut { weight: attach[last], side };
        }
        let moved = std::mem::take(&mut merged[last]);
        merged[prev].extend(moved);
        for &v in &active {
            if v != prev && v != last {
                w[prev][v] += w[last][v];
                w[v][prev] = w[prev][v];
            }
        }
        active.retain(|&v| v != last);
    }
    best
}

fn check_unit(name: &str, v: f64) -> Result<(), EvaluationError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(EvaluationError::InvalidParameter(format!("{name} = {v} must lie in [0, 1]")))
    }
}

/// Groups persons by thresholded connectivity, then splits any component
/// of three or more whose minimum cut, divided by `|S|·|T|`, falls below
/// `graph_cut_rate`. Cut weights are the affinities of the graph's edges.
/// With `graph_cut_rate = 0` the result is the plain components.
pub fn cluster_affinity(
    m: &AffinityMatrix,
    link_threshold: f64,
    graph_cut_rate: f64,
) -> Result<GroupPartition, EvaluationError> {
    check_unit("link_threshold", link_threshold)?;
    check_unit("graph_cut_rate", graph_cut_rate)?;
    let all: Vec<usize> = (0..m.len()).collect();
    let mut pending = connected_components(m, link_threshold, &all);
    pending.reverse();
    let mut done = Vec::new();
    while let Some(component) = pending.pop() {
        if component.len() < 3 {
            done.push(component);
            continue;
        }
        let weights: Vec<Vec<f64>> = component
            .iter()
            .map(|&i| {
                component
                    .iter()
                    .map(|&j| {
                        let a = m.get(i, j);
                        if i != j && a >= link_threshold {
                            a
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let cut = min_cut(&weights);
        let s = cut.side.len();
        let t = component.len() - s;
        if cut.weight / (s * t) as f64 >= graph_cut_rate {
            done.push(component);
            continue;
        }
        let (mut left, mut right) = (Vec::with_capacity(s), Vec::with_capacity(t));
        for (k, &node) in component.iter().enumerate() {
            if cut.side.binary_search(&k).is_ok() {
                left.push(node);
            } else {
                right.push(node);
            }
        }
        let mut parts: Vec<Vec<usize>> = connected_components(m, link_threshold, &left);
        parts.extend(connected_components(m, link_threshold, &right));
        parts.sort_by_key(|p| p[0]);
        pending.extend(parts.into_iter().rev());
    }
    done.sort_by_key(|c| c[0]);
    let groups = done.into_iter().map(|c| c.into_iter().map(|i| m.ids()[i].clone()).collect()).collect();
    GroupPartition::new(groups)
}
