use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::GraphCsr;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PprScores {
    pub scores: Vec<f64>,
    pub residual: Vec<f64>,
    pub seeds: Vec<usize>,
    pub alpha: f64,
    pub eps: f64,
    pub pushes: usize,
}

/// Approximate personalized PageRank by residual push.
///
/// Start mass is spread evenly over `seeds`. A node `u` is pushed while
/// `r[u] ≥ eps·deg(u)`: it keeps `α·r[u]` and hands `(1 − α)·r[u]/deg(u)`
/// to each neighbor. Pushes always take the smallest eligible node id.
/// A node without neighbors keeps its whole residual.
pub fn ppr(graph: &GraphCsr, seeds: &[usize], alpha: f64, eps: f64) -> Result<PprScores> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps {eps} must be positive")));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("ppr needs at least one seed".into()));
    }
    let n = graph.num_nodes();
    if let Some(&s) = seeds.iter().find(|&&s| s >= n) {
        return Err(Error::InvalidArgument(format!("seed {s} out of range")));
    }
    let mut p = vec![0.0; n];
    let mut r = vec![0.0; n];
    for &s in seeds {
        r[s] += 1.0 / seeds.len() as f64;
    }
    let mut work: BTreeSet<usize> = seeds.iter().copied().collect();
    let mut pushes = 0;
    while let Some(u) = work.pop_first() {
        let deg = graph.degree(u);
        if deg == 0 {
            p[u] += r[u];
            r[u] = 0.0;
            continue;
        }
        if r[u] < eps * deg as f64 {
            continue;
        }
        pushes += 1;
        let ru = std::mem::take(&mut r[u]);
        p[u] += alpha * ru;
        let share = (1.0 - alpha) * ru / deg as f64;
        for &v in graph.neighbors(u) {
            r[v] += share;
            let dv = graph.degree(v);
            if dv == 0 || r[v] >= eps * dv as f64 {
                work.insert(v);
            }
        }
    }
    Ok(PprScores {
        scores: p,
        residual: r,
        seeds: seeds.to_vec(),
        alpha,
        eps,
        pushes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolated_seed_keeps_everything() {
        let g = GraphCsr::from_undirected_edges(3, &[(1, 2)]).unwrap();
        let s = ppr(&g, &[0], 0.15, 1e-6).unwrap();
        assert_eq!(s.scores, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn self_looped_isolated_seed() {
        let g = GraphCsr::from_undirected_edges(2, &[(0, 0)]).unwrap();
        let s = ppr(&g, &[0], 0.15, 1e-9).unwrap();
        assert!((s.scores[0] - 1.0).abs() < 1e-8);
        assert_eq!(s.scores[1], 0.0);
    }

    #[test]
    fn two_node_path_matches_linear_solve() {
        // π = α e0 + (1 − α) Pᵀ π with P swapping the two nodes:
        // π0 = α + (1 − α) π1, π1 = (1 − α) π0.
        let alpha: f64 = 0.15;
        let pi0 = alpha / (1.0 - (1.0 - alpha).powi(2));
        let pi1 = (1.0 - alpha) * pi0;
        let g = GraphCsr::from_undirected_edges(2, &[(0, 1)]).unwrap();
        let s = ppr(&g, &[0], alpha, 1e-12).unwrap();
        assert!((s.scores[0] - pi0).abs() < 1e-10);
        assert!((s.scores[1] - pi1).abs() < 1e-10);
        assert!((pi0 - 0.540_540_540_540_540_5).abs() < 1e-15);
    }

    #[test]
    fn bad_arguments() {
        let g = GraphCsr::from_undirected_edges(2, &[(0, 1)]).unwrap();
        assert!(ppr(&g, &[], 0.15, 1e-6).is_err());
        assert!(ppr(&g, &[0], 1.0, 1e-6).is_err());
        assert!(ppr(&g, &[0], 0.15, 0.0).is_err());
        assert!(ppr(&g, &[5], 0.15, 1e-6).is_err());
    }
}
