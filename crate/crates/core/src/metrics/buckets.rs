use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::tensor::GraphCsr;

pub const NUM_BUCKETS: usize = 5;
/// `[0, .2), [.2, .4), [.4, .6), [.6, .8), [.8, 1]`.
pub const BUCKET_EDGES: [f64; NUM_BUCKETS + 1] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

/// Misclassification counts per same-class-neighbor-proportion bucket.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HomophilyBuckets {
    pub nodes: [usize; NUM_BUCKETS],
    pub wrong_before: [usize; NUM_BUCKETS],
    pub wrong_after: [usize; NUM_BUCKETS],
    /// Wrong before, right after.
    pub fixed: [usize; NUM_BUCKETS],
    /// Right before, wrong after.
    pub broken: [usize; NUM_BUCKETS],
    /// Test nodes without neighbors, counted in bucket 0.
    pub isolated: Vec<usize>,
}

impl HomophilyBuckets {
    pub fn merge(&mut self, other: &Self) {
        for b in 0..NUM_BUCKETS {
            self.nodes[b] += other.nodes[b];
            self.wrong_before[b] += other.wrong_before[b];
            self.wrong_after[b] += other.wrong_after[b];
            self.fixed[b] += other.fixed[b];
            self.broken[b] += other.broken[b];
        }
        self.isolated.extend(&other.isolated);
    }

    /// Share of fixed nodes in the two highest buckets.
    pub fn top_two_fixed_share(&self) -> f64 {
        let total: usize = self.fixed.iter().sum();
        if total == 0 {
            return f64::NAN;
        }
        (self.fixed[NUM_BUCKETS - 2] + self.fixed[NUM_BUCKETS - 1]) as f64 / total as f64
    }
}

/// Bucket index of `same / degree`, computed in integers so the edges are
/// exact.
pub(crate) fn bucket_of(same: usize, degree: usize) -> usize {
    if degree == 0 {
        0
    } else {
        (NUM_BUCKETS * same / degree).min(NUM_BUCKETS - 1)
    }
}

/// Buckets test nodes by the fraction of neighbors (self excluded) that
/// share their true label, and counts errors before and after FR.
pub fn homophily_buckets(
    graph: &GraphCsr,
    labels: &[usize],
    before: &[usize],
    after: &[usize],
    test: &[usize],
) -> Result<HomophilyBuckets> {
    if before.len() != graph.num_nodes() || after.len() != graph.num_nodes() {
        return Err(shape("homophily_buckets", "predictions must cover every node"));
    }
    let mut out = HomophilyBuckets::default();
    for &i in test {
        let y = *labels.get(i).ok_or(Error::MissingLabel(i))?;
        let others: Vec<usize> = graph.neighbors(i).iter().copied().filter(|&j| j != i).collect();
        let same = others.iter().filter(|&&j| labels[j] == y).count();
        if others.is_empty() {
            out.isolated.push(i);
        }
        let b = bucket_of(same, others.len());
        let wrong_b = before[i] != y;
        let wrong_a = after[i] != y;
        out.nodes[b] += 1;
        out.wrong_before[b] += wrong_b as usize;
        out.wrong_after[b] += wrong_a as usize;
        out.fixed[b] += (wrong_b && !wrong_a) as usize;
        out.broken[b] += (!wrong_b && wrong_a) as usize;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_edges_are_exact() {
        assert_eq!(bucket_of(1, 4), 1);
        assert_eq!(bucket_of(1, 5), 1);
        assert_eq!(bucket_of(3, 5), 3);
        assert_eq!(bucket_of(4, 5), 4);
        assert_eq!(bucket_of(5, 5), 4);
        assert_eq!(bucket_of(0, 3), 0);
        assert_eq!(bucket_of(0, 0), 0);
    }

    #[test]
    fn star_counts() {
        // Center 0 (class 0) with neighbors of classes 0, 1, 1, 1: 1 of 4 same.
        let g = GraphCsr::from_undirected_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let labels = [0, 0, 1, 1, 1, 0];
        let before = [1, 0, 1, 1, 1, 1];
        let after = [0, 0, 1, 1, 1, 1];
        let r = homophily_buckets(&g, &labels, &before, &after, &[0, 1, 5]).unwrap();
        assert_eq!(r.nodes, [1, 1, 0, 0, 1]);
        assert_eq!(r.fixed, [0, 1, 0, 0, 0]);
        assert_eq!(r.wrong_before, [1, 1, 0, 0, 0]);
        assert_eq!(r.wrong_after, [1, 0, 0, 0, 0]);
        assert_eq!(r.isolated, vec![5]);
    }
}
