//! Training-split construction: personalized PageRank push, biased
//! (PPR-local) splits and uniform random splits.

mod ppr;

pub use ppr::{ppr, PprScores};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{GraphCsr, Rng};

pub const DEFAULT_ALPHA: f64 = 0.15;
pub const DEFAULT_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Canonical,
    Random,
    PprBiased,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: SplitKind,
    pub seed: Option<u64>,
    pub per_class_budget: Option<usize>,
    pub val_size: Option<usize>,
    pub alpha: Option<f64>,
    pub eps: Option<f64>,
    /// Per class: the PPR seed node, if the class had candidates.
    pub class_seeds: Vec<Option<usize>>,
    pub warnings: Vec<String>,
}

impl Provenance {
    pub fn canonical() -> Self {
        Self {
            kind: SplitKind::Canonical,
            seed: None,
            per_class_budget: None,
            val_size: None,
            alpha: None,
            eps: None,
            class_seeds: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

/// Sorted, pairwise disjoint node-id sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitMasks {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub provenance: Provenance,
}

impl SplitMasks {
    pub fn new(
        mut train: Vec<usize>,
        mut val: Vec<usize>,
        mut test: Vec<usize>,
        provenance: Provenance,
    ) -> Self {
        train.sort_unstable();
        val.sort_unstable();
        test.sort_unstable();
        Self {
            train,
            val,
            test,
            provenance,
        }
    }

    /// Ids in range, no duplicates, sets disjoint.
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut seen = vec![false; num_nodes];
        for (name, ids) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &i in ids {
                if i >= num_nodes {
                    return Err(Error::InvalidArgument(format!(
                        "{name} id {i} out of range for {num_nodes} nodes"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidArgument(format!(
                        "node {i} appears twice across splits"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `train ∪ val`, sorted.
    pub fn labeled(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.train.iter().chain(&self.val).copied().collect();
        ids.sort_unstable();
        ids
    }
}

fn non_test_by_class(
    labels: &[usize],
    num_classes: usize,
    test: &[usize],
) -> Result<Vec<Vec<usize>>> {
    let test: BTreeSet<usize> = test.iter().copied().collect();
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &y) in labels.iter().enumerate() {
        if y >= num_classes {
            return Err(Error::InvalidArgument(format!(
                "label {y} of node {i} exceeds {num_classes} classes"
            )));
        }
        if !test.contains(&i) {
            by_class[y].push(i);
        }
    }
    Ok(by_class)
}

fn draw_val(
    labels_len: usize,
    test: &[usize],
    train: &[usize],
    val_size: usize,
    rng: &mut Rng,
    warnings: &mut Vec<String>,
) -> Vec<usize> {
    let taken: BTreeSet<usize> = test.iter().chain(train).copied().collect();
    let pool: Vec<usize> = (0..labels_len).filter(|i| !taken.contains(i)).collect();
    if pool.len() < val_size {
        warnings.push(format!(
            "validation pool has {} nodes, wanted {val_size}",
            pool.len()
        ));
    }
    rng.sample(&pool, val_size.min(pool.len()))
}

/// Per class: a random seed node, then that class's non-test nodes ranked
/// by PPR from the seed (ties by ascending id); the top `per_class_budget`
/// become train. Validation is uniform over the remaining non-test nodes.
#[allow(clippy::too_many_arguments)]
pub fn biased_split(
    graph: &GraphCsr,
    labels: &[usize],
    num_classes: usize,
    test: &[usize],
    per_class_budget: usize,
    val_size: usize,
    alpha: f64,
    eps: f64,
    seed: u64,
) -> Result<SplitMasks> {
    if labels.len() != graph.num_nodes() {
        return Err(Error::InvalidArgument("labels do not cover the graph".into()));
    }
    let mut rng = Rng::new(seed).split("biased_split");
    let by_class = non_test_by_class(labels, num_classes, test)?;
    let mut train = Vec::new();
    let mut class_seeds = Vec::with_capacity(num_classes);
    let mut warnings = Vec::new();
    for (c, candidates) in by_class.iter().enumerate() {
        if candidates.is_empty() {
            warnings.push(format!("class {c} has no non-test nodes"));
            class_seeds.push(None);
            continue;
        }
        let root = candidates[rng.index(candidates.len())];
        class_seeds.push(Some(root));
        let scores = ppr(graph, &[root], alpha, eps)?;
        let mut ranked = candidates.clone();
        ranked.sort_by(|&a, &b| {
            scores.scores[b]
                .total_cmp(&scores.scores[a])
                .then(a.cmp(&b))
        });
        if ranked.len() < per_class_budget {
            warnings.push(format!(
                "class {c} has {} candidates for budget {per_class_budget}",
                ranked.len()
            ));
        }
        train.extend(ranked.into_iter().take(per_class_budget));
    }
    let val = draw_val(labels.len(), test, &train, val_size, &mut rng, &mut warnings);
    Ok(SplitMasks::new(
        train,
        val,
        test.to_vec(),
        Provenance {
            kind: SplitKind::PprBiased,
            seed: Some(seed),
            per_class_budget: Some(per_class_budget),
            val_size: Some(val_size),
            alpha: Some(alpha),
            eps: Some(eps),
            class_seeds,
            warnings,
        },
    ))
}

/// Uniform per-class draw of `per_class_budget` non-test nodes for train,
/// then `val_size` uniform non-test nodes for validation.
pub fn random_split(
    labels: &[usize],
    num_classes: usize,
    test: &[usize],
    per_class_budget: usize,
    val_size: usize,
    seed: u64,
) -> Result<SplitMasks> {
    let mut rng = Rng::new(seed).split("random_split");
    let by_class = non_test_by_class(labels, num_classes, test)?;
    let mut train = Vec::new();
    let mut warnings = Vec::new();
    for (c, candidates) in by_class.iter().enumerate() {
        if candidates.len() < per_class_budget {
            warnings.push(format!(
                "class {c} has {} candidates for budget {per_class_budget}",
                candidates.len()
            ));
        }
        train.extend(rng.sample(candidates, per_class_budget.min(candidates.len())));
    }
    let val = draw_val(labels.len(), test, &train, val_size, &mut rng, &mut warnings);
    Ok(SplitMasks::new(
        train,
        val,
        test.to_vec(),
        Provenance {
            kind: SplitKind::Random,
            seed: Some(seed),
            per_class_budget: Some(per_class_budget),
            val_size: Some(val_size),
            alpha: None,
            eps: None,
            class_seeds: vec![None; num_classes],
            warnings,
        },
    ))
}
