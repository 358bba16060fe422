use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::tensor::{l2_distance, DenseMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GebNode {
    pub node: usize,
    pub class: usize,
    pub nearest_train: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GebReport {
    /// Sum of `nodes[..].distance` in ascending node order.
    pub total: f64,
    pub per_class: Vec<f64>,
    pub nodes: Vec<GebNode>,
    /// Test nodes whose class has no training node; not part of `total`.
    pub excluded: Vec<usize>,
}

/// Sum over test nodes of the distance from `h_test[i]` to the nearest
/// `h_train[j]` among training nodes of the same class.
///
/// Both matrices are indexed by node id. Nearest-node ties go to the
/// lowest id.
pub fn geb(
    h_test: &DenseMatrix,
    h_train: &DenseMatrix,
    labels: &[usize],
    num_classes: usize,
    test: &[usize],
    train: &[usize],
) -> Result<GebReport> {
    if h_test.cols() != h_train.cols() {
        return Err(shape(
            "geb",
            format!("{:?} vs {:?}", h_test.shape(), h_train.shape()),
        ));
    }
    let label_of = |i: usize| -> Result<usize> {
        let y = *labels.get(i).ok_or(Error::MissingLabel(i))?;
        if y >= num_classes {
            return Err(Error::InvalidArgument(format!("label {y} out of range")));
        }
        Ok(y)
    };
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    let mut train_sorted = train.to_vec();
    train_sorted.sort_unstable();
    for &j in &train_sorted {
        if j >= h_train.rows() {
            return Err(shape("geb", format!("train node {j} out of range")));
        }
        by_class[label_of(j)?].push(j);
    }
    let mut test_sorted = test.to_vec();
    test_sorted.sort_unstable();

    let mut report = GebReport {
        total: 0.0,
        per_class: vec![0.0; num_classes],
        nodes: Vec::with_capacity(test_sorted.len()),
        excluded: Vec::new(),
    };
    for &i in &test_sorted {
        if i >= h_test.rows() {
            return Err(shape("geb", format!("test node {i} out of range")));
        }
        let c = label_of(i)?;
        let mut best: Option<(usize, f64)> = None;
        for &j in &by_class[c] {
            let d = l2_distance(h_test.row(i), h_train.row(j));
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        match best {
            Some((j, d)) => {
                report.total += d;
                report.per_class[c] += d;
                report.nodes.push(GebNode {
                    node: i,
                    class: c,
                    nearest_train: j,
                    distance: d,
                });
            }
            None => report.excluded.push(i),
        }
    }
    Ok(report)
}
