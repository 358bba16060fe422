//! Accuracy, embedding bias, homophily analysis and 2-D projections.

mod buckets;
mod geb;
mod pca;

pub use buckets::{homophily_buckets, HomophilyBuckets, BUCKET_EDGES, NUM_BUCKETS};
pub use geb::{geb, GebNode, GebReport};
pub use pca::{pca2d, Pca2d};

use crate::error::{shape, Error, Result};
use crate::tensor::{argmax, DenseMatrix};

/// Fraction of `mask` rows whose argmax (lowest index on ties) equals the
/// label.
pub fn accuracy(logits: &DenseMatrix, labels: &[usize], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyMask("accuracy"));
    }
    let mut hits = 0usize;
    for &i in mask {
        if i >= logits.rows() {
            return Err(shape("accuracy", format!("node {i} out of range")));
        }
        let label = *labels.get(i).ok_or(Error::MissingLabel(i))?;
        if argmax(logits.row(i)) == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / mask.len() as f64)
}

/// Mean and sample standard deviation (`n − 1`); std is 0 for one value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
