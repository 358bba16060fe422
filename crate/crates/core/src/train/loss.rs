//! Training objectives with their gradients w.r.t. the prediction.

use crate::error::{shape, Error, Result};
use crate::tensor::DenseMatrix;

/// Half squared error summed over columns, averaged over rows:
/// `L = ½ Σ (pred − target)² / rows`, gradient `(pred − target) / rows`.
pub fn mse_loss(pred: &DenseMatrix, target: &DenseMatrix) -> Result<(f64, DenseMatrix)> {
    if pred.shape() != target.shape() {
        return Err(shape(
            "mse_loss",
            format!("{:?} vs {:?}", pred.shape(), target.shape()),
        ));
    }
    let rows = pred.rows().max(1) as f64;
    let diff = pred.sub(target)?;
    let loss = 0.5 * diff.as_slice().iter().map(|d| d * d).sum::<f64>() / rows;
    Ok((loss, diff.scale(1.0 / rows)))
}

/// Mean negative log-likelihood of `labels` over the masked rows.
/// Rows outside `mask` get a zero gradient.
pub fn softmax_cross_entropy(
    logits: &DenseMatrix,
    labels: &[usize],
    mask: &[usize],
) -> Result<(f64, DenseMatrix)> {
    if mask.is_empty() {
        return Err(Error::EmptyMask("softmax_cross_entropy"));
    }
    let classes = logits.cols();
    let mut grad = DenseMatrix::zeros(logits.rows(), classes);
    let scale = 1.0 / mask.len() as f64;
    let mut loss = 0.0;
    for &i in mask {
        if i >= logits.rows() {
            return Err(shape("softmax_cross_entropy", format!("node {i} out of range")));
        }
        let label = *labels.get(i).ok_or(Error::MissingLabel(i))?;
        if label >= classes {
            return Err(Error::InvalidArgument(format!(
                "label {label} of node {i} exceeds {classes} classes"
            )));
        }
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        loss += log_z - row[label];
        let g = grad.row_mut(i);
        for (c, gc) in g.iter_mut().enumerate() {
            let p = (row[c] - log_z).exp();
            *gc = scale * (p - if c == label { 1.0 } else { 0.0 });
        }
    }
    Ok((loss * scale, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_trivial_cases() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(mse_loss(&a, &a).unwrap().0, 0.0);
        let p = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        let t = DenseMatrix::zeros(1, 1);
        let (l, g) = mse_loss(&p, &t).unwrap();
        assert_eq!(l, 0.5);
        assert_eq!(g.as_slice(), &[1.0]);
        assert!(mse_loss(&p, &a).is_err());
    }

    #[test]
    fn cross_entropy_trivial_cases() {
        let uniform = DenseMatrix::zeros(3, 4);
        let (l, _) = softmax_cross_entropy(&uniform, &[0, 1, 2], &[0, 1, 2]).unwrap();
        assert!((l - 4f64.ln()).abs() < 1e-15);

        let dominant = DenseMatrix::from_rows(&[vec![50.0, 0.0, 0.0]]).unwrap();
        let (l, _) = softmax_cross_entropy(&dominant, &[0], &[0]).unwrap();
        assert!(l.abs() < 1e-8);

        assert!(matches!(
            softmax_cross_entropy(&uniform, &[0, 1, 2], &[]),
            Err(Error::EmptyMask(_))
        ));
    }

    #[test]
    fn unmasked_rows_have_zero_gradient() {
        let logits = DenseMatrix::from_fn(4, 3, |i, j| (i + 2 * j) as f64 * 0.3);
        let (_, g) = softmax_cross_entropy(&logits, &[0, 1, 2, 0], &[1, 3]).unwrap();
        assert!(g.row(0).iter().all(|v| *v == 0.0));
        assert!(g.row(2).iter().all(|v| *v == 0.0));
        assert!(g.row(1).iter().any(|v| *v != 0.0));
    }
}
