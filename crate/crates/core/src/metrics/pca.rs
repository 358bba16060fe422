use serde::{Deserialize, Serialize};

use crate::error::{shape, Result};
use crate::tensor::{linalg::dot, top_eigenpairs, DenseMatrix};

/// Relative eigenvalue below which the second component is dropped.
const RANK_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pca2d {
    pub coords: Vec<[f64; 2]>,
    pub variances: [f64; 2],
    /// Loadings, each oriented so its largest-magnitude entry is positive.
    pub components: [Vec<f64>; 2],
    pub rank_deficient: bool,
}

/// Projection of the centered rows of `h` onto its top two principal axes.
pub fn pca2d(h: &DenseMatrix) -> Result<Pca2d> {
    let (n, d) = h.shape();
    if n == 0 || d == 0 {
        return Err(shape("pca2d", "empty embedding"));
    }
    let means: Vec<f64> = h.col_sums().as_slice().iter().map(|s| s / n as f64).collect();
    let centered = DenseMatrix::from_fn(n, d, |i, j| h.get(i, j) - means[j]);
    let cov = centered
        .t_matmul(&centered)?
        .scale(1.0 / (n.max(2) - 1) as f64);
    let mut pairs = top_eigenpairs(&cov, 2, 1e-13, 20_000)?;
    let scale = pairs.first().map_or(0.0, |p| p.value.abs());
    let mut rank_deficient = false;
    let mut components: [Vec<f64>; 2] = [vec![0.0; d], vec![0.0; d]];
    let mut variances = [0.0; 2];
    for (k, slot) in components.iter_mut().enumerate() {
        match pairs.get_mut(k) {
            Some(p) if p.value > RANK_TOL * scale && p.value > 0.0 => {
                orient(&mut p.vector);
                *slot = p.vector.clone();
                variances[k] = p.value;
            }
            _ => rank_deficient = true,
        }
    }
    let coords = (0..n)
        .map(|i| {
            let r = centered.row(i);
            [dot(r, &components[0]), dot(r, &components[1])]
        })
        .collect();
    Ok(Pca2d {
        coords,
        variances,
        components,
        rank_deficient,
    })
}

fn orient(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_axis_variance() {
        let h = DenseMatrix::from_fn(6, 3, |i, j| if j == 1 { i as f64 } else { 2.0 });
        let p = pca2d(&h).unwrap();
        assert!(p.rank_deficient);
        assert!(p.coords.iter().all(|c| c[1] == 0.0));
        assert!((p.components[0][1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn duplicated_rows_share_coordinates() {
        let h = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 0.5],
            vec![-1.0, 0.3, 2.0],
            vec![1.0, 2.0, 0.5],
            vec![0.0, -1.0, 1.0],
        ])
        .unwrap();
        let p = pca2d(&h).unwrap();
        assert_eq!(p.coords[0], p.coords[2]);
    }
}
