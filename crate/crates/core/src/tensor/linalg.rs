//! Power-iteration routines: spectral norm and symmetric eigenpairs.

use serde::{Deserialize, Serialize};

use crate::error::{shape, Result};
use crate::tensor::{l2_norm, DenseMatrix, Rng};

/// Seed of the fixed start vector, so estimates are reproducible.
const START_SEED: u64 = 0x5eed_0f_1a;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralNorm {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest singular value of `w` by power iteration on `wᵀw`.
///
/// Stops once successive estimates agree to `tol` relative. When
/// `max_iter` runs out the last estimate is returned with
/// `converged = false`.
pub fn spectral_norm(w: &DenseMatrix, tol: f64, max_iter: usize) -> Result<SpectralNorm> {
    if w.rows() == 0 || w.cols() == 0 {
        return Err(shape("spectral_norm", "empty matrix"));
    }
    let mut v = start_vector(w.cols());
    let mut sigma = 0.0;
    for it in 1..=max_iter {
        let u = mat_vec(w, &v);
        let next_sigma = l2_norm(&u);
        let z = mat_t_vec(w, &u);
        let zn = l2_norm(&z);
        if zn == 0.0 {
            return Ok(SpectralNorm {
                value: next_sigma,
                iterations: it,
                converged: true,
            });
        }
        v = z.into_iter().map(|x| x / zn).collect();
        if (next_sigma - sigma).abs() <= tol * next_sigma {
            // One more product with the refreshed vector.
            let value = l2_norm(&mat_vec(w, &v)).max(next_sigma);
            return Ok(SpectralNorm {
                value,
                iterations: it,
                converged: true,
            });
        }
        sigma = next_sigma;
    }
    Ok(SpectralNorm {
        value: sigma,
        iterations: max_iter,
        converged: false,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub converged: bool,
}

/// Leading `k` eigenpairs of a symmetric positive semidefinite matrix by
/// power iteration with Hotelling deflation.
pub fn top_eigenpairs(
    sym: &DenseMatrix,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<EigenPair>> {
    let n = sym.rows();
    if n == 0 || sym.cols() != n {
        return Err(shape("top_eigenpairs", format!("{:?}", sym.shape())));
    }
    let mut a = sym.clone();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k.min(n) {
        let mut v = start_vector(n);
        let mut lambda = 0.0;
        let mut converged = false;
        for _ in 0..max_iter {
            let z = mat_vec(&a, &v);
            let zn = l2_norm(&z);
            if zn == 0.0 {
                lambda = 0.0;
                converged = true;
                break;
            }
            let next: Vec<f64> = z.iter().map(|x| x / zn).collect();
            let next_lambda = dot(&next, &mat_vec(&a, &next));
            let delta = next
                .iter()
                .zip(&v)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            v = next;
            let settled = (next_lambda - lambda).abs() <= tol * next_lambda.abs().max(1e-300);
            lambda = next_lambda;
            if settled && delta <= tol.sqrt() {
                converged = true;
                break;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let d = lambda * v[i] * v[j];
                a.set(i, j, a.get(i, j) - d);
            }
        }
        out.push(EigenPair {
            value: lambda,
            vector: v,
            converged,
        });
    }
    Ok(out)
}

fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = Rng::new(START_SEED);
    let v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let norm = l2_norm(&v);
    v.into_iter().map(|x| x / norm).collect()
}

pub(crate) fn mat_vec(m: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    (0..m.rows()).map(|i| dot(m.row(i), v)).collect()
}

pub(crate) fn mat_t_vec(m: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (i, &vi) in v.iter().enumerate() {
        for (o, x) in out.iter_mut().zip(m.row(i)) {
            *o += vi * x;
        }
    }
    out
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
