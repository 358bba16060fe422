//! APPNP: a two-layer MLP followed by `K` personalized-PageRank steps
//! `Z ← (1 − α) Â Z + α Z0`.
//!
//! The propagation is a polynomial in the symmetric `Â`, hence
//! self-adjoint: its backward pass is the same propagation.

use crate::error::{Error, Result};
use crate::models::{Dropout, GraphOps};
use crate::tensor::{DenseMatrix, SparseMatrix};
use crate::train::{relu_backward, ParamSet};

#[derive(Clone, Debug)]
pub(crate) struct Cache {
    x: SparseMatrix,
    pre: DenseMatrix,
    mask: Option<DenseMatrix>,
    hidden: DenseMatrix,
}

pub(crate) fn propagate(
    ops: &GraphOps,
    z0: &DenseMatrix,
    k: usize,
    alpha: f64,
) -> Result<DenseMatrix> {
    let mut z = z0.clone();
    for _ in 0..k {
        let mut next = ops.sym.spmm(&z)?.scale(1.0 - alpha);
        next.axpy(alpha, z0)?;
        z = next;
    }
    Ok(z)
}

fn hidden_pre(params: &ParamSet, x: &SparseMatrix) -> Result<DenseMatrix> {
    let mut pre = x.matmul(params.get("w1")?)?;
    pre.add_row_broadcast(params.get("b1")?)?;
    Ok(pre)
}

pub(crate) fn forward(
    params: &ParamSet,
    ops: &GraphOps,
    x: &SparseMatrix,
    k: usize,
    alpha: f64,
    mut dropout: Option<Dropout<'_>>,
) -> Result<(DenseMatrix, DenseMatrix, Cache)> {
    let x = match dropout.as_mut() {
        Some(d) => x.dropout(d.rate, d.rng),
        None => x.clone(),
    };
    let pre = hidden_pre(params, &x)?;
    let clean = pre.relu();
    let mask = dropout.map(|d| d.mask(clean.rows(), clean.cols()));
    let hidden = match &mask {
        Some(m) => clean.hadamard(m)?,
        None => clean.clone(),
    };
    let mut z0 = hidden.matmul(params.get("w2")?)?;
    z0.add_row_broadcast(params.get("b2")?)?;
    let logits = propagate(ops, &z0, k, alpha)?;
    let emb = propagate(ops, &clean, k, alpha)?;
    Ok((
        logits,
        emb,
        Cache {
            x,
            pre,
            mask,
            hidden,
        },
    ))
}

pub(crate) fn backward(
    params: &ParamSet,
    ops: &GraphOps,
    cache: &Cache,
    upstream: &DenseMatrix,
    k: usize,
    alpha: f64,
) -> Result<ParamSet> {
    let w2 = params.get("w2")?;
    if upstream.rows() != cache.hidden.rows() || upstream.cols() != w2.cols() {
        return Err(Error::CacheMismatch(format!(
            "upstream {:?} for hidden {:?}",
            upstream.shape(),
            cache.hidden.shape()
        )));
    }
    let d_z0 = propagate(ops, upstream, k, alpha)?;
    let d_w2 = cache.hidden.t_matmul(&d_z0)?;
    let d_b2 = d_z0.col_sums();
    let mut d_hidden = d_z0.matmul_t(w2)?;
    if let Some(m) = &cache.mask {
        d_hidden = d_hidden.hadamard(m)?;
    }
    let d_pre = relu_backward(&cache.pre, &d_hidden);
    let d_w1 = cache.x.t_matmul(&d_pre)?;
    let d_b1 = d_pre.col_sums();
    ParamSet::new()
        .with("w1", d_w1)?
        .with("b1", d_b1)?
        .with("w2", d_w2)?
        .with("b2", d_b2)
}

pub(crate) fn surrogate(params: &ParamSet, x: &SparseMatrix) -> Result<DenseMatrix> {
    let mut logits = hidden_pre(params, x)?.relu().matmul(params.get("w2")?)?;
    logits.add_row_broadcast(params.get("b2")?)?;
    Ok(logits)
}
