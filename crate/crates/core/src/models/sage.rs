//! Two-layer GraphSAGE with mean aggregation.
//!
//! Each layer maps `[h_i ‖ mean_{j∈N(i)} h_j]` through one linear map,
//! stored as separate self and neighbor blocks. The embedding is the
//! layer-1 output.

use crate::error::{Error, Result};
use crate::models::{Dropout, GraphOps};
use crate::tensor::{DenseMatrix, Rng, SparseMatrix};
use crate::train::{glorot_uniform, relu_backward, ParamSet};

pub(crate) fn init(input: usize, hidden: usize, classes: usize, rng: &mut Rng) -> ParamSet {
    // Glorot bounds of the concatenated (2·fan_in × fan_out) weight.
    let mut p = ParamSet::new();
    let w1 = glorot_uniform(2 * input, hidden, rng);
    let (w1_self, w1_neigh) = w1.split_rows(input);
    let w2 = glorot_uniform(2 * hidden, classes, rng);
    let (w2_self, w2_neigh) = w2.split_rows(hidden);
    p.insert("w1_self", w1_self).unwrap();
    p.insert("w1_neigh", w1_neigh).unwrap();
    p.insert("b1", DenseMatrix::zeros(1, hidden)).unwrap();
    p.insert("w2_self", w2_self).unwrap();
    p.insert("w2_neigh", w2_neigh).unwrap();
    p.insert("b2", DenseMatrix::zeros(1, classes)).unwrap();
    p
}

#[derive(Clone, Debug)]
pub(crate) struct Cache {
    x: SparseMatrix,
    pre: DenseMatrix,
    mask: Option<DenseMatrix>,
    hidden: DenseMatrix,
}

pub(crate) fn forward(
    params: &ParamSet,
    ops: &GraphOps,
    x: &SparseMatrix,
    mut dropout: Option<Dropout<'_>>,
) -> Result<(DenseMatrix, DenseMatrix, Cache)> {
    let x = match dropout.as_mut() {
        Some(d) => x.dropout(d.rate, d.rng),
        None => x.clone(),
    };
    let mut pre = x.matmul(params.get("w1_self")?)?;
    pre.axpy(1.0, &ops.mean.spmm(&x.matmul(params.get("w1_neigh")?)?)?)?;
    pre.add_row_broadcast(params.get("b1")?)?;
    let emb = pre.relu();
    let mask = dropout.map(|d| d.mask(emb.rows(), emb.cols()));
    let hidden = match &mask {
        Some(m) => emb.hadamard(m)?,
        None => emb.clone(),
    };
    let mut logits = hidden.matmul(params.get("w2_self")?)?;
    logits.axpy(1.0, &ops.mean.spmm(&hidden.matmul(params.get("w2_neigh")?)?)?)?;
    logits.add_row_broadcast(params.get("b2")?)?;
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
) -> Result<ParamSet> {
    let w2_self = params.get("w2_self")?;
    let w2_neigh = params.get("w2_neigh")?;
    if upstream.rows() != cache.hidden.rows() || upstream.cols() != w2_self.cols() {
        return Err(Error::CacheMismatch(format!(
            "upstream {:?} for hidden {:?}",
            upstream.shape(),
            cache.hidden.shape()
        )));
    }
    let up_t = ops.mean_t.spmm(upstream)?;
    let d_w2_self = cache.hidden.t_matmul(upstream)?;
    let d_w2_neigh = cache.hidden.t_matmul(&up_t)?;
    let d_b2 = upstream.col_sums();
    let mut d_hidden = upstream.matmul_t(w2_self)?;
    d_hidden.axpy(1.0, &up_t.matmul_t(w2_neigh)?)?;
    if let Some(m) = &cache.mask {
        d_hidden = d_hidden.hadamard(m)?;
    }
    let d_pre = relu_backward(&cache.pre, &d_hidden);
    let d_w1_self = cache.x.t_matmul(&d_pre)?;
    let d_w1_neigh = cache.x.t_matmul(&ops.mean_t.spmm(&d_pre)?)?;
    let d_b1 = d_pre.col_sums();
    ParamSet::new()
        .with("w1_self", d_w1_self)?
        .with("w1_neigh", d_w1_neigh)?
        .with("b1", d_b1)?
        .with("w2_self", d_w2_self)?
        .with("w2_neigh", d_w2_neigh)?
        .with("b2", d_b2)
}

/// Neighbor slot zeroed in both layers.
pub(crate) fn surrogate(params: &ParamSet, x: &SparseMatrix) -> Result<DenseMatrix> {
    let mut pre = x.matmul(params.get("w1_self")?)?;
    pre.add_row_broadcast(params.get("b1")?)?;
    let mut logits = pre.relu().matmul(params.get("w2_self")?)?;
    logits.add_row_broadcast(params.get("b2")?)?;
    Ok(logits)
}
