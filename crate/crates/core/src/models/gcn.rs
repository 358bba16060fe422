//! Two-layer GCN.
//!
//! `H1 = relu(Â X W1)`, embedding `E = Â H1`, logits `E W2 + b2`.

use crate::error::{Error, Result};
use crate::models::{Dropout, GraphOps};
use crate::tensor::{DenseMatrix, Rng, SparseMatrix};
use crate::train::{glorot_uniform, relu_backward, ParamSet};

pub(crate) fn init(input: usize, hidden: usize, classes: usize, rng: &mut Rng) -> ParamSet {
    let mut p = ParamSet::new();
    p.insert("w1", glorot_uniform(input, hidden, rng)).unwrap();
    p.insert("w2", glorot_uniform(hidden, classes, rng)).unwrap();
    p.insert("b2", DenseMatrix::zeros(1, classes)).unwrap();
    p
}

#[derive(Clone, Debug)]
pub(crate) struct Cache {
    x: SparseMatrix,
    pre: DenseMatrix,
    mask: Option<DenseMatrix>,
    emb: DenseMatrix,
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
    let pre = ops.sym.spmm(&x.matmul(params.get("w1")?)?)?;
    let mut hidden = pre.relu();
    let mask = dropout.map(|d| d.mask(hidden.rows(), hidden.cols()));
    if let Some(m) = &mask {
        hidden = hidden.hadamard(m)?;
    }
    let emb = ops.sym.spmm(&hidden)?;
    let mut logits = emb.matmul(params.get("w2")?)?;
    logits.add_row_broadcast(params.get("b2")?)?;
    Ok((
        logits,
        emb.clone(),
        Cache {
            x,
            pre,
            mask,
            emb,
        },
    ))
}

pub(crate) fn backward(
    params: &ParamSet,
    ops: &GraphOps,
    cache: &Cache,
    upstream: &DenseMatrix,
) -> Result<ParamSet> {
    let w2 = params.get("w2")?;
    if upstream.rows() != cache.emb.rows() || upstream.cols() != w2.cols() {
        return Err(Error::CacheMismatch(format!(
            "upstream {:?} for embedding {:?}",
            upstream.shape(),
            cache.emb.shape()
        )));
    }
    let d_w2 = cache.emb.t_matmul(upstream)?;
    let d_b2 = upstream.col_sums();
    let mut d_hidden = ops.sym.spmm(&upstream.matmul_t(w2)?)?;
    if let Some(m) = &cache.mask {
        d_hidden = d_hidden.hadamard(m)?;
    }
    let d_pre = relu_backward(&cache.pre, &d_hidden);
    let d_w1 = cache.x.t_matmul(&ops.sym.spmm(&d_pre)?)?;
    ParamSet::new()
        .with("w1", d_w1)?
        .with("w2", d_w2)?
        .with("b2", d_b2)
}

pub(crate) fn surrogate(params: &ParamSet, x: &SparseMatrix) -> Result<DenseMatrix> {
    let hidden = x.matmul(params.get("w1")?)?.relu();
    let mut logits = hidden.matmul(params.get("w2")?)?;
    logits.add_row_broadcast(params.get("b2")?)?;
    Ok(logits)
}
