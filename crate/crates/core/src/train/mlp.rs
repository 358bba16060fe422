//! Two-layer perceptron `relu(x·W1 + b1)·W2 + b2`.
//!
//! Parameter names are fixed: `w1` (in × hidden), `b1` (1 × hidden),
//! `w2` (hidden × out), `b2` (1 × out).

use crate::error::{shape, Error, Result};
use crate::tensor::{DenseMatrix, Rng};
use crate::train::{glorot_uniform, ParamSet};

pub fn init_mlp(input: usize, hidden: usize, output: usize, rng: &mut Rng) -> ParamSet {
    let mut p = ParamSet::new();
    p.insert("w1", glorot_uniform(input, hidden, rng)).unwrap();
    p.insert("b1", DenseMatrix::zeros(1, hidden)).unwrap();
    p.insert("w2", glorot_uniform(hidden, output, rng)).unwrap();
    p.insert("b2", DenseMatrix::zeros(1, output)).unwrap();
    p
}

/// Activations kept by [`mlp_forward_cached`] for the backward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    input: DenseMatrix,
    pre: DenseMatrix,
    hidden: DenseMatrix,
}

impl MlpCache {
    pub fn hidden(&self) -> &DenseMatrix {
        &self.hidden
    }
}

pub fn mlp_forward(params: &ParamSet, input: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(mlp_forward_cached(params, input)?.0)
}

pub fn mlp_forward_cached(
    params: &ParamSet,
    input: &DenseMatrix,
) -> Result<(DenseMatrix, MlpCache)> {
    let w1 = params.get("w1")?;
    if input.cols() != w1.rows() {
        return Err(shape(
            "mlp_forward",
            format!("input {:?} vs w1 {:?}", input.shape(), w1.shape()),
        ));
    }
    let mut pre = input.matmul(w1)?;
    pre.add_row_broadcast(params.get("b1")?)?;
    let hidden = pre.relu();
    let mut out = hidden.matmul(params.get("w2")?)?;
    out.add_row_broadcast(params.get("b2")?)?;
    Ok((
        out,
        MlpCache {
            input: input.clone(),
            pre,
            hidden,
        },
    ))
}

/// Parameter gradients given `upstream = ∂L/∂output`.
pub fn mlp_backward(
    params: &ParamSet,
    cache: &MlpCache,
    upstream: &DenseMatrix,
) -> Result<ParamSet> {
    let w2 = params.get("w2")?;
    if upstream.rows() != cache.hidden.rows() || upstream.cols() != w2.cols() {
        return Err(Error::CacheMismatch(format!(
            "upstream {:?} for cached hidden {:?}",
            upstream.shape(),
            cache.hidden.shape()
        )));
    }
    if cache.hidden.cols() != w2.rows() || cache.input.cols() != params.get("w1")?.rows() {
        return Err(Error::CacheMismatch("cache built for other parameters".into()));
    }
    let d_w2 = cache.hidden.t_matmul(upstream)?;
    let d_b2 = upstream.col_sums();
    let d_pre = relu_backward(&cache.pre, &upstream.matmul_t(w2)?);
    let d_w1 = cache.input.t_matmul(&d_pre)?;
    let d_b1 = d_pre.col_sums();
    ParamSet::new()
        .with("w1", d_w1)?
        .with("b1", d_b1)?
        .with("w2", d_w2)?
        .with("b2", d_b2)
}

/// `grad ⊙ 1[pre > 0]`.
pub fn relu_backward(pre: &DenseMatrix, grad: &DenseMatrix) -> DenseMatrix {
    debug_assert_eq!(pre.shape(), grad.shape());
    let data = pre
        .as_slice()
        .iter()
        .zip(grad.as_slice())
        .map(|(&p, &g)| if p > 0.0 { g } else { 0.0 })
        .collect();
    DenseMatrix::new(pre.rows(), pre.cols(), data).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_give_zero_output() {
        let p = ParamSet::new()
            .with("w1", DenseMatrix::zeros(3, 4))
            .unwrap()
            .with("b1", DenseMatrix::zeros(1, 4))
            .unwrap()
            .with("w2", DenseMatrix::zeros(4, 2))
            .unwrap()
            .with("b2", DenseMatrix::zeros(1, 2))
            .unwrap();
        let x = DenseMatrix::from_fn(5, 3, |i, j| i as f64 - j as f64);
        assert!(mlp_forward(&p, &x).unwrap().as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_weights_pass_nonnegative_input() {
        let p = ParamSet::new()
            .with("w1", DenseMatrix::identity(3))
            .unwrap()
            .with("b1", DenseMatrix::zeros(1, 3))
            .unwrap()
            .with("w2", DenseMatrix::identity(3))
            .unwrap()
            .with("b2", DenseMatrix::zeros(1, 3))
            .unwrap();
        let x = DenseMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 * 0.5);
        assert_eq!(mlp_forward(&p, &x).unwrap(), x);
    }

    #[test]
    fn matches_straight_line_oracle() {
        let mut rng = Rng::new(9);
        let mut p = init_mlp(5, 7, 3, &mut rng);
        for (_, m) in p.iter_mut() {
            for v in m.as_mut_slice() {
                *v = rng.uniform_range(-1.0, 1.0);
            }
        }
        let x = DenseMatrix::from_fn(6, 5, |_, _| rng.normal());
        let out = mlp_forward(&p, &x).unwrap();

        let (w1, b1, w2, b2) = (
            p.get("w1").unwrap(),
            p.get("b1").unwrap(),
            p.get("w2").unwrap(),
            p.get("b2").unwrap(),
        );
        for i in 0..6 {
            let mut h = [0.0; 7];
            for (k, hk) in h.iter_mut().enumerate() {
                let mut s = 0.0;
                for j in 0..5 {
                    s += x.get(i, j) * w1.get(j, k);
                }
                *hk = (s + b1.get(0, k)).max(0.0);
            }
            for c in 0..3 {
                let mut s = 0.0;
                for (k, hk) in h.iter().enumerate() {
                    s += hk * w2.get(k, c);
                }
                assert_eq!(out.get(i, c), s + b2.get(0, c));
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = Rng::new(2);
        let p = init_mlp(3, 4, 2, &mut rng);
        let x = DenseMatrix::from_fn(5, 3, |_, _| rng.normal());
        let (_, cache) = mlp_forward_cached(&p, &x).unwrap();
        let g = mlp_backward(&p, &cache, &DenseMatrix::zeros(5, 2)).unwrap();
        assert!(g.iter().all(|(_, m)| m.as_slice().iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn mismatched_cache_is_rejected() {
        let mut rng = Rng::new(3);
        let p = init_mlp(3, 4, 2, &mut rng);
        let other = init_mlp(3, 5, 2, &mut rng);
        let x = DenseMatrix::from_fn(5, 3, |_, _| rng.normal());
        let (_, cache) = mlp_forward_cached(&other, &x).unwrap();
        assert!(matches!(
            mlp_backward(&p, &cache, &DenseMatrix::zeros(5, 2)),
            Err(Error::CacheMismatch(_))
        ));
    }
}
