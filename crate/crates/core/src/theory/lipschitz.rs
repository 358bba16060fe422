use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::tensor::{l2_distance, spectral_norm, DenseMatrix, Rng};
use crate::train::ParamSet;

/// Slack allowed on top of the product of spectral norms.
pub const LIPSCHITZ_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ReluLayer {
    /// `in × out`, applied as `x·W`.
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

/// Row-vector MLP with a rectifier after every hidden layer and, when
/// `final_relu` is set, after the last one too.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluMlp {
    pub layers: Vec<ReluLayer>,
    pub final_relu: bool,
}

impl ReluMlp {
    /// He-scaled normal weights and normal biases for widths `dims`.
    pub fn random(dims: &[usize], final_relu: bool, rng: &mut Rng) -> Self {
        let layers = dims
            .windows(2)
            .map(|w| {
                let scale = (2.0 / w[0] as f64).sqrt();
                ReluLayer {
                    weight: DenseMatrix::from_fn(w[0], w[1], |_, _| scale * rng.normal()),
                    bias: (0..w[1]).map(|_| 0.1 * rng.normal()).collect(),
                }
            })
            .collect();
        Self { layers, final_relu }
    }

    /// The two-layer `w1, b1, w2, b2` layout used by the inverse MLP.
    pub fn from_params(params: &ParamSet) -> Result<Self> {
        let layer = |w: &str, b: &str| -> Result<ReluLayer> {
            let weight = params.get(w)?.clone();
            let bias = params.get(b)?;
            if bias.rows() != 1 || bias.cols() != weight.cols() {
                return Err(shape("ReluMlp::from_params", format!("{b} is {:?}", bias.shape())));
            }
            Ok(ReluLayer {
                weight,
                bias: bias.row(0).to_vec(),
            })
        };
        let mlp = Self {
            layers: vec![layer("w1", "b1")?, layer("w2", "b2")?],
            final_relu: false,
        };
        mlp.check()?;
        Ok(mlp)
    }

    fn check(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidArgument("MLP without layers".into()));
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].weight.cols() != pair[1].weight.rows() {
                return Err(shape("ReluMlp", format!("layer {i} feeds {} into {}", pair[0].weight.cols(), pair[1].weight.rows())));
            }
        }
        for l in &self.layers {
            if l.bias.len() != l.weight.cols() {
                return Err(shape("ReluMlp", "bias length"));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(shape("ReluMlp::forward", format!("input of {} for {}", x.len(), self.input_dim())));
        }
        let last = self.layers.len() - 1;
        let mut h = x.to_vec();
        for (i, l) in self.layers.iter().enumerate() {
            let mut out = l.bias.clone();
            for (p, &hp) in h.iter().enumerate() {
                if hp != 0.0 {
                    for (o, w) in out.iter_mut().zip(l.weight.row(p)) {
                        *o += hp * w;
                    }
                }
            }
            if i < last || self.final_relu {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            h = out;
        }
        Ok(h)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// `‖W^(l)‖₂` for every layer, last included.
    pub layer_norms: Vec<f64>,
    pub norm_product: f64,
    pub pairs: usize,
    pub violations: usize,
    /// Largest `‖ΔF‖ / (‖Δx‖·∏‖W‖₂)` over pairs with `Δx ≠ 0`.
    pub max_ratio: f64,
}

/// Checks `‖F(x₁) − F(x₂)‖ ≤ ‖x₁ − x₂‖·∏‖W‖₂·(1 + 1e-9)` on every pair.
pub fn lemma3_lipschitz_check(mlp: &ReluMlp, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<LipschitzReport> {
    mlp.check()?;
    let layer_norms = mlp
        .layers
        .iter()
        .map(|l| spectral_norm(&l.weight, 1e-14, 100_000).map(|s| s.value))
        .collect::<Result<Vec<f64>>>()?;
    let norm_product: f64 = layer_norms.iter().product();
    let mut violations = 0;
    let mut max_ratio = 0.0f64;
    for (x1, x2) in pairs {
        let dx = l2_distance(x1, x2);
        let df = l2_distance(&mlp.forward(x1)?, &mlp.forward(x2)?);
        if df > dx * norm_product * (1.0 + LIPSCHITZ_SLACK) {
            violations += 1;
        }
        if dx > 0.0 && norm_product > 0.0 {
            max_ratio = max_ratio.max(df / (dx * norm_product));
        }
    }
    Ok(LipschitzReport {
        layer_norms,
        norm_product,
        pairs: pairs.len(),
        violations,
        max_ratio,
    })
}

/// Normal base points, each paired with a perturbation whose scale is
/// log-uniform over `[1e-3, 10]`. Smaller gaps let cancellation in
/// `F(x₁) − F(x₂)` exceed the 1e-9 slack on tight single-layer cases.
pub fn random_input_pairs(dim: usize, count: usize, rng: &mut Rng) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..count)
        .map(|_| {
            let x1: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
            let scale = 10f64.powf(rng.uniform_range(-3.0, 1.0));
            let x2 = x1.iter().map(|v| v + scale * rng.normal()).collect();
            (x1, x2)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::init_mlp;

    #[test]
    fn identical_inputs_give_zero() {
        let mut rng = Rng::new(1);
        let mlp = ReluMlp::random(&[3, 5, 2], false, &mut rng);
        let x = vec![0.1, -0.4, 2.0];
        let r = lemma3_lipschitz_check(&mlp, &[(x.clone(), x)]).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.max_ratio, 0.0);
    }

    #[test]
    fn doubled_identity_is_tight() {
        let mlp = ReluMlp {
            layers: vec![ReluLayer {
                weight: DenseMatrix::identity(3).scale(2.0),
                bias: vec![0.0; 3],
            }],
            final_relu: false,
        };
        let pairs = random_input_pairs(3, 50, &mut Rng::new(2));
        let r = lemma3_lipschitz_check(&mlp, &pairs).unwrap();
        assert!((r.norm_product - 2.0).abs() < 1e-12);
        assert_eq!(r.violations, 0);
        for (x1, x2) in &pairs {
            let df = l2_distance(&mlp.forward(x1).unwrap(), &mlp.forward(x2).unwrap());
            assert!((df - 2.0 * l2_distance(x1, x2)).abs() <= 1e-12 * df.max(1.0));
        }
        assert!((r.max_ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn forward_matches_hand_computation() {
        let mlp = ReluMlp {
            layers: vec![
                ReluLayer {
                    weight: DenseMatrix::from_rows(&[vec![1.0, -1.0], vec![2.0, 0.5]]).unwrap(),
                    bias: vec![0.0, 0.25],
                },
                ReluLayer {
                    weight: DenseMatrix::from_rows(&[vec![3.0], vec![-2.0]]).unwrap(),
                    bias: vec![1.0],
                },
            ],
            final_relu: false,
        };
        // hidden = relu([1 + 4, -1 + 1 + 0.25]) = [5, 0.25]; out = 15 - 0.5 + 1.
        assert_eq!(mlp.forward(&[1.0, 2.0]).unwrap(), vec![15.5]);
        assert!(mlp.forward(&[1.0]).is_err());
    }

    #[test]
    fn inverse_mlp_layout_round_trips() {
        let mut rng = Rng::new(3);
        let params = init_mlp(4, 6, 3, &mut rng);
        let mlp = ReluMlp::from_params(&params).unwrap();
        assert_eq!(mlp.input_dim(), 4);
        let x = DenseMatrix::from_rows(&[vec![0.2, -0.3, 0.9, 0.0]]).unwrap();
        let want = crate::train::mlp_forward(&params, &x).unwrap();
        let got = mlp.forward(x.row(0)).unwrap();
        for (a, b) in got.iter().zip(want.row(0)) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn random_deep_mlps_obey_bound() {
        let mut rng = Rng::new(4);
        for trial in 0..50 {
            let dims = [5, 8, 7, 3];
            let mlp = ReluMlp::random(&dims, trial % 2 == 0, &mut rng);
            let pairs = random_input_pairs(5, 20, &mut rng);
            let r = lemma3_lipschitz_check(&mlp, &pairs).unwrap();
            assert_eq!(r.violations, 0);
            assert!(r.max_ratio <= 1.0 + LIPSCHITZ_SLACK);
            assert_eq!(r.layer_norms.len(), 3);
        }
    }
}
