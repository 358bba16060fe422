//! Bias-corrected Adam with coupled (L2) weight decay.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::train::ParamSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl AdamConfig {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            weight_decay,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: ParamSet,
    second: ParamSet,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParamSet) -> Self {
        Self {
            config,
            step: 0,
            first: params.zeros_like(),
            second: params.zeros_like(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update. Weight decay enters as `g + λ·w` before the moments.
    pub fn step(&mut self, params: &mut ParamSet, grads: &ParamSet) -> Result<()> {
        params.check_aligned(grads, "adam_step")?;
        params.check_aligned(&self.first, "adam_step")?;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let moments = self.first.iter_mut().zip(self.second.iter_mut());
        for (((_, w), (_, g)), ((_, m), (_, v))) in params.iter_mut().zip(grads.iter()).zip(moments) {
            let w = w.as_mut_slice();
            let m = m.as_mut_slice();
            let v = v.as_mut_slice();
            for k in 0..w.len() {
                let gk = g.as_slice()[k] + weight_decay * w[k];
                m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
                v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                w[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::DenseMatrix;

    fn scalar(v: f64) -> ParamSet {
        ParamSet::new()
            .with("w", DenseMatrix::filled(1, 1, v))
            .unwrap()
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut p = scalar(0.7);
        let mut s = AdamState::new(AdamConfig::default(), &p);
        s.step(&mut p, &scalar(0.0)).unwrap();
        assert_eq!(p.get("w").unwrap().get(0, 0), 0.7);
    }

    #[test]
    fn zero_gradient_with_decay_shrinks() {
        let mut p = scalar(0.7);
        let mut s = AdamState::new(AdamConfig::new(0.01, 0.1), &p);
        s.step(&mut p, &scalar(0.0)).unwrap();
        let w = p.get("w").unwrap().get(0, 0);
        assert!(w < 0.7 && w > 0.68);
    }

    #[test]
    fn first_step_matches_hand_value() {
        // t = 1: m̂ = g, v̂ = g², so Δ = −lr·g/(|g| + ε).
        let mut p = scalar(0.0);
        let mut s = AdamState::new(AdamConfig::default(), &p);
        s.step(&mut p, &scalar(1.0)).unwrap();
        let expected = -0.001 * (1.0 / (1.0 + 1e-8));
        assert!((p.get("w").unwrap().get(0, 0) - expected).abs() < 1e-18);
    }

    #[test]
    fn misaligned_gradients_error() {
        let mut p = scalar(0.0);
        let mut s = AdamState::new(AdamConfig::default(), &p);
        let bad = ParamSet::new()
            .with("w", DenseMatrix::zeros(2, 1))
            .unwrap();
        assert!(s.step(&mut p, &bad).is_err());
    }
}
