use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{l2_distance, l2_norm, Rng};

/// Law of the i.i.d. elements `a_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ElementLaw {
    /// Independent `N(mean_k, std²)` coordinates.
    Gaussian { mean: Vec<f64>, std: f64 },
    /// Independent uniform coordinates on `center_k ± half_width`.
    Box { center: Vec<f64>, half_width: f64 },
}

impl ElementLaw {
    fn dim(&self) -> usize {
        match self {
            Self::Gaussian { mean, .. } => mean.len(),
            Self::Box { center, .. } => center.len(),
        }
    }

    fn draw(&self, rng: &mut Rng) -> Vec<f64> {
        match self {
            Self::Gaussian { mean, std } => mean.iter().map(|m| m + std * rng.normal()).collect(),
            Self::Box { center, half_width } => center
                .iter()
                .map(|c| c + rng.uniform_range(-half_width, *half_width))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Instance {
    /// `‖μ(A) − y‖ − ‖μ(B) − y‖`.
    pub gain: f64,
    /// `‖Σ_kept a_i − (n − m)·μ(A)‖`, the tightest ε meeting the premise.
    pub eps: f64,
    /// `m·‖μ(A) − y‖ − ε`.
    pub rhs_m: f64,
    /// `(m/n)·‖μ(A) − y‖ − ε`.
    pub rhs_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Report {
    pub n: usize,
    pub m: usize,
    pub instances: Vec<Lemma2Instance>,
    /// Share of instances with `gain ≥ rhs_m`.
    pub rate_m: f64,
    /// Share of instances with `gain ≥ rhs_fraction`.
    pub rate_fraction: f64,
}

/// Replaces `m` of `n` sampled elements by `b` and tabulates both readings
/// of the inequality. Nothing is asserted; this is a probe.
pub fn lemma2_probe(
    n: usize,
    m: usize,
    b: &[f64],
    y: &[f64],
    law: &ElementLaw,
    trials: usize,
    rng: &mut Rng,
) -> Result<Lemma2Report> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("need 1 ≤ m ≤ n, got m={m}, n={n}")));
    }
    let dim = law.dim();
    if b.len() != dim || y.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "b and y must have dimension {dim}"
        )));
    }
    let ids: Vec<usize> = (0..n).collect();
    let mut instances = Vec::with_capacity(trials);
    for _ in 0..trials {
        let a: Vec<Vec<f64>> = (0..n).map(|_| law.draw(rng)).collect();
        let mut replaced = vec![false; n];
        for i in rng.sample(&ids, m) {
            replaced[i] = true;
        }
        let mut sum_a = vec![0.0; dim];
        let mut sum_kept = vec![0.0; dim];
        for (ai, &r) in a.iter().zip(&replaced) {
            for k in 0..dim {
                sum_a[k] += ai[k];
                if !r {
                    sum_kept[k] += ai[k];
                }
            }
        }
        let nf = n as f64;
        let mu_a: Vec<f64> = sum_a.iter().map(|s| s / nf).collect();
        let mu_b: Vec<f64> = sum_kept
            .iter()
            .zip(b)
            .map(|(s, bk)| (s + m as f64 * bk) / nf)
            .collect();
        let kept = (n - m) as f64;
        let resid: Vec<f64> = sum_kept.iter().zip(&mu_a).map(|(s, mu)| s - kept * mu).collect();
        let eps = l2_norm(&resid);
        let da = l2_distance(&mu_a, y);
        instances.push(Lemma2Instance {
            gain: da - l2_distance(&mu_b, y),
            eps,
            rhs_m: m as f64 * da - eps,
            rhs_fraction: m as f64 / nf * da - eps,
        });
    }
    let rate = |f: fn(&Lemma2Instance) -> bool| {
        if instances.is_empty() {
            0.0
        } else {
            instances.iter().filter(|i| f(i)).count() as f64 / instances.len() as f64
        }
    };
    Ok(Lemma2Report {
        n,
        m,
        rate_m: rate(|i| i.gain >= i.rhs_m),
        rate_fraction: rate(|i| i.gain >= i.rhs_fraction),
        instances,
    })
}
