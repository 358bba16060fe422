//! Synthetic-world probes for the message-passing concentration results.
//!
//! A node of class `c` gets its own feature from `F_c` and `deg` neighbors
//! whose labels are drawn i.i.d. from `D_c`. Every feature law is a box of
//! half-width `σ` around the class mean, and every edge weight equals
//! `1 / (deg + 1)`. Neighborhoods are sampled per node; no graph is built.

mod lemma2;
mod lipschitz;
mod replacement;
mod tail;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Rng;

pub use lemma2::{lemma2_probe, ElementLaw, Lemma2Instance, Lemma2Report};
pub use lipschitz::{
    lemma3_lipschitz_check, random_input_pairs, LipschitzReport, ReluLayer, ReluMlp,
};
pub use replacement::{
    random_replacement_case, replaced_expectation, theorem2_check, ReplacementCase,
    Theorem2Class, Theorem2Report,
};
pub use tail::{tail_bound, theorem1_tail_check, TailCheckReport, TailRow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// One mean per class, all of length `l`.
    pub means: Vec<Vec<f64>>,
    /// Box half-width of every feature law.
    pub sigma: f64,
    /// Row `c` is `D_c`, the label law of a class-`c` node's neighbors.
    pub neighbor_law: Vec<Vec<f64>>,
    pub degree: usize,
}

impl SyntheticSpec {
    /// Three classes in four dimensions, unit one-hot means, `σ = 0.5`,
    /// eight neighbors, `D_c` putting 0.8 on the own class.
    pub fn reference() -> Self {
        let classes = 3;
        let dim = 4;
        let means = (0..classes)
            .map(|c| (0..dim).map(|k| if k == c { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            means,
            sigma: 0.5,
            neighbor_law: homophilous_law(classes, 0.8),
            degree: 8,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// The uniform edge weight `a_ij`.
    pub fn weight(&self) -> f64 {
        1.0 / (self.degree + 1) as f64
    }

    /// `γ = max a_ij`, equal to [`Self::weight`] here.
    pub fn gamma(&self) -> f64 {
        self.weight()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        let c = self.num_classes();
        if c == 0 || self.dim() == 0 {
            return bad("spec needs at least one class and one dimension".into());
        }
        if self.means.iter().any(|m| m.len() != self.dim()) {
            return bad("class means differ in length".into());
        }
        if self.means.iter().flatten().any(|v| !v.is_finite()) {
            return bad("non-finite class mean".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma {} must be finite and non-negative", self.sigma));
        }
        if self.neighbor_law.len() != c {
            return bad(format!("{} neighbor laws for {c} classes", self.neighbor_law.len()));
        }
        for (k, row) in self.neighbor_law.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.len() != c || row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return bad(format!("neighbor law of class {k} is not a distribution"));
            }
        }
        Ok(())
    }

    fn check_class(&self, class: usize) -> Result<()> {
        self.validate()?;
        if class >= self.num_classes() {
            return Err(Error::InvalidArgument(format!(
                "class {class} of {}",
                self.num_classes()
            )));
        }
        Ok(())
    }

    /// One draw from `F_class`, added to `acc` with weight `w`.
    fn accumulate_feature(&self, class: usize, w: f64, acc: &mut [f64], rng: &mut Rng) {
        for (a, &mu) in acc.iter_mut().zip(&self.means[class]) {
            *a += w * (mu + rng.uniform_range(-self.sigma, self.sigma));
        }
    }
}

/// `D_c` rows with `own` on the diagonal and the rest spread evenly.
pub fn homophilous_law(classes: usize, own: f64) -> Vec<Vec<f64>> {
    let off = if classes > 1 {
        (1.0 - own) / (classes - 1) as f64
    } else {
        0.0
    };
    (0..classes)
        .map(|c| {
            (0..classes)
                .map(|k| match (k == c, classes) {
                    (true, 1) => 1.0,
                    (true, _) => own,
                    (false, _) => off,
                })
                .collect()
        })
        .collect()
}

/// `h = Σ_{j ∈ N(i) ∪ {i}} a_ij x_j` for a fresh node of `class`.
///
/// The self feature comes from `F_class`; each neighbor label from `D_class`.
pub fn sample_node_embedding(spec: &SyntheticSpec, class: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    spec.check_class(class)?;
    Ok(draw_embedding(spec, class, None, rng))
}

/// Shared sampler. With `replace = Some((f, h_star))` a neighbor of class
/// `c'` carries `h_star[c']` with probability `f` instead of a draw from
/// `F_c'`. The self feature is never replaced.
pub(crate) fn draw_embedding(
    spec: &SyntheticSpec,
    class: usize,
    replace: Option<(f64, &[Vec<f64>])>,
    rng: &mut Rng,
) -> Vec<f64> {
    let a = spec.weight();
    let mut h = vec![0.0; spec.dim()];
    spec.accumulate_feature(class, a, &mut h, rng);
    for _ in 0..spec.degree {
        let nb = rng.categorical(&spec.neighbor_law[class]);
        match replace {
            Some((f, stars)) if rng.uniform() < f => {
                for (x, s) in h.iter_mut().zip(&stars[nb]) {
                    *x += a * s;
                }
            }
            _ => spec.accumulate_feature(nb, a, &mut h, rng),
        }
    }
    h
}

/// Closed-form `E[h]` for a node of `class`:
/// `a·μ_c + deg·a·Σ_{c'} D_c[c']·μ_{c'}`.
///
/// The self label is the node's own class, not a draw from `D_c`.
pub fn embedding_expectation(spec: &SyntheticSpec, class: usize) -> Result<Vec<f64>> {
    spec.check_class(class)?;
    Ok(mixture_expectation(spec, class, |c| spec.means[c].clone()))
}

/// `a·μ_class + deg·a·Σ_{c'} D[c']·m(c')` for a per-class neighbor mean `m`.
pub(crate) fn mixture_expectation(
    spec: &SyntheticSpec,
    class: usize,
    neighbor_mean: impl Fn(usize) -> Vec<f64>,
) -> Vec<f64> {
    let a = spec.weight();
    let mut mix = vec![0.0; spec.dim()];
    for (c, &p) in spec.neighbor_law[class].iter().enumerate() {
        for (m, v) in mix.iter_mut().zip(neighbor_mean(c)) {
            *m += p * v;
        }
    }
    let deg_a = spec.degree as f64 * a;
    spec.means[class]
        .iter()
        .zip(&mix)
        .map(|(mu, m)| a * mu + deg_a * m)
        .collect()
}

/// Per-dimension mean and standard error over equally long samples.
pub(crate) fn mean_and_se(samples: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len() as f64;
    let dim = samples.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; dim];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for s in samples {
        for ((acc, v), m) in var.iter_mut().zip(s).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let se = var
        .iter()
        .map(|v| (v / (n - 1.0).max(1.0) / n).sqrt())
        .collect();
    (mean, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_spec_is_valid() {
        let spec = SyntheticSpec::reference();
        spec.validate().unwrap();
        assert_eq!((spec.num_classes(), spec.dim(), spec.degree), (3, 4, 8));
        assert!((spec.gamma() - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = SyntheticSpec::reference();
        s.neighbor_law[1][0] += 0.1;
        assert!(s.validate().is_err());
        let mut s = SyntheticSpec::reference();
        s.sigma = -1.0;
        assert!(s.validate().is_err());
        let mut s = SyntheticSpec::reference();
        s.means[2].pop();
        assert!(s.validate().is_err());
        let s = SyntheticSpec::reference();
        assert!(sample_node_embedding(&s, 3, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn point_mass_pure_neighborhood_lands_on_mean() {
        let mut spec = SyntheticSpec::reference();
        spec.sigma = 0.0;
        spec.neighbor_law = homophilous_law(3, 1.0);
        let mut rng = Rng::new(3);
        for c in 0..3 {
            let h = sample_node_embedding(&spec, c, &mut rng).unwrap();
            for (x, mu) in h.iter().zip(&spec.means[c]) {
                assert!((x - mu).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_degree_is_scaled_self_feature() {
        let mut spec = SyntheticSpec::reference();
        spec.degree = 0;
        let mut a = Rng::new(9);
        let mut b = Rng::new(9);
        let h = sample_node_embedding(&spec, 1, &mut a).unwrap();
        let x: Vec<f64> = spec.means[1]
            .iter()
            .map(|mu| mu + b.uniform_range(-0.5, 0.5))
            .collect();
        assert_eq!(h, x);
        for (v, mu) in h.iter().zip(&spec.means[1]) {
            assert!((v - mu).abs() <= 0.5);
        }
    }

    #[test]
    fn expectation_trivial_cases() {
        let mut spec = SyntheticSpec::reference();
        spec.neighbor_law = homophilous_law(3, 1.0);
        let e = embedding_expectation(&spec, 2).unwrap();
        for (x, mu) in e.iter().zip(&spec.means[2]) {
            assert!((x - mu).abs() < 1e-15);
        }

        // Symmetric means summing to zero under a uniform law leave a·μ_c.
        let spec = SyntheticSpec {
            means: vec![vec![1.0, 0.0], vec![-0.5, 0.75f64.sqrt()], vec![-0.5, -(0.75f64.sqrt())]],
            sigma: 0.1,
            neighbor_law: vec![vec![1.0 / 3.0; 3]; 3],
            degree: 5,
        };
        let e = embedding_expectation(&spec, 1).unwrap();
        for (x, mu) in e.iter().zip(&spec.means[1]) {
            assert!((x - mu / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn monte_carlo_mean_matches_closed_form() {
        let spec = SyntheticSpec {
            means: vec![vec![0.3, -1.0, 2.0], vec![1.5, 0.2, -0.4]],
            sigma: 0.7,
            neighbor_law: vec![vec![0.65, 0.35], vec![0.1, 0.9]],
            degree: 4,
        };
        let mut rng = Rng::new(1);
        for c in 0..2 {
            let draws: Vec<Vec<f64>> = (0..100_000)
                .map(|_| sample_node_embedding(&spec, c, &mut rng).unwrap())
                .collect();
            let (mean, se) = mean_and_se(&draws);
            let e = embedding_expectation(&spec, c).unwrap();
            for k in 0..3 {
                assert!((mean[k] - e[k]).abs() <= 3.0 * se[k], "class {c} dim {k}: {} vs {} se {}", mean[k], e[k], se[k]);
            }
        }
    }

    #[test]
    fn homophilous_law_rows_sum_to_one() {
        for c in 1..6 {
            for row in homophilous_law(c, 0.7) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
