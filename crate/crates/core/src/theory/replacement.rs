use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{l2_distance, l2_norm, Rng};
use crate::theory::{draw_embedding, mean_and_se, mixture_expectation, SyntheticSpec};

/// Closed-form expectation after replacement: a class-`c'` neighbor sits at
/// `h_star[c']` with probability `fraction`, else follows `F_c'`.
pub fn replaced_expectation(
    spec: &SyntheticSpec,
    class: usize,
    fraction: f64,
    h_star: &[Vec<f64>],
) -> Result<Vec<f64>> {
    check_inputs(spec, fraction, h_star)?;
    if class >= spec.num_classes() {
        return Err(Error::InvalidArgument(format!("class {class} out of range")));
    }
    Ok(mixture_expectation(spec, class, |c| {
        spec.means[c]
            .iter()
            .zip(&h_star[c])
            .map(|(mu, h)| (1.0 - fraction) * mu + fraction * h)
            .collect()
    }))
}

fn check_inputs(spec: &SyntheticSpec, fraction: f64, h_star: &[Vec<f64>]) -> Result<()> {
    spec.validate()?;
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("fraction {fraction} outside [0, 1]")));
    }
    if h_star.len() != spec.num_classes() || h_star.iter().any(|h| h.len() != spec.dim()) {
        return Err(Error::InvalidArgument(format!(
            "need {} representative rows of length {}",
            spec.num_classes(),
            spec.dim()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Class {
    pub class: usize,
    /// Monte-Carlo `‖e_c − h_c*‖`.
    pub before: f64,
    /// Monte-Carlo `‖e_c* − h_c*‖`.
    pub after: f64,
    /// Standard errors of the two estimates above.
    pub before_se: f64,
    pub after_se: f64,
    pub closed_before: f64,
    pub closed_after: f64,
    /// `after ≤ before + 3·(before_se + after_se)`.
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Report {
    pub fraction: f64,
    pub trials: usize,
    pub classes: Vec<Theorem2Class>,
    pub violations: usize,
}

/// Estimates `e_c` and `e_c*` per class from `trials` draws each and checks
/// that replacement does not move the expectation away from `h_c*`.
pub fn theorem2_check(
    spec: &SyntheticSpec,
    fraction: f64,
    h_star: &[Vec<f64>],
    trials: usize,
    rng: &mut Rng,
) -> Result<Theorem2Report> {
    check_inputs(spec, fraction, h_star)?;
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least two trials".into()));
    }
    let mut classes = Vec::with_capacity(spec.num_classes());
    for c in 0..spec.num_classes() {
        let mut plain = rng.split_indexed("theorem2_plain", c as u64);
        let mut swapped = rng.split_indexed("theorem2_replaced", c as u64);
        let before: Vec<Vec<f64>> = (0..trials)
            .map(|_| draw_embedding(spec, c, None, &mut plain))
            .collect();
        let after: Vec<Vec<f64>> = (0..trials)
            .map(|_| draw_embedding(spec, c, Some((fraction, h_star)), &mut swapped))
            .collect();
        let (mean_b, se_b) = mean_and_se(&before);
        let (mean_a, se_a) = mean_and_se(&after);
        let d_before = l2_distance(&mean_b, &h_star[c]);
        let d_after = l2_distance(&mean_a, &h_star[c]);
        let (before_se, after_se) = (l2_norm(&se_b), l2_norm(&se_a));
        let closed_before = l2_distance(&mixture_expectation(spec, c, |k| spec.means[k].clone()), &h_star[c]);
        let closed_after = l2_distance(&replaced_expectation(spec, c, fraction, h_star)?, &h_star[c]);
        classes.push(Theorem2Class {
            class: c,
            before: d_before,
            after: d_after,
            before_se,
            after_se,
            closed_before,
            closed_after,
            holds: d_after <= d_before + 3.0 * (before_se + after_se),
        });
    }
    Ok(Theorem2Report {
        fraction,
        trials,
        violations: classes.iter().filter(|c| !c.holds).count(),
        classes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplacementCase {
    pub spec: SyntheticSpec,
    pub h_star: Vec<Vec<f64>>,
}

/// A randomized homophilous world with representatives away from the means.
///
/// Means are standard normal; `σ ∈ [0.2, 1)`; `D_c[c] ∈ [0.7, 0.95)` with
/// the remainder split at random; `h_c* = μ_c + δ_c` where `δ_c` has a
/// random direction and length three times the widest pair of means.
pub fn random_replacement_case(classes: usize, dim: usize, degree: usize, rng: &mut Rng) -> ReplacementCase {
    let means: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| rng.normal()).collect())
        .collect();
    let sigma = rng.uniform_range(0.2, 1.0);
    let neighbor_law = (0..classes)
        .map(|c| {
            let own = if classes == 1 { 1.0 } else { rng.uniform_range(0.7, 0.95) };
            let raw: Vec<f64> = (0..classes).map(|k| if k == c { 0.0 } else { rng.uniform() + 1e-3 }).collect();
            let total: f64 = raw.iter().sum();
            raw.iter()
                .enumerate()
                .map(|(k, r)| if k == c { own } else { (1.0 - own) * r / total })
                .collect()
        })
        .collect();
    let mut spread = 0.0f64;
    for a in &means {
        for b in &means {
            spread = spread.max(l2_distance(a, b));
        }
    }
    let length = 3.0 * spread.max(1.0);
    let h_star = means
        .iter()
        .map(|mu| {
            let dir: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
            let norm = l2_norm(&dir).max(f64::MIN_POSITIVE);
            mu.iter().zip(&dir).map(|(m, d)| m + length * d / norm).collect()
        })
        .collect();
    ReplacementCase {
        spec: SyntheticSpec {
            means,
            sigma,
            neighbor_law,
            degree,
        },
        h_star,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{embedding_expectation, homophilous_law};

    #[test]
    fn zero_fraction_leaves_expectation() {
        let spec = SyntheticSpec::reference();
        let h = vec![vec![2.0; 4]; 3];
        for c in 0..3 {
            assert_eq!(
                replaced_expectation(&spec, c, 0.0, &h).unwrap(),
                embedding_expectation(&spec, c).unwrap()
            );
        }
        let r = theorem2_check(&spec, 0.0, &h, 2000, &mut Rng::new(1)).unwrap();
        assert_eq!(r.violations, 0);
        for c in &r.classes {
            assert!((c.closed_after - c.closed_before).abs() < 1e-15);
        }
    }

    #[test]
    fn full_replacement_of_pure_neighborhood() {
        let mut spec = SyntheticSpec::reference();
        spec.neighbor_law = homophilous_law(3, 1.0);
        let h: Vec<Vec<f64>> = (0..3).map(|c| vec![c as f64 - 1.0, 3.0, -2.0, 0.5]).collect();
        for c in 0..3 {
            // a·μ_c + deg·a·h_c*
            let e = replaced_expectation(&spec, c, 1.0, &h).unwrap();
            for k in 0..4 {
                let want = spec.means[c][k] / 9.0 + 8.0 / 9.0 * h[c][k];
                assert!((e[k] - want).abs() < 1e-14);
            }
            let before = l2_distance(&embedding_expectation(&spec, c).unwrap(), &h[c]);
            assert!(l2_distance(&e, &h[c]) < before);
        }
    }

    #[test]
    fn monte_carlo_tracks_closed_form() {
        let mut rng = Rng::new(8);
        let case = random_replacement_case(3, 4, 6, &mut rng);
        case.spec.validate().unwrap();
        let r = theorem2_check(&case.spec, 0.3, &case.h_star, 20_000, &mut rng).unwrap();
        for c in &r.classes {
            assert!((c.after - c.closed_after).abs() <= 4.0 * c.after_se + 1e-12);
            assert!((c.before - c.closed_before).abs() <= 4.0 * c.before_se + 1e-12);
        }
    }

    #[test]
    fn replacement_case_laws_are_distributions() {
        let mut rng = Rng::new(4);
        for classes in 1..5 {
            let case = random_replacement_case(classes, 3, 5, &mut rng);
            case.spec.validate().unwrap();
            for (c, row) in case.spec.neighbor_law.iter().enumerate() {
                assert!(row[c] >= 0.7);
            }
        }
    }

    #[test]
    fn bad_inputs() {
        let spec = SyntheticSpec::reference();
        let h = vec![vec![0.0; 4]; 3];
        assert!(theorem2_check(&spec, 1.5, &h, 10, &mut Rng::new(0)).is_err());
        assert!(theorem2_check(&spec, 0.5, &h[..2], 10, &mut Rng::new(0)).is_err());
        assert!(replaced_expectation(&spec, 3, 0.5, &h).is_err());
    }
}
