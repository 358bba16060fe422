use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{l2_distance, Rng};
use crate::theory::{draw_embedding, embedding_expectation, SyntheticSpec};

/// Minimum trial count accepted by [`theorem1_tail_check`].
pub const MIN_TAIL_TRIALS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    /// `2l·exp(−t² / (2σ²·l·deg·γ²))`, uncapped.
    pub bound: f64,
    /// Per class, the share of draws with `‖h − e_c‖ ≥ t`.
    pub empirical: Vec<f64>,
    /// Binomial standard error of each entry of `empirical`.
    pub std_err: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCheckReport {
    pub trials: usize,
    pub rows: Vec<TailRow>,
    /// Largest `‖h − e_c‖` seen over all draws.
    pub max_deviation: f64,
    pub pass: bool,
}

impl TailCheckReport {
    /// `t,bound,class,empirical,std_err,pass` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,bound,class,empirical,std_err,pass\n");
        for row in &self.rows {
            for (c, (p, se)) in row.empirical.iter().zip(&row.std_err).enumerate() {
                out.push_str(&format!(
                    "{},{:e},{c},{},{:e},{}\n",
                    row.t, row.bound, p, se, row.pass
                ));
            }
        }
        out
    }
}

/// The right-hand side exactly as printed, with `deg` (not `deg + 1`).
pub fn tail_bound(spec: &SyntheticSpec, t: f64) -> f64 {
    let l = spec.dim() as f64;
    let g = spec.gamma();
    let denom = 2.0 * spec.sigma * spec.sigma * l * spec.degree as f64 * g * g;
    2.0 * l * (-(t * t) / denom).exp()
}

/// Draws `trials` embeddings per class and compares the tail frequency of
/// `‖h − e_c‖` against [`tail_bound`] at every `t`.
///
/// A row passes iff every class has `P̂ ≤ min(bound, 1) + 3·SE`.
pub fn theorem1_tail_check(
    spec: &SyntheticSpec,
    t_grid: &[f64],
    trials: usize,
    rng: &mut Rng,
) -> Result<TailCheckReport> {
    spec.validate()?;
    if trials < MIN_TAIL_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "tail check needs at least {MIN_TAIL_TRIALS} trials, got {trials}"
        )));
    }
    if t_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidArgument("t grid must be non-negative".into()));
    }
    let classes = spec.num_classes();
    let mut exceed = vec![vec![0usize; classes]; t_grid.len()];
    let mut max_deviation = 0.0f64;
    for c in 0..classes {
        let e = embedding_expectation(spec, c)?;
        let mut sub = rng.split_indexed("tail_class", c as u64);
        for _ in 0..trials {
            let d = l2_distance(&draw_embedding(spec, c, None, &mut sub), &e);
            max_deviation = max_deviation.max(d);
            for (row, &t) in exceed.iter_mut().zip(t_grid) {
                if d >= t {
                    row[c] += 1;
                }
            }
        }
    }
    let n = trials as f64;
    let rows: Vec<TailRow> = t_grid
        .iter()
        .zip(&exceed)
        .map(|(&t, counts)| {
            let bound = tail_bound(spec, t);
            let empirical: Vec<f64> = counts.iter().map(|&k| k as f64 / n).collect();
            let std_err: Vec<f64> = empirical.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
            let pass = empirical
                .iter()
                .zip(&std_err)
                .all(|(p, se)| *p <= bound.min(1.0) + 3.0 * se);
            TailRow {
                t,
                bound,
                empirical,
                std_err,
                pass,
            }
        })
        .collect();
    Ok(TailCheckReport {
        trials,
        pass: rows.iter().all(|r| r.pass),
        rows,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::homophilous_law;

    #[test]
    fn bound_matches_hand_value() {
        let spec = SyntheticSpec::reference();
        // 2σ²·l·deg·γ² = 2·0.25·4·8/81 = 16/81.
        let expected = 8.0 * (-(81.0 / 16.0) * 1.0f64).exp();
        assert!((tail_bound(&spec, 1.0) - expected).abs() < 1e-15);
        assert_eq!(tail_bound(&spec, 0.0), 8.0);
    }

    #[test]
    fn zero_t_is_certain_and_vacuous() {
        let spec = SyntheticSpec::reference();
        let r = theorem1_tail_check(&spec, &[0.0], 10_000, &mut Rng::new(1)).unwrap();
        assert!(r.pass);
        assert!(r.rows[0].empirical.iter().all(|&p| p == 1.0));
        assert!(r.rows[0].bound >= 1.0);
    }

    #[test]
    fn point_mass_world_never_exceeds() {
        let mut spec = SyntheticSpec::reference();
        spec.sigma = 0.0;
        spec.neighbor_law = homophilous_law(3, 1.0);
        let r = theorem1_tail_check(&spec, &[0.1, 0.5], 10_000, &mut Rng::new(2)).unwrap();
        assert!(r.rows.iter().all(|row| row.empirical.iter().all(|&p| p == 0.0)));
        assert!(r.max_deviation < 1e-12);
    }

    #[test]
    fn too_few_trials_rejected() {
        let spec = SyntheticSpec::reference();
        assert!(theorem1_tail_check(&spec, &[0.5], 100, &mut Rng::new(0)).is_err());
        assert!(theorem1_tail_check(&spec, &[-0.5], 10_000, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn csv_has_row_per_class_and_t() {
        let spec = SyntheticSpec::reference();
        let r = theorem1_tail_check(&spec, &[0.5, 1.0], 10_000, &mut Rng::new(4)).unwrap();
        assert_eq!(r.to_csv().lines().count(), 1 + 2 * 3);
    }
}
