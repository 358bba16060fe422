//! Central-difference verification of analytic gradients.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::tensor::Rng;
use crate::train::ParamSet;

/// Denominator floor for the relative error, so near-zero gradients are
/// compared absolutely.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub probes: usize,
    pub max_rel_err: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
}

/// Compares `analytic` with `(L(θ + h·e) − L(θ − h·e)) / 2h` at `probes`
/// coordinates drawn uniformly over all scalars (every scalar when
/// `probes` exceeds the total). `loss` must be pure.
pub fn finite_diff_check<F>(
    loss: F,
    params: &ParamSet,
    analytic: &ParamSet,
    rng: &mut Rng,
    probes: usize,
    h: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&ParamSet) -> Result<f64>,
{
    params.check_aligned(analytic, "finite_diff_check")?;
    let mut coords: Vec<(usize, usize)> = Vec::new();
    for (p, (_, m)) in params.iter().enumerate() {
        coords.extend((0..m.rows() * m.cols()).map(|k| (p, k)));
    }
    if probes < coords.len() {
        coords = rng.sample(&coords, probes);
    }

    let mut work = params.clone();
    let mut report = GradCheckReport {
        probes: coords.len(),
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
    };
    for (p, k) in coords {
        let original = nth(&work, p).as_slice()[k];
        nth_mut(&mut work, p)[k] = original + h;
        let up = loss(&work)?;
        nth_mut(&mut work, p)[k] = original - h;
        let down = loss(&work)?;
        nth_mut(&mut work, p)[k] = original;

        let numeric = (up - down) / (2.0 * h);
        let exact = nth(analytic, p).as_slice()[k];
        let rel = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(REL_FLOOR);
        if rel > report.max_rel_err || report.worst_param.is_empty() {
            report.max_rel_err = rel;
            report.worst_param = params.names()[p].to_owned();
            report.worst_index = k;
            report.worst_analytic = exact;
            report.worst_numeric = numeric;
        }
    }
    Ok(report)
}

fn nth(p: &ParamSet, i: usize) -> &crate::tensor::DenseMatrix {
    p.iter().nth(i).expect("aligned").1
}

fn nth_mut(p: &mut ParamSet, i: usize) -> &mut [f64] {
    p.iter_mut().nth(i).expect("aligned").1.as_mut_slice()
}
