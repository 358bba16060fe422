//! The synthetic-world suite behind `validate-theory`.

use frgnn_core::tensor::Rng;
use frgnn_core::theory::{
    lemma2_probe, lemma3_lipschitz_check, random_input_pairs, random_replacement_case,
    theorem1_tail_check, theorem2_check, ElementLaw, ReluMlp, SyntheticSpec, TailCheckReport,
};
use serde::{Deserialize, Serialize};

use crate::config::TheorySection;
use crate::error::CliResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Row {
    pub spec: usize,
    pub fraction: f64,
    pub class: usize,
    pub before: f64,
    pub after: f64,
    pub before_se: f64,
    pub after_se: f64,
    pub closed_before: f64,
    pub closed_after: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Summary {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub rate_m: f64,
    pub rate_fraction: f64,
    pub mean_gain: f64,
    pub mean_eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSummary {
    pub trials: usize,
    pub violations: usize,
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheorySuite {
    pub tail: TailCheckReport,
    pub theorem2: Vec<Theorem2Row>,
    pub theorem2_violations: usize,
    pub lemma2: Lemma2Summary,
    pub lipschitz: LipschitzSummary,
}

impl TheorySuite {
    /// The asserted checks; the Lemma 2 probe is informational.
    pub fn pass(&self) -> bool {
        self.tail.pass && self.theorem2_violations == 0 && self.lipschitz.violations == 0
    }

    pub fn theorem2_csv(&self) -> String {
        let mut out = String::from(
            "spec,fraction,class,before,after,before_se,after_se,closed_before,closed_after,holds\n",
        );
        for r in &self.theorem2 {
            out.push_str(&format!(
                "{},{},{},{},{},{:e},{:e},{},{},{}\n",
                r.spec,
                r.fraction,
                r.class,
                r.before,
                r.after,
                r.before_se,
                r.after_se,
                r.closed_before,
                r.closed_after,
                r.holds
            ));
        }
        out
    }
}

pub fn tail_check(section: &TheorySection) -> CliResult<TailCheckReport> {
    let mut rng = Rng::new(section.seed).split("theorem1");
    Ok(theorem1_tail_check(
        &SyntheticSpec::reference(),
        &section.t_grid,
        section.tail_trials,
        &mut rng,
    )?)
}

/// Three classes, four dimensions, eight neighbors per world.
pub fn theorem2_rows(section: &TheorySection) -> CliResult<Vec<Theorem2Row>> {
    let root = Rng::new(section.seed).split("theorem2");
    let mut rows = Vec::new();
    for i in 0..section.theorem2_specs {
        let case = random_replacement_case(3, 4, 8, &mut root.split_indexed("world", i as u64));
        for (fi, &f) in section.theorem2_fractions.iter().enumerate() {
            let mut mc = root.split_indexed("mc", (i * 1000 + fi) as u64);
            let r = theorem2_check(&case.spec, f, &case.h_star, section.theorem2_trials, &mut mc)?;
            rows.extend(r.classes.iter().map(|c| Theorem2Row {
                spec: i,
                fraction: f,
                class: c.class,
                before: c.before,
                after: c.after,
                before_se: c.before_se,
                after_se: c.after_se,
                closed_before: c.closed_before,
                closed_after: c.closed_after,
                holds: c.holds,
            }));
        }
    }
    Ok(rows)
}

/// Standard normal elements in four dimensions, replaced by the target.
pub fn lemma2_summary(section: &TheorySection) -> CliResult<Lemma2Summary> {
    let mut rng = Rng::new(section.seed).split("lemma2");
    let target = [1.0; 4];
    let law = ElementLaw::Gaussian {
        mean: vec![0.0; 4],
        std: 1.0,
    };
    let r = lemma2_probe(
        section.lemma2_n,
        section.lemma2_m,
        &target,
        &target,
        &law,
        section.lemma2_trials,
        &mut rng,
    )?;
    let n = r.instances.len().max(1) as f64;
    Ok(Lemma2Summary {
        n: r.n,
        m: r.m,
        trials: r.instances.len(),
        rate_m: r.rate_m,
        rate_fraction: r.rate_fraction,
        mean_gain: r.instances.iter().map(|i| i.gain).sum::<f64>() / n,
        mean_eps: r.instances.iter().map(|i| i.eps).sum::<f64>() / n,
    })
}

/// One random MLP (1–3 layers, widths 1–16) and one input pair per trial.
pub fn lipschitz_summary(section: &TheorySection) -> CliResult<LipschitzSummary> {
    let root = Rng::new(section.seed).split("lemma3");
    let mut violations = 0;
    let mut max_ratio = 0.0f64;
    for i in 0..section.lipschitz_trials {
        let mut rng = root.split_indexed("trial", i as u64);
        let depth = 1 + rng.index(3);
        let dims: Vec<usize> = (0..=depth).map(|_| 1 + rng.index(16)).collect();
        let final_relu = rng.uniform() < 0.5;
        let mlp = ReluMlp::random(&dims, final_relu, &mut rng);
        let pairs = random_input_pairs(dims[0], 1, &mut rng);
        let r = lemma3_lipschitz_check(&mlp, &pairs)?;
        violations += r.violations;
        max_ratio = max_ratio.max(r.max_ratio);
    }
    Ok(LipschitzSummary {
        trials: section.lipschitz_trials,
        violations,
        max_ratio,
    })
}

pub fn run_suite(section: &TheorySection) -> CliResult<TheorySuite> {
    let tail = tail_check(section)?;
    let theorem2 = theorem2_rows(section)?;
    Ok(TheorySuite {
        tail,
        theorem2_violations: theorem2.iter().filter(|r| !r.holds).count(),
        theorem2,
        lemma2: lemma2_summary(section)?,
        lipschitz: lipschitz_summary(section)?,
    })
}
