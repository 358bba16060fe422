//! Train / reconstruct cells and the seed matrix around them.

use std::sync::Arc;

use frgnn_core::bundle::GraphBundle;
use frgnn_core::fr::{run_frgnn, FrOutcome};
use frgnn_core::metrics::{accuracy, homophily_buckets, mean_std, HomophilyBuckets};
use frgnn_core::models::{train_model, GraphOps, TrainedModel, TrainingCurve};
use frgnn_core::sampler::{biased_split, random_split, SplitMasks};
use frgnn_core::tensor::{Rng, SparseMatrix};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SplitChoice};
use crate::error::{CliError, CliResult};

/// A loaded bundle with the model-ready feature matrix and operators.
pub struct Dataset {
    pub bundle: GraphBundle,
    pub x: SparseMatrix,
    pub ops: Arc<GraphOps>,
}

impl Dataset {
    pub fn load(config: &RunConfig) -> CliResult<Self> {
        let bundle = GraphBundle::load(config.require_bundle()?)?;
        let features = if config.data.row_normalize {
            bundle.features.row_normalized()
        } else {
            bundle.features.clone()
        };
        let x = SparseMatrix::from_dense(&features);
        let ops = Arc::new(GraphOps::new(bundle.adjacency.clone())?);
        Ok(Self { bundle, x, ops })
    }

    pub fn name(&self) -> &str {
        &self.bundle.meta.name
    }

    pub fn num_classes(&self) -> usize {
        self.bundle.num_classes()
    }

    pub fn labels(&self) -> &[usize] {
        &self.bundle.labels
    }
}

/// The split for `seed`; the test set is always the canonical one.
pub fn make_split(data: &Dataset, config: &RunConfig, seed: u64) -> CliResult<SplitMasks> {
    let b = &data.bundle;
    let s = &config.split;
    let test = &b.canonical.test;
    let split = match s.kind {
        SplitChoice::Canonical => b.canonical.clone(),
        SplitChoice::Random => {
            random_split(&b.labels, b.num_classes(), test, s.per_class, s.val_size, seed)?
        }
        SplitChoice::Biased => biased_split(
            &b.adjacency,
            &b.labels,
            b.num_classes(),
            test,
            s.per_class,
            s.val_size,
            s.alpha,
            s.eps,
            seed,
        )?,
    };
    for w in &split.provenance.warnings {
        warn!("split seed {seed}: {w}");
    }
    Ok(split)
}

/// The per-cell RNG for model initialization and dropout.
pub fn init_rng(init_seed: u64) -> Rng {
    Rng::new(init_seed).split("train")
}

/// The per-cell RNG for the inverse MLP.
pub fn fr_rng(init_seed: u64) -> Rng {
    Rng::new(init_seed).split("fr")
}

pub fn train(
    data: &Dataset,
    config: &RunConfig,
    split: &SplitMasks,
    init_seed: u64,
) -> CliResult<(TrainedModel, TrainingCurve)> {
    Ok(train_model(
        data.ops.clone(),
        &data.x,
        data.labels(),
        data.num_classes(),
        split,
        &config.model_config(),
        &config.train_config(),
        &init_rng(init_seed),
    )?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub split_seed: u64,
    pub init_seed: u64,
    pub architecture: String,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub base_accuracy: f64,
    pub fr: Option<CellFr>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFr {
    pub fr_accuracy: f64,
    pub geb_before: f64,
    pub geb_after: f64,
    pub surrogate_correct: usize,
    pub num_classes: usize,
    pub mlp_final_loss: f64,
    pub buckets: HomophilyBuckets,
}

impl CellFr {
    pub fn geb_reduced(&self) -> bool {
        self.geb_after <= self.geb_before
    }
}

/// Trains one model and, when `with_fr`, reconstructs features for it.
pub fn run_cell(
    data: &Dataset,
    config: &RunConfig,
    split_seed: u64,
    init_seed: u64,
    with_fr: bool,
) -> CliResult<(CellResult, Option<FrOutcome>)> {
    let split = make_split(data, config, split_seed)?;
    let (model, curve) = train(data, config, &split, init_seed)?;
    let base = model.forward(&data.x)?;
    let base_accuracy = accuracy(&base.logits, data.labels(), &split.test)?;
    let mut cell = CellResult {
        split_seed,
        init_seed,
        architecture: model.architecture().tag().to_string(),
        epochs_run: curve.epochs.len(),
        best_epoch: curve.best_epoch,
        base_accuracy,
        fr: None,
    };
    if !with_fr {
        return Ok((cell, None));
    }
    let out = run_frgnn(
        &model,
        &data.x,
        data.labels(),
        &split,
        &config.fr_config(),
        &fr_rng(init_seed),
    )?;
    let buckets = homophily_buckets(
        &data.bundle.adjacency,
        data.labels(),
        &out.preds_before,
        &out.preds_after,
        &split.test,
    )?;
    cell.fr = Some(CellFr {
        fr_accuracy: out.report.fr_accuracy,
        geb_before: out.report.geb_before,
        geb_after: out.report.geb_after,
        surrogate_correct: out.report.surrogate_correct,
        num_classes: data.num_classes(),
        mlp_final_loss: out.report.mlp_final_loss,
        buckets,
    });
    Ok((cell, Some(out)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub split_seed: u64,
    pub init_seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single cell.
    pub std: f64,
    pub count: usize,
}

impl MeanStd {
    fn of(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        Self {
            mean,
            std,
            count: values.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub dataset: String,
    pub architecture: String,
    pub cells: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
    pub base: MeanStd,
    pub fr: Option<MeanStd>,
    pub geb_reduced_cells: usize,
    pub buckets: Option<HomophilyBuckets>,
}

/// Runs every `(split seed, init seed)` cell in order. Failed cells are
/// recorded and left out of the aggregates. `on_cell` sees each success.
pub fn run_matrix(
    data: &Dataset,
    config: &RunConfig,
    mut on_cell: impl FnMut(&CellResult),
) -> MatrixReport {
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for &s in &config.seeds.split {
        for &k in &config.seeds.init {
            match run_cell(data, config, s, k, config.fr.enabled) {
                Ok((cell, _)) => {
                    on_cell(&cell);
                    cells.push(cell);
                }
                Err(e) => {
                    warn!("cell split={s} init={k} failed: {e}");
                    failures.push(CellFailure {
                        split_seed: s,
                        init_seed: k,
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    let base = MeanStd::of(&cells.iter().map(|c| c.base_accuracy).collect::<Vec<_>>());
    let frs: Vec<&CellFr> = cells.iter().filter_map(|c| c.fr.as_ref()).collect();
    let (fr, buckets) = if frs.is_empty() {
        (None, None)
    } else {
        let mut merged = HomophilyBuckets::default();
        for f in &frs {
            merged.merge(&f.buckets);
        }
        (
            Some(MeanStd::of(&frs.iter().map(|f| f.fr_accuracy).collect::<Vec<_>>())),
            Some(merged),
        )
    };
    let report = MatrixReport {
        dataset: data.name().to_string(),
        architecture: config.model_config().architecture.tag().to_string(),
        geb_reduced_cells: frs.iter().filter(|f| f.geb_reduced()).count(),
        cells,
        failures,
        base,
        fr,
        buckets,
    };
    info!(
        "matrix {} {}: {} cells, base {:.4}",
        report.dataset,
        report.architecture,
        report.cells.len(),
        report.base.mean
    );
    report
}

impl MatrixReport {
    /// `fr_mean − base_mean` in accuracy points (×100).
    pub fn gain_points(&self) -> Option<f64> {
        self.fr.as_ref().map(|f| 100.0 * (f.mean - self.base.mean))
    }

    pub fn cells_csv(&self) -> String {
        let mut out = String::from(
            "split_seed,init_seed,architecture,epochs_run,best_epoch,base_accuracy,fr_accuracy,geb_before,geb_after,geb_reduced,surrogate_correct,mlp_final_loss\n",
        );
        for c in &self.cells {
            let fr = c.fr.as_ref().map_or_else(
                || ",,,,,".to_string(),
                |f| {
                    format!(
                        "{},{},{},{},{},{}",
                        f.fr_accuracy,
                        f.geb_before,
                        f.geb_after,
                        f.geb_reduced(),
                        f.surrogate_correct,
                        f.mlp_final_loss
                    )
                },
            );
            out.push_str(&format!(
                "{},{},{},{},{},{},{fr}\n",
                c.split_seed, c.init_seed, c.architecture, c.epochs_run, c.best_epoch, c.base_accuracy
            ));
        }
        out
    }

    /// Accuracy table with one row per method, in percent.
    pub fn table2(&self) -> String {
        let label = model_label(&self.architecture);
        let fmt = |m: &MeanStd| format!("{:.2} ± {:.2}", 100.0 * m.mean, 100.0 * m.std);
        let mut out = format!("| Method | {} |\n|---|---|\n", self.dataset);
        out.push_str(&format!("| {label} | {} |\n", fmt(&self.base)));
        if let Some(fr) = &self.fr {
            out.push_str(&format!("| FR-{label} | {} |\n", fmt(fr)));
        }
        out.push_str(&format!(
            "\n{} cells ({} failed)",
            self.cells.len(),
            self.failures.len()
        ));
        if self.fr.is_some() {
            out.push_str(&format!(
                "; GEB reduced in {} of {}",
                self.geb_reduced_cells,
                self.cells.len()
            ));
        }
        out.push('\n');
        out
    }
}

pub fn model_label(tag: &str) -> &'static str {
    match tag {
        "gcn" => "GCN",
        "sage_mean" => "GraphSAGE",
        "appnp" => "APPNP",
        _ => "model",
    }
}

/// Rows `bucket,lower,upper,nodes,wrong_before,wrong_after,fixed,broken`.
pub fn buckets_csv(b: &HomophilyBuckets) -> String {
    use frgnn_core::metrics::{BUCKET_EDGES, NUM_BUCKETS};
    let mut out = String::from("bucket,lower,upper,nodes,wrong_before,wrong_after,fixed,broken\n");
    for k in 0..NUM_BUCKETS {
        out.push_str(&format!(
            "{k},{},{},{},{},{},{},{}\n",
            BUCKET_EDGES[k],
            BUCKET_EDGES[k + 1],
            b.nodes[k],
            b.wrong_before[k],
            b.wrong_after[k],
            b.fixed[k],
            b.broken[k]
        ));
    }
    out
}

impl From<&MatrixReport> for CliError {
    fn from(r: &MatrixReport) -> Self {
        CliError::Internal(format!(
            "all {} matrix cells failed; first error: {}",
            r.failures.len(),
            r.failures.first().map_or("none", |f| f.error.as_str())
        ))
    }
}
