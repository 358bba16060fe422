//! One function per subcommand. Each writes its files through a [`RunDir`]
//! and finishes with a manifest.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use frgnn_core::metrics::{accuracy, homophily_buckets, pca2d, GebReport};
use frgnn_core::models::{TrainedModel, TrainingCurve};
use frgnn_core::sampler::SplitMasks;
use frgnn_core::tensor::{DenseMatrix, SparseMatrix};
use frgnn_core::train::decode_checkpoint;
use log::info;
use serde_json::json;

use crate::config::{RunConfig, SplitChoice};
use crate::error::{CliError, CliResult};
use crate::experiment::{buckets_csv, fr_rng, make_split, run_matrix, train, Dataset};
use crate::output::{decode_sparse, encode_sparse, Manifest, RunDir};
use crate::svg::{scatter, Point, Role};
use crate::theory::run_suite;

pub const CHECKPOINT: &str = "checkpoint.bin";
pub const SPLIT: &str = "split.json";
pub const X_STAR: &str = "x_star.bin";

fn first_seeds(config: &RunConfig) -> (u64, u64) {
    (config.seeds.split[0], config.seeds.init[0])
}

fn curve_csv(curve: &TrainingCurve) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,val_acc\n");
    for e in &curve.epochs {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.epoch, e.train_loss, e.val_loss, e.val_acc
        ));
    }
    out
}

fn geb_csv(before: &GebReport, after: &GebReport) -> String {
    let mut out = String::from("node,class,distance_before,distance_after\n");
    for (b, a) in before.nodes.iter().zip(&after.nodes) {
        out.push_str(&format!("{},{},{},{}\n", b.node, b.class, b.distance, a.distance));
    }
    out
}

/// Trains one model on the first split and init seed.
pub fn cmd_train(config: &RunConfig, out: &Path) -> CliResult<PathBuf> {
    let data = Dataset::load(config)?;
    let (s, k) = first_seeds(config);
    let split = make_split(&data, config, s)?;
    let (model, curve) = train(&data, config, &split, k)?;
    let test_accuracy = accuracy(&model.forward(&data.x)?.logits, data.labels(), &split.test)?;
    info!("train {} split={s} init={k}: test accuracy {test_accuracy:.4}", data.name());

    let mut run = RunDir::create(out)?;
    run.write(CHECKPOINT, model.checkpoint_bytes())?;
    run.write_json(SPLIT, &split)?;
    run.write("metrics.csv", curve_csv(&curve))?;
    run.finish(
        "train",
        config,
        json!({
            "dataset": data.name(),
            "split_seed": s,
            "init_seed": k,
            "test_accuracy": test_accuracy,
            "best_epoch": curve.best_epoch,
            "epochs_run": curve.epochs.len(),
            "checkpoint_sha256": model.checkpoint_sha256(),
        }),
    )
}

/// Loads the checkpoint and split of a run directory.
fn load_model(run: &Path, config: &RunConfig, data: &Dataset) -> CliResult<(TrainedModel, SplitMasks)> {
    let bytes = std::fs::read(run.join(CHECKPOINT)).map_err(|e| {
        CliError::Usage(format!("{} has no checkpoint: {e}", run.display()))
    })?;
    let params = decode_checkpoint(&bytes)?;
    let model = TrainedModel::from_params(
        config.model_config(),
        data.x.cols(),
        data.num_classes(),
        params,
        Arc::clone(&data.ops),
    )?;
    let text = std::fs::read_to_string(run.join(SPLIT))
        .map_err(|e| CliError::Usage(format!("{} has no split: {e}", run.display())))?;
    let split: SplitMasks = serde_json::from_str(&text)?;
    split.validate(data.bundle.num_nodes())?;
    Ok((model, split))
}

/// Reconstructs features for a trained model: either the one stored in
/// `from_run` or a fresh one trained on the first seeds.
pub fn cmd_fr(config: &RunConfig, from_run: Option<&Path>, out: &Path) -> CliResult<PathBuf> {
    let (config, init_seed) = match from_run {
        Some(run) => {
            let m = Manifest::load(run)?;
            let k = m.config.seeds.init[0];
            (m.config, k)
        }
        None => (config.clone(), config.seeds.init[0]),
    };
    let data = Dataset::load(&config)?;
    let (model, split) = match from_run {
        Some(run) => load_model(run, &config, &data)?,
        None => {
            let split = make_split(&data, &config, config.seeds.split[0])?;
            (train(&data, &config, &split, init_seed)?.0, split)
        }
    };
    let outcome = frgnn_core::fr::run_frgnn(
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
        &outcome.preds_before,
        &outcome.preds_after,
        &split.test,
    )?;
    let r = &outcome.report;
    info!(
        "fr {}: {:.4} -> {:.4}, GEB {:.3} -> {:.3}",
        data.name(),
        r.base_accuracy,
        r.fr_accuracy,
        r.geb_before,
        r.geb_after
    );

    let mut run = RunDir::create(out)?;
    run.write(CHECKPOINT, model.checkpoint_bytes())?;
    run.write_json(SPLIT, &split)?;
    run.write_json("fr_report.json", r)?;
    run.write("geb_report.csv", geb_csv(&outcome.geb_before, &outcome.geb_after))?;
    run.write("buckets.csv", buckets_csv(&buckets))?;
    run.write(
        "metrics.csv",
        format!(
            "base_accuracy,fr_accuracy,geb_before,geb_after,surrogate_correct,num_classes,mlp_final_loss\n{},{},{},{},{},{},{}\n",
            r.base_accuracy,
            r.fr_accuracy,
            r.geb_before,
            r.geb_after,
            r.surrogate_correct,
            data.num_classes(),
            r.mlp_final_loss
        ),
    )?;
    run.write(X_STAR, encode_sparse(&outcome.x_star))?;
    run.finish(
        "fr",
        &config,
        json!({
            "dataset": data.name(),
            "base_accuracy": r.base_accuracy,
            "fr_accuracy": r.fr_accuracy,
            "geb_before": r.geb_before,
            "geb_after": r.geb_after,
            "surrogate_correct": r.surrogate_correct,
            "replaced_nodes": r.replaced_nodes,
            "checkpoint_sha256": r.checkpoint_sha256,
        }),
    )
}

/// Every `(split seed, init seed)` cell, aggregated.
pub fn cmd_matrix(config: &RunConfig, out: &Path) -> CliResult<PathBuf> {
    let data = Dataset::load(config)?;
    let mut run = RunDir::create(out)?;
    let report = run_matrix(&data, config, |c| {
        info!(
            "cell split={} init={}: base {:.4} fr {}",
            c.split_seed,
            c.init_seed,
            c.base_accuracy,
            c.fr.as_ref().map_or("-".to_string(), |f| format!("{:.4}", f.fr_accuracy))
        )
    });
    if report.cells.is_empty() {
        return Err(CliError::from(&report));
    }
    run.write("metrics.csv", report.cells_csv())?;
    run.write("table2.md", report.table2())?;
    if let Some(b) = &report.buckets {
        run.write("buckets.csv", buckets_csv(b))?;
    }
    run.write_json("matrix.json", &report)?;
    run.finish(
        "matrix",
        config,
        json!({
            "dataset": report.dataset,
            "architecture": report.architecture,
            "cells": report.cells.len(),
            "failures": report.failures.len(),
            "base": report.base,
            "fr": report.fr,
            "gain_points": report.gain_points(),
            "geb_reduced_cells": report.geb_reduced_cells,
        }),
    )
}

/// Biased splits for every split seed, one JSON file each.
pub fn cmd_sample_bias(config: &RunConfig, out: &Path) -> CliResult<PathBuf> {
    let mut config = config.clone();
    config.split.kind = SplitChoice::Biased;
    let data = Dataset::load(&config)?;
    let mut run = RunDir::create(out)?;
    let mut files = Vec::new();
    for &s in &config.seeds.split {
        let split = make_split(&data, &config, s)?;
        let name = format!("split_{s}.json");
        run.write_json(&name, &split)?;
        files.push(json!({"seed": s, "file": name, "train": split.train.len(), "val": split.val.len()}));
    }
    run.finish("sample-bias", &config, json!({ "dataset": data.name(), "splits": files }))
}

/// Returns the run directory and whether every asserted check passed.
pub fn cmd_validate_theory(config: &RunConfig, out: &Path) -> CliResult<(PathBuf, bool)> {
    let suite = run_suite(&config.theory)?;
    let pass = suite.pass();
    info!(
        "theory: tail {} (max deviation {:.3}), theorem2 violations {}, lipschitz violations {} (max ratio {})",
        suite.tail.pass,
        suite.tail.max_deviation,
        suite.theorem2_violations,
        suite.lipschitz.violations,
        suite.lipschitz.max_ratio
    );
    let mut run = RunDir::create(out)?;
    run.write("theory_tail.csv", suite.tail.to_csv())?;
    run.write("theory_theorem2.csv", suite.theorem2_csv())?;
    run.write_json("theory_lemma2.json", &suite.lemma2)?;
    run.write_json("theory_lipschitz.json", &suite.lipschitz)?;
    let summary = json!({
        "pass": pass,
        "tail_pass": suite.tail.pass,
        "tail_max_deviation": suite.tail.max_deviation,
        "theorem2_rows": suite.theorem2.len(),
        "theorem2_violations": suite.theorem2_violations,
        "lemma2_rate_m": suite.lemma2.rate_m,
        "lemma2_rate_fraction": suite.lemma2.rate_fraction,
        "lipschitz_violations": suite.lipschitz.violations,
        "lipschitz_max_ratio": suite.lipschitz.max_ratio,
    });
    run.write_json("theory_summary.json", &summary)?;
    Ok((run.finish("validate-theory", config, summary)?, pass))
}

fn roles(split: &SplitMasks, n: usize) -> Vec<Role> {
    let mut r = vec![Role::Other; n];
    for &i in &split.train {
        r[i] = Role::Train;
    }
    for &i in &split.val {
        r[i] = Role::Val;
    }
    for &i in &split.test {
        r[i] = Role::Test;
    }
    r
}

fn role_name(r: Role) -> &'static str {
    match r {
        Role::Train => "train",
        Role::Val => "val",
        Role::Test => "test",
        Role::Other => "other",
    }
}

fn embedding_panel(
    run: &mut RunDir,
    stem: &str,
    title: &str,
    h: &DenseMatrix,
    labels: &[usize],
    roles: &[Role],
) -> CliResult<bool> {
    let pca = pca2d(h)?;
    let mut csv = String::from("node,x,y,label,role\n");
    let mut points = Vec::with_capacity(labels.len());
    for (i, c) in pca.coords.iter().enumerate() {
        csv.push_str(&format!("{i},{},{},{},{}\n", c[0], c[1], labels[i], role_name(roles[i])));
        points.push(Point {
            x: c[0],
            y: c[1],
            class: labels[i],
            role: roles[i],
        });
    }
    run.write(&format!("{stem}_2d.csv"), csv)?;
    run.write(&format!("{stem}.svg"), scatter(title, &points))?;
    Ok(pca.rank_deficient)
}

/// PCA scatter of the model embedding of a run, and of the reconstructed
/// features' embedding when the run holds an `x_star.bin`.
pub fn cmd_export_plots(run_path: &Path, out: &Path) -> CliResult<PathBuf> {
    let manifest = Manifest::load(run_path)?;
    let config = manifest.config;
    let data = Dataset::load(&config)?;
    let (model, split) = load_model(run_path, &config, &data)?;
    let roles = roles(&split, data.bundle.num_nodes());
    let mut run = RunDir::create(out)?;

    let h = model.forward(&data.x)?.embedding.h;
    let title = format!("{} {} embedding (PCA)", data.name(), model.architecture().tag());
    let mut deficient = embedding_panel(&mut run, "embedding", &title, &h, data.labels(), &roles)?;

    let xs = run_path.join(X_STAR);
    let with_fr = xs.exists();
    if with_fr {
        let x_star: SparseMatrix = decode_sparse(&std::fs::read(&xs)?)?;
        let h = model.forward(&x_star)?.embedding.h;
        let title = format!("{title} after reconstruction");
        deficient |= embedding_panel(&mut run, "embedding_fr", &title, &h, data.labels(), &roles)?;
    }
    run.finish(
        "export-plots",
        &config,
        json!({
            "source": run_path.display().to_string(),
            "points": data.bundle.num_nodes(),
            "fr_panel": with_fr,
            "rank_deficient": deficient,
        }),
    )
}
