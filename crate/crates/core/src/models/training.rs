use std::sync::Arc;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::accuracy;
use crate::models::{backward, forward, init_params, Dropout, GraphOps, ModelConfig, TrainedModel};
use crate::sampler::SplitMasks;
use crate::tensor::{Rng, SparseMatrix};
use crate::train::{softmax_cross_entropy, AdamConfig, AdamState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    /// Return the best-validation parameters instead of the last ones.
    pub restore_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            weight_decay: 5e-4,
            epochs: 200,
            patience: 20,
            restore_best: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
}

/// Full-batch training with cross-entropy on `split.train`.
///
/// After every step the model is evaluated without dropout on `split.val`.
/// The kept parameters are those of the best validation accuracy, ties
/// going to lower validation loss. Patience resets whenever that best
/// changes or the validation loss reaches a new minimum. With an empty
/// validation set the last epoch is returned.
#[allow(clippy::too_many_arguments)]
pub fn train_model(
    ops: Arc<GraphOps>,
    x: &SparseMatrix,
    labels: &[usize],
    num_classes: usize,
    split: &SplitMasks,
    model: &ModelConfig,
    config: &TrainConfig,
    rng: &Rng,
) -> Result<(TrainedModel, TrainingCurve)> {
    if split.train.is_empty() {
        return Err(Error::EmptyMask("train_model"));
    }
    split.validate(ops.num_nodes())?;
    let mut params = init_params(model, x.cols(), num_classes, &mut rng.split("init"));
    let mut drop_rng = rng.split("dropout");
    let mut adam = AdamState::new(AdamConfig::new(config.lr, config.weight_decay), &params);

    let mut best = params.clone();
    let mut best_key = (f64::NEG_INFINITY, f64::INFINITY);
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut best_loss = f64::INFINITY;
    let mut epochs = Vec::new();
    for epoch in 1..=config.epochs {
        let dropout = (model.dropout > 0.0).then(|| Dropout {
            rate: model.dropout,
            rng: &mut drop_rng,
        });
        let (out, cache) = forward(model, &params, &ops, x, dropout)?;
        let (train_loss, upstream) = softmax_cross_entropy(&out.logits, labels, &split.train)?;
        if !train_loss.is_finite() {
            return Err(Error::NonFinite {
                stage: "train_model",
                epoch,
                loss: train_loss,
            });
        }
        let grads = backward(model, &params, &ops, &cache, &upstream)?;
        adam.step(&mut params, &grads)?;

        if split.val.is_empty() {
            epochs.push(EpochRecord {
                epoch,
                train_loss,
                val_loss: f64::NAN,
                val_acc: f64::NAN,
            });
            best = params.clone();
            best_epoch = epoch;
            continue;
        }
        let (eval, _) = forward(model, &params, &ops, x, None)?;
        let (val_loss, _) = softmax_cross_entropy(&eval.logits, labels, &split.val)?;
        let val_acc = accuracy(&eval.logits, labels, &split.val)?;
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_acc,
        });
        let improved_loss = val_loss < best_loss;
        best_loss = best_loss.min(val_loss);
        if val_acc > best_key.0 || (val_acc == best_key.0 && val_loss < best_key.1) {
            best_key = (val_acc, val_loss);
            best = params.clone();
            best_epoch = epoch;
            stale = 0;
        } else if improved_loss {
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                debug!("early stop at epoch {epoch}, best {best_epoch}");
                break;
            }
        }
    }
    let best_val_acc = if split.val.is_empty() { f64::NAN } else { best_key.0 };
    let best = if config.restore_best { best } else { params };
    let trained = TrainedModel::from_params(model.clone(), x.cols(), num_classes, best, ops)?;
    Ok((
        trained,
        TrainingCurve {
            epochs,
            best_epoch,
            best_val_acc,
        },
    ))
}
