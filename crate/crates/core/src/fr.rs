//! Test-time feature reconstruction for a frozen model.
//!
//! 1. `Ŷ = softmax(F(X, A))` for every node.
//! 2. Fit an inverse MLP `M: Ŷ ↦ X` by half squared error over all nodes.
//! 3. `x_c* = M(e_c)` for each class one-hot `e_c`.
//! 4. Replace the features of train ∪ val nodes by `x_c*` of their label.
//! 5. Re-run the frozen model on the reconstructed features.

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::metrics::{accuracy, geb, GebReport};
use crate::models::TrainedModel;
use crate::sampler::SplitMasks;
use crate::tensor::{argmax, l2_norm, DenseMatrix, Rng, SparseMatrix};
use crate::train::{
    init_mlp, mlp_forward, relu_backward, AdamConfig, AdamState, ParamSet,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseMlpConfig {
    pub hidden: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
}

impl Default for InverseMlpConfig {
    fn default() -> Self {
        Self {
            hidden: 256,
            lr: 0.001,
            weight_decay: 0.0005,
            epochs: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrConfig {
    pub mlp: InverseMlpConfig,
    /// Largest `‖softmax(C(x_c*)) − e_c‖₂` counted as representative.
    pub surrogate_eps: f64,
}

impl Default for FrConfig {
    fn default() -> Self {
        Self {
            mlp: InverseMlpConfig::default(),
            surrogate_eps: 0.3,
        }
    }
}

/// Row-stochastic model predictions, one row per node.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionTable(pub DenseMatrix);

pub fn predict_all(model: &TrainedModel, x: &SparseMatrix) -> Result<PredictionTable> {
    Ok(PredictionTable(model.forward(x)?.logits.softmax_rows()))
}

/// Inverse-MLP objective `½‖M(Ŷ) − X‖² / rows` and its gradients.
///
/// Never forms the `rows × feature_dim` prediction: with `H` the hidden
/// activations and `P = H·W2 + 1·b2`, every term is expanded through
/// `HᵀH`, `W2·W2ᵀ`, `HᵀX` and `X·W2ᵀ`, and `X` enters only through
/// sparse products.
pub struct InverseObjective<'a> {
    input: &'a DenseMatrix,
    target: &'a SparseMatrix,
    target_col_sums: DenseMatrix,
    target_sq: f64,
}

impl<'a> InverseObjective<'a> {
    pub fn new(input: &'a DenseMatrix, target: &'a SparseMatrix) -> Result<Self> {
        if input.rows() != target.rows() {
            return Err(shape(
                "inverse_mlp",
                format!("{} prediction rows vs {} feature rows", input.rows(), target.rows()),
            ));
        }
        if input.rows() == 0 {
            return Err(Error::EmptyMask("inverse_mlp"));
        }
        Ok(Self {
            input,
            target,
            target_col_sums: target.col_sums(),
            target_sq: target.squared_norm(),
        })
    }

    pub fn loss_and_grad(&self, params: &ParamSet) -> Result<(f64, ParamSet)> {
        let (w1, b1, w2, b2) = (
            params.get("w1")?,
            params.get("b1")?,
            params.get("w2")?,
            params.get("b2")?,
        );
        if self.input.cols() != w1.rows() || w2.cols() != self.target.cols() {
            return Err(shape("inverse_mlp", "parameters do not fit the data"));
        }
        let n = self.input.rows() as f64;
        let mut pre = self.input.matmul(w1)?;
        pre.add_row_broadcast(b1)?;
        let h = pre.relu();

        let hth = h.t_matmul(&h)?;
        let h_sums = h.col_sums();
        let xth = self.target.t_matmul(&h)?;
        let w2w2t = w2.matmul_t(w2)?;
        let w2b2 = w2.matmul_t(b2)?;
        let b2b2 = l2_norm(b2.as_slice()).powi(2);

        let quad = frobenius_dot(&hth, &w2w2t);
        let cross_b = dot(h_sums.as_slice(), w2b2.as_slice());
        let cross_x = frobenius_dot(&xth.transpose(), w2);
        let cross_xb = dot(b2.as_slice(), self.target_col_sums.as_slice());
        let sq = quad + 2.0 * cross_b + n * b2b2 - 2.0 * cross_x - 2.0 * cross_xb + self.target_sq;
        let loss = 0.5 * sq.max(0.0) / n;

        // ∂/∂W2 = Hᵀ(P − X)/n, ∂/∂b2 = 1ᵀ(P − X)/n.
        let mut d_w2 = hth.matmul(w2)?;
        d_w2.axpy(1.0, &h_sums.t_matmul(b2)?)?;
        d_w2.axpy(-1.0, &xth.transpose())?;
        let d_w2 = d_w2.scale(1.0 / n);
        let mut d_b2 = h_sums.matmul(w2)?;
        d_b2.axpy(n, b2)?;
        d_b2.axpy(-1.0, &self.target_col_sums)?;
        let d_b2 = d_b2.scale(1.0 / n);

        // ∂/∂H = (P − X)W2ᵀ/n = (H·W2W2ᵀ + 1·(W2b2)ᵀ − X·W2ᵀ)/n.
        let mut d_h = h.matmul(&w2w2t)?;
        d_h.add_row_broadcast(&w2b2.transpose())?;
        d_h.axpy(-1.0, &self.target.matmul(&w2.transpose())?)?;
        let d_pre = relu_backward(&pre, &d_h.scale(1.0 / n));
        let d_w1 = self.input.t_matmul(&d_pre)?;
        let d_b1 = d_pre.col_sums();
        let grads = ParamSet::new()
            .with("w1", d_w1)?
            .with("b1", d_b1)?
            .with("w2", d_w2)?
            .with("b2", d_b2)?;
        Ok((loss, grads))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn frobenius_dot(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    dot(a.as_slice(), b.as_slice())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseFit {
    /// Loss before each update.
    pub losses: Vec<f64>,
    pub final_loss: f64,
}

/// Full-batch Adam on the inverse objective over all nodes.
pub fn fit_inverse_mlp(
    predictions: &PredictionTable,
    x: &SparseMatrix,
    config: &InverseMlpConfig,
    rng: &Rng,
) -> Result<(ParamSet, InverseFit)> {
    let yhat = &predictions.0;
    let objective = InverseObjective::new(yhat, x)?;
    let mut params = init_mlp(yhat.cols(), config.hidden, x.cols(), &mut rng.split("init"));
    let mut adam = AdamState::new(AdamConfig::new(config.lr, config.weight_decay), &params);
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let (loss, grads) = objective.loss_and_grad(&params)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                stage: "fit_inverse_mlp",
                epoch,
                loss,
            });
        }
        losses.push(loss);
        adam.step(&mut params, &grads)?;
    }
    let (final_loss, _) = objective.loss_and_grad(&params)?;
    if !final_loss.is_finite() {
        return Err(Error::NonFinite {
            stage: "fit_inverse_mlp",
            epoch: config.epochs,
            loss: final_loss,
        });
    }
    Ok((params, InverseFit { losses, final_loss }))
}

/// Row `c` is the inverse MLP applied to the one-hot of class `c`.
pub fn class_representative_embeddings(params: &ParamSet, classes: usize) -> Result<DenseMatrix> {
    let w1 = params.get("w1")?;
    if w1.rows() != classes {
        return Err(shape(
            "class_representative_embeddings",
            format!("MLP input {} for {classes} classes", w1.rows()),
        ));
    }
    mlp_forward(params, &DenseMatrix::identity(classes))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult {
    pub x_star: SparseMatrix,
    /// Sorted.
    pub replaced: Vec<usize>,
}

/// `X*[i] = table[labels[i]]` for `i` in `labeled`, otherwise `X[i]`.
pub fn reconstruct_features(
    x: &SparseMatrix,
    table: &DenseMatrix,
    labeled: &[usize],
    labels: &[usize],
) -> Result<ReconstructionResult> {
    if table.cols() != x.cols() {
        return Err(shape(
            "reconstruct_features",
            format!("table {:?} for features {:?}", table.shape(), x.shape()),
        ));
    }
    let mut class_of: Vec<Option<usize>> = vec![None; x.rows()];
    for &i in labeled {
        if i >= x.rows() {
            return Err(shape("reconstruct_features", format!("node {i} out of range")));
        }
        let y = *labels.get(i).ok_or(Error::MissingLabel(i))?;
        if y >= table.rows() {
            return Err(Error::MissingLabel(i));
        }
        class_of[i] = Some(y);
    }
    let x_star = x.with_rows_replaced(|i| class_of[i].map(|c| table.row(c)))?;
    let replaced = (0..x.rows()).filter(|&i| class_of[i].is_some()).collect();
    Ok(ReconstructionResult { x_star, replaced })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateCheck {
    pub class: usize,
    pub argmax: usize,
    pub confidence: f64,
    /// `‖softmax(C(x_c*)) − e_c‖₂`.
    pub distance: f64,
    pub within_eps: bool,
}

pub fn surrogate_checks(
    model: &TrainedModel,
    table: &DenseMatrix,
    eps: f64,
) -> Result<Vec<SurrogateCheck>> {
    let probs = model.surrogate(table)?.softmax_rows();
    Ok((0..table.rows())
        .map(|c| {
            let p = probs.row(c);
            let distance = p
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let d = v - if k == c { 1.0 } else { 0.0 };
                    d * d
                })
                .sum::<f64>()
                .sqrt();
            SurrogateCheck {
                class: c,
                argmax: argmax(p),
                confidence: p[c],
                distance,
                within_eps: distance <= eps,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrReport {
    pub architecture: String,
    pub checkpoint_sha256: String,
    pub base_accuracy: f64,
    pub fr_accuracy: f64,
    pub geb_before: f64,
    pub geb_after: f64,
    pub replaced_nodes: usize,
    pub mlp_final_loss: f64,
    pub mlp_losses: Vec<f64>,
    pub surrogate: Vec<SurrogateCheck>,
    pub surrogate_correct: usize,
    pub class_embeddings: DenseMatrix,
}

impl FrReport {
    pub fn geb_reduced(&self) -> bool {
        self.geb_after <= self.geb_before
    }
}

/// Everything produced by one pipeline run.
#[derive(Clone, Debug)]
pub struct FrOutcome {
    pub report: FrReport,
    pub x_star: SparseMatrix,
    pub geb_before: GebReport,
    pub geb_after: GebReport,
    pub preds_before: Vec<usize>,
    pub preds_after: Vec<usize>,
    pub embedding_before: DenseMatrix,
    pub embedding_after: DenseMatrix,
}

/// Runs the five stages; the model's checkpoint hash is verified to be
/// unchanged at the end.
pub fn run_frgnn(
    model: &TrainedModel,
    x: &SparseMatrix,
    labels: &[usize],
    split: &SplitMasks,
    config: &FrConfig,
    rng: &Rng,
) -> Result<FrOutcome> {
    let hash = model.checkpoint_sha256();
    let classes = model.num_classes();
    let base = model.forward(x)?;
    let predictions = PredictionTable(base.logits.softmax_rows());
    let (theta, fit) = fit_inverse_mlp(&predictions, x, &config.mlp, &rng.split("inverse_mlp"))?;
    let table = class_representative_embeddings(&theta, classes)?;
    let recon = reconstruct_features(x, &table, &split.labeled(), labels)?;
    let after = model.forward(&recon.x_star)?;

    let base_accuracy = accuracy(&base.logits, labels, &split.test)?;
    let fr_accuracy = accuracy(&after.logits, labels, &split.test)?;
    let h = &base.embedding.h;
    let geb_before = geb(h, h, labels, classes, &split.test, &split.train)?;
    let geb_after = geb(&after.embedding.h, h, labels, classes, &split.test, &split.train)?;
    let surrogate = surrogate_checks(model, &table, config.surrogate_eps)?;
    let surrogate_correct = surrogate.iter().filter(|s| s.argmax == s.class).count();

    if model.checkpoint_sha256() != hash {
        return Err(Error::InvalidArgument("model parameters changed during FR".into()));
    }
    info!(
        "fr {}: base {base_accuracy:.4} fr {fr_accuracy:.4} geb {:.3} -> {:.3}",
        model.architecture().tag(),
        geb_before.total,
        geb_after.total
    );
    Ok(FrOutcome {
        report: FrReport {
            architecture: model.architecture().tag().to_owned(),
            checkpoint_sha256: hash,
            base_accuracy,
            fr_accuracy,
            geb_before: geb_before.total,
            geb_after: geb_after.total,
            replaced_nodes: recon.replaced.len(),
            mlp_final_loss: fit.final_loss,
            mlp_losses: fit.losses,
            surrogate,
            surrogate_correct,
            class_embeddings: table,
        },
        x_star: recon.x_star,
        geb_before,
        geb_after,
        preds_before: base.logits.argmax_rows(),
        preds_after: after.logits.argmax_rows(),
        embedding_before: base.embedding.h,
        embedding_after: after.embedding.h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::{finite_diff_check, mlp_backward, mlp_forward_cached, mse_loss};

    fn instance(seed: u64) -> (DenseMatrix, SparseMatrix, ParamSet) {
        let mut rng = Rng::new(seed);
        let yhat = DenseMatrix::from_fn(25, 4, |_, _| rng.normal()).softmax_rows();
        let x = DenseMatrix::from_fn(25, 30, |_, _| {
            if rng.uniform() < 0.2 {
                rng.uniform()
            } else {
                0.0
            }
        });
        let mut p = init_mlp(4, 8, 30, &mut rng);
        for (_, m) in p.iter_mut() {
            for v in m.as_mut_slice() {
                *v = rng.uniform_range(-0.7, 0.7);
            }
        }
        (yhat, SparseMatrix::from_dense(&x), p)
    }

    #[test]
    fn gram_objective_matches_direct_backprop() {
        for seed in 0..4 {
            let (yhat, x, p) = instance(seed);
            let (loss, grads) = InverseObjective::new(&yhat, &x).unwrap().loss_and_grad(&p).unwrap();
            let (out, cache) = mlp_forward_cached(&p, &yhat).unwrap();
            let (direct_loss, up) = mse_loss(&out, &x.to_dense()).unwrap();
            let direct = mlp_backward(&p, &cache, &up).unwrap();
            assert!((loss - direct_loss).abs() <= 1e-12 * direct_loss.max(1.0));
            for ((name, a), (_, b)) in grads.iter().zip(direct.iter()) {
                let err = a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(1e-12);
                assert!(err < 1e-11, "{name}: {err}");
            }
        }
    }

    #[test]
    fn gram_objective_passes_finite_differences() {
        let (yhat, x, p) = instance(9);
        let obj = InverseObjective::new(&yhat, &x).unwrap();
        let (_, grads) = obj.loss_and_grad(&p).unwrap();
        let r = finite_diff_check(
            |q| Ok(obj.loss_and_grad(q)?.0),
            &p,
            &grads,
            &mut Rng::new(1),
            2000,
            1e-5,
        )
        .unwrap();
        assert!(r.max_rel_err < 1e-4, "{r:?}");
    }

    #[test]
    fn zero_mlp_gives_bias_rows() {
        let p = ParamSet::new()
            .with("w1", DenseMatrix::zeros(3, 4))
            .unwrap()
            .with("b1", DenseMatrix::zeros(1, 4))
            .unwrap()
            .with("w2", DenseMatrix::zeros(4, 2))
            .unwrap()
            .with("b2", DenseMatrix::from_rows(&[vec![0.5, -1.0]]).unwrap())
            .unwrap();
        let t = class_representative_embeddings(&p, 3).unwrap();
        for c in 0..3 {
            assert_eq!(t.row(c), &[0.5, -1.0]);
        }
        assert!(class_representative_embeddings(&p, 4).is_err());
    }

    #[test]
    fn reconstruction_trivial_cases() {
        let x = SparseMatrix::from_dense(&DenseMatrix::from_fn(4, 3, |i, j| (i * j) as f64));
        let table = DenseMatrix::from_rows(&[vec![9.0, 8.0, 7.0], vec![1.0, 0.0, 1.0]]).unwrap();
        let labels = [0, 1, 0, 0];
        let same = reconstruct_features(&x, &table, &[], &labels).unwrap();
        assert_eq!(same.x_star, x);
        let all = reconstruct_features(&x, &table, &[0, 2, 3], &[0, 0, 0, 0]).unwrap();
        let dense = all.x_star.to_dense();
        assert_eq!(dense.row(0), table.row(0));
        assert_eq!(dense.row(1), x.to_dense().row(1));
        assert_eq!(dense.row(3), table.row(0));
        assert_eq!(all.replaced, vec![0, 2, 3]);
        assert!(matches!(
            reconstruct_features(&x, &table, &[1], &[0]),
            Err(Error::MissingLabel(1))
        ));
    }

    #[test]
    fn constant_targets_are_learned_through_the_bias() {
        let mut rng = Rng::new(3);
        let yhat = DenseMatrix::from_fn(40, 3, |_, _| rng.normal()).softmax_rows();
        let x = SparseMatrix::from_dense(&DenseMatrix::filled(40, 5, 0.4));
        let cfg = InverseMlpConfig {
            hidden: 16,
            lr: 0.05,
            epochs: 300,
            weight_decay: 0.0,
        };
        let (_, fit) = fit_inverse_mlp(&PredictionTable(yhat), &x, &cfg, &rng).unwrap();
        assert!(fit.final_loss / 5.0 < 1e-3, "{}", fit.final_loss);
    }

    #[test]
    fn linear_generator_is_recovered() {
        // X = onehot(y)·G with near one-hot predictions: x_c* ≈ row c of G.
        let mut rng = Rng::new(4);
        let classes = 3;
        let g = DenseMatrix::from_fn(classes, 6, |_, _| rng.uniform());
        let labels: Vec<usize> = (0..90).map(|i| i % classes).collect();
        let onehot = DenseMatrix::from_fn(90, classes, |i, c| (labels[i] == c) as u8 as f64);
        let x = SparseMatrix::from_dense(&onehot.matmul(&g).unwrap());
        let yhat = onehot.scale(20.0).softmax_rows();
        let cfg = InverseMlpConfig {
            hidden: 32,
            lr: 0.01,
            epochs: 3000,
            weight_decay: 0.0,
        };
        let (theta, _) = fit_inverse_mlp(&PredictionTable(yhat), &x, &cfg, &rng).unwrap();
        let table = class_representative_embeddings(&theta, classes).unwrap();
        for c in 0..classes {
            let d = crate::tensor::l2_distance(table.row(c), g.row(c));
            assert!(d < 1e-2, "class {c}: {d}");
        }
    }

    #[test]
    fn identical_predictions_give_identical_outputs() {
        let (mut yhat, x, _) = instance(2);
        let copy = yhat.row(0).to_vec();
        yhat.row_mut(1).copy_from_slice(&copy);
        let cfg = InverseMlpConfig {
            hidden: 8,
            epochs: 5,
            ..InverseMlpConfig::default()
        };
        let (theta, _) = fit_inverse_mlp(&PredictionTable(yhat.clone()), &x, &cfg, &Rng::new(0)).unwrap();
        let out = mlp_forward(&theta, &yhat).unwrap();
        assert_eq!(out.row(0), out.row(1));
    }
}
