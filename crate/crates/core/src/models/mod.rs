//! Base node classifiers: GCN, GraphSAGE-mean and APPNP.
//!
//! Each architecture exposes logits, the embedding right before its final
//! linear classifier, a propagation-free surrogate classifier and a
//! hand-derived backward pass.

mod appnp;
mod gcn;
mod sage;
mod training;

pub use training::{train_model, EpochRecord, TrainConfig, TrainingCurve};

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{shape, Error, Result};
use crate::tensor::{DenseMatrix, GraphCsr, Rng, SparseMatrix};
use crate::train::{dropout_mask, encode_checkpoint, init_mlp, ParamSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Gcn,
    SageMean,
    Appnp,
}

impl Architecture {
    pub fn tag(self) -> &'static str {
        match self {
            Self::Gcn => "gcn",
            Self::SageMean => "sage_mean",
            Self::Appnp => "appnp",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "gcn" => Ok(Self::Gcn),
            "sage_mean" | "sage" => Ok(Self::SageMean),
            "appnp" => Ok(Self::Appnp),
            other => Err(Error::InvalidArgument(format!("unknown architecture {other}"))),
        }
    }

    /// Stage that produces [`EmbeddingView`].
    pub fn embedding_layer(self) -> &'static str {
        match self {
            Self::Gcn => "propagated_hidden",
            Self::SageMean => "layer1_output",
            Self::Appnp => "propagated_mlp_hidden",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub hidden: usize,
    pub appnp_k: usize,
    pub appnp_alpha: f64,
    pub dropout: f64,
}

impl ModelConfig {
    pub fn new(architecture: Architecture) -> Self {
        Self {
            architecture,
            hidden: 64,
            appnp_k: 10,
            appnp_alpha: 0.1,
            dropout: 0.5,
        }
    }
}

/// Propagation operators derived once from the raw adjacency.
#[derive(Clone, Debug)]
pub struct GraphOps {
    pub adjacency: GraphCsr,
    /// `D̃^{-1/2}(A + I)D̃^{-1/2}`.
    pub sym: GraphCsr,
    /// `D^{-1}A`.
    pub mean: GraphCsr,
    pub mean_t: GraphCsr,
}

impl GraphOps {
    pub fn new(adjacency: GraphCsr) -> Result<Self> {
        let sym = adjacency.sym_normalize()?;
        let mean = adjacency.mean_normalize();
        let mean_t = mean.transpose();
        Ok(Self {
            adjacency,
            sym,
            mean,
            mean_t,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.num_nodes()
    }
}

/// Inverted dropout applied during a training forward pass.
pub struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut Rng,
}

impl Dropout<'_> {
    fn mask(self, rows: usize, cols: usize) -> DenseMatrix {
        dropout_mask(rows, cols, self.rate, self.rng)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingView {
    pub h: DenseMatrix,
    pub layer: &'static str,
}

#[derive(Clone, Debug)]
pub struct ModelOutput {
    pub logits: DenseMatrix,
    pub embedding: EmbeddingView,
}

/// Activations of one forward pass, consumed by [`backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    inner: CacheInner,
}

#[derive(Clone, Debug)]
enum CacheInner {
    Gcn(gcn::Cache),
    Sage(sage::Cache),
    Appnp(appnp::Cache),
}

pub fn init_params(
    config: &ModelConfig,
    input: usize,
    classes: usize,
    rng: &mut Rng,
) -> ParamSet {
    match config.architecture {
        Architecture::Gcn => gcn::init(input, config.hidden, classes, rng),
        Architecture::SageMean => sage::init(input, config.hidden, classes, rng),
        Architecture::Appnp => init_mlp(input, config.hidden, classes, rng),
    }
}

/// Full-graph forward pass. `dropout` is `None` at evaluation time.
pub fn forward(
    config: &ModelConfig,
    params: &ParamSet,
    ops: &GraphOps,
    x: &SparseMatrix,
    dropout: Option<Dropout<'_>>,
) -> Result<(ModelOutput, ForwardCache)> {
    if x.rows() != ops.num_nodes() {
        return Err(shape(
            "forward",
            format!("{} feature rows for {} nodes", x.rows(), ops.num_nodes()),
        ));
    }
    let (logits, h, inner) = match config.architecture {
        Architecture::Gcn => {
            let (l, e, c) = gcn::forward(params, ops, x, dropout)?;
            (l, e, CacheInner::Gcn(c))
        }
        Architecture::SageMean => {
            let (l, e, c) = sage::forward(params, ops, x, dropout)?;
            (l, e, CacheInner::Sage(c))
        }
        Architecture::Appnp => {
            let (l, e, c) =
                appnp::forward(params, ops, x, config.appnp_k, config.appnp_alpha, dropout)?;
            (l, e, CacheInner::Appnp(c))
        }
    };
    Ok((
        ModelOutput {
            logits,
            embedding: EmbeddingView {
                h,
                layer: config.architecture.embedding_layer(),
            },
        },
        ForwardCache { inner },
    ))
}

/// Parameter gradients given `upstream = ∂L/∂logits`.
pub fn backward(
    config: &ModelConfig,
    params: &ParamSet,
    ops: &GraphOps,
    cache: &ForwardCache,
    upstream: &DenseMatrix,
) -> Result<ParamSet> {
    match (config.architecture, &cache.inner) {
        (Architecture::Gcn, CacheInner::Gcn(c)) => gcn::backward(params, ops, c, upstream),
        (Architecture::SageMean, CacheInner::Sage(c)) => sage::backward(params, ops, c, upstream),
        (Architecture::Appnp, CacheInner::Appnp(c)) => appnp::backward(
            params,
            ops,
            c,
            upstream,
            config.appnp_k,
            config.appnp_alpha,
        ),
        (arch, _) => Err(Error::CacheMismatch(format!(
            "cache was not produced by a {} forward pass",
            arch.tag()
        ))),
    }
}

/// The trained classifier applied to bare feature rows, each treated as an
/// isolated self-looped node.
pub fn surrogate(config: &ModelConfig, params: &ParamSet, x: &SparseMatrix) -> Result<DenseMatrix> {
    match config.architecture {
        Architecture::Gcn => gcn::surrogate(params, x),
        Architecture::SageMean => sage::surrogate(params, x),
        Architecture::Appnp => appnp::surrogate(params, x),
    }
}

/// A frozen base model. Parameters are reachable only by shared reference.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    config: ModelConfig,
    input_dim: usize,
    num_classes: usize,
    params: ParamSet,
    ops: Arc<GraphOps>,
}

impl TrainedModel {
    /// Wraps externally supplied parameters after checking their layout.
    pub fn from_params(
        config: ModelConfig,
        input_dim: usize,
        num_classes: usize,
        params: ParamSet,
        ops: Arc<GraphOps>,
    ) -> Result<Self> {
        let reference = init_params(&config, input_dim, num_classes, &mut Rng::new(0));
        reference
            .check_aligned(&params, "trained_model")
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        if !params.is_finite() {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(Self {
            config,
            input_dim,
            num_classes,
            params,
            ops,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn architecture(&self) -> Architecture {
        self.config.architecture
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn ops(&self) -> &GraphOps {
        &self.ops
    }

    pub fn forward(&self, x: &SparseMatrix) -> Result<ModelOutput> {
        if x.cols() != self.input_dim {
            return Err(shape(
                "forward",
                format!("{} feature columns, model expects {}", x.cols(), self.input_dim),
            ));
        }
        Ok(forward(&self.config, &self.params, &self.ops, x, None)?.0)
    }

    pub fn forward_dense(&self, x: &DenseMatrix) -> Result<ModelOutput> {
        self.forward(&SparseMatrix::from_dense(x))
    }

    pub fn surrogate(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.cols() != self.input_dim {
            return Err(shape(
                "surrogate",
                format!("{} feature columns, model expects {}", x.cols(), self.input_dim),
            ));
        }
        surrogate(&self.config, &self.params, &SparseMatrix::from_dense(x))
    }

    pub fn checkpoint_bytes(&self) -> Vec<u8> {
        encode_checkpoint(&self.params)
    }

    /// Hex SHA-256 of the checkpoint encoding.
    pub fn checkpoint_sha256(&self) -> String {
        let digest = Sha256::digest(self.checkpoint_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
