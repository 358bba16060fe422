//! Graph-learning laboratory for test-time feature reconstruction.
//!
//! Small GNNs (GCN, GraphSAGE-mean, APPNP) are trained from scratch on
//! citation graphs. A frozen model is then adapted at test time by
//! replacing labeled-node features with class representative embeddings
//! recovered through an inverse MLP, without touching its parameters.
//!
//! Modules, bottom-up:
//! - [`tensor`]: dense/sparse primitives and the seeded PRNG.
//! - [`train`]: parameters, losses, Adam, checkpoints, gradient checking.
//! - [`models`]: the base GNNs and their training loop.
//! - [`sampler`]: personalized PageRank and biased/random splits.
//! - [`fr`]: the reconstruction pipeline.
//! - [`metrics`]: accuracy, embedding bias, homophily buckets, PCA exports.
//! - [`theory`]: Monte-Carlo probes of the concentration and Lipschitz bounds.
//! - [`bundle`]: the on-disk graph bundle loader.

pub mod bundle;
pub mod error;
pub mod fr;
pub mod metrics;
pub mod models;
pub mod sampler;
pub mod tensor;
pub mod theory;
pub mod train;

pub use error::{Error, Result};
