//! Parameters, objectives, the optimizer and gradient tooling.
//!
//! Models compute their own gradients by hand; this module supplies the
//! shared pieces and [`finite_diff_check`] to keep them honest.

mod adam;
mod checkpoint;
mod gradcheck;
mod loss;
mod mlp;
mod params;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, MAGIC, VERSION,
};
pub use gradcheck::{finite_diff_check, GradCheckReport, REL_FLOOR};
pub use loss::{mse_loss, softmax_cross_entropy};
pub use mlp::{init_mlp, mlp_backward, mlp_forward, mlp_forward_cached, relu_backward, MlpCache};
pub use params::{glorot_uniform, ParamSet};

use crate::tensor::{DenseMatrix, Rng};

/// Inverted dropout mask: entries are `0` with probability `rate`,
/// otherwise `1 / (1 − rate)`.
pub fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut Rng) -> DenseMatrix {
    if rate <= 0.0 {
        return DenseMatrix::filled(rows, cols, 1.0);
    }
    let keep = 1.0 / (1.0 - rate);
    DenseMatrix::from_fn(rows, cols, |_, _| {
        if rng.uniform() < rate {
            0.0
        } else {
            keep
        }
    })
}
