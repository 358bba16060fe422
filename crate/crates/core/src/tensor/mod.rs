//! Dense and sparse linear algebra plus the seeded PRNG.
//!
//! Everything here is `f64` and single-threaded; reductions run in a fixed
//! order so identical inputs give bit-identical outputs.

mod csr;
mod dense;
pub mod linalg;
mod rng;
mod sparse;

pub use csr::GraphCsr;
pub use dense::{argmax, l2_distance, l2_norm, DenseMatrix};
pub use linalg::{spectral_norm, top_eigenpairs, EigenPair, SpectralNorm};
pub use rng::Rng;
pub use sparse::SparseMatrix;
