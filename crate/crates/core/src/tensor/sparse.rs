//! Rectangular compressed-row matrices for sparse node features.

use crate::error::{shape, Result};
use crate::tensor::{DenseMatrix, Rng};

/// Row-compressed `rows × cols` matrix holding only nonzero entries.
///
/// Products accumulate in the same order as the zero-skipping dense loops,
/// so `SparseMatrix::from_dense(a).matmul(b)` equals `a.matmul(b)` bit for
/// bit whenever the dense side takes that path.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_dense(dense: &DenseMatrix) -> Self {
        let mut row_ptr = Vec::with_capacity(dense.rows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..dense.rows() {
            for (j, &v) in dense.row(i).iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: dense.rows(),
            cols: dense.cols(),
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                out.set(i, j, v);
            }
        }
        out
    }

    /// Sum of squared entries.
    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `self · b`.
    pub fn matmul(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != b.rows() {
            return Err(shape(
                "sparse_matmul",
                format!("{:?} x {:?}", self.shape(), b.shape()),
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows, b.cols());
        for i in 0..self.rows {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            let c = out.row_mut(i);
            for (&p, &a) in self.col_idx[r.clone()].iter().zip(&self.values[r]) {
                for (cj, bj) in c.iter_mut().zip(b.row(p)) {
                    *cj += a * bj;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · b`.
    pub fn t_matmul(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != b.rows() {
            return Err(shape(
                "sparse_t_matmul",
                format!("{:?}ᵀ x {:?}", self.shape(), b.shape()),
            ));
        }
        let mut out = DenseMatrix::zeros(self.cols, b.cols());
        for p in 0..self.rows {
            let bp = b.row(p);
            for (i, a) in self.row_entries(p) {
                for (cj, bj) in out.row_mut(i).iter_mut().zip(bp) {
                    *cj += a * bj;
                }
            }
        }
        Ok(out)
    }

    /// Inverted dropout over the stored entries: each is zeroed with
    /// probability `rate`, survivors scaled by `1 / (1 − rate)`.
    pub fn dropout(&self, rate: f64, rng: &mut Rng) -> Self {
        let mut out = self.clone();
        if rate > 0.0 {
            let keep = 1.0 / (1.0 - rate);
            for v in &mut out.values {
                *v = if rng.uniform() < rate { 0.0 } else { *v * keep };
            }
        }
        out
    }

    /// Copy in which row `i` becomes `replace(i)` where that is `Some`.
    pub fn with_rows_replaced<'a>(
        &self,
        replace: impl Fn(usize) -> Option<&'a [f64]>,
    ) -> Result<Self> {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            match replace(i) {
                Some(row) => {
                    if row.len() != self.cols {
                        return Err(shape(
                            "with_rows_replaced",
                            format!("row of {} for {} columns", row.len(), self.cols),
                        ));
                    }
                    for (j, &v) in row.iter().enumerate() {
                        if v != 0.0 {
                            col_idx.push(j);
                            values.push(v);
                        }
                    }
                }
                None => {
                    for (j, v) in self.row_entries(i) {
                        col_idx.push(j);
                        values.push(v);
                    }
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Column sums as a `1 × cols` row.
    pub fn col_sums(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(1, self.cols);
        let row = out.row_mut(0);
        for (&j, &v) in self.col_idx.iter().zip(&self.values) {
            row[j] += v;
        }
        out
    }

    pub fn select_rows(&self, ids: &[usize]) -> Self {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &i in ids {
            for (j, v) in self.row_entries(i) {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: ids.len(),
            cols: self.cols,
            row_ptr,
            col_idx,
            values,
        }
    }
}
