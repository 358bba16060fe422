//! Compressed-row adjacency and sparse-dense products.

use crate::error::{shape, Error, Result};
use crate::tensor::DenseMatrix;

/// Sparse adjacency in compressed-row form.
///
/// Column indices are strictly increasing within each row. Graphs built
/// through [`GraphCsr::from_undirected_edges`] are structurally symmetric;
/// [`GraphCsr::from_parts`] only checks the row layout, and operations that
/// need symmetry verify it themselves.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphCsr {
    num_nodes: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl GraphCsr {
    pub fn from_parts(
        num_nodes: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != num_nodes + 1 || row_ptr[0] != 0 {
            return Err(Error::Structure(format!(
                "row_ptr has {} entries for {num_nodes} nodes",
                row_ptr.len()
            )));
        }
        if *row_ptr.last().unwrap() != col_idx.len() || col_idx.len() != values.len() {
            return Err(Error::Structure(
                "row_ptr, col_idx and values disagree on nnz".into(),
            ));
        }
        for i in 0..num_nodes {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            if lo > hi {
                return Err(Error::Structure(format!("row_ptr decreases at row {i}")));
            }
            let cols = &col_idx[lo..hi];
            if cols.iter().any(|&j| j >= num_nodes) {
                return Err(Error::Structure(format!("column out of range in row {i}")));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Structure(format!(
                    "columns not strictly increasing in row {i}"
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Structure("non-finite edge weight".into()));
        }
        Ok(Self {
            num_nodes,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Unit-weight symmetric adjacency from an undirected edge list.
    /// Duplicate edges collapse; a self-loop `(i, i)` is stored once.
    pub fn from_undirected_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for &(u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::Structure(format!(
                    "edge ({u}, {v}) outside {num_nodes} nodes"
                )));
            }
            adj[u].push(v);
            if u != v {
                adj[v].push(u);
            }
        }
        let mut row_ptr = Vec::with_capacity(num_nodes + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut nbrs in adj {
            nbrs.sort_unstable();
            nbrs.dedup();
            col_idx.extend(nbrs);
            row_ptr.push(col_idx.len());
        }
        let values = vec![1.0; col_idx.len()];
        Ok(Self {
            num_nodes,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    #[inline]
    pub fn row_values(&self, i: usize) -> &[f64] {
        &self.values[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Number of stored entries in row `i`.
    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// Stored weight of `(i, j)`, if present.
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.neighbors(i)
            .binary_search(&j)
            .ok()
            .map(|k| self.row_values(i)[k])
    }

    /// Every stored `(i, j)` has a stored `(j, i)`.
    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.num_nodes).all(|i| self.neighbors(i).iter().all(|&j| self.weight(j, i).is_some()))
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.num_nodes + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for i in 0..self.num_nodes {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // Rows are visited in ascending order, so each output row stays sorted.
        for i in 0..self.num_nodes {
            for (&j, &v) in self.neighbors(i).iter().zip(self.row_values(i)) {
                let slot = next[j];
                col_idx[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        Self {
            num_nodes: self.num_nodes,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `D̃^{-1/2} (A + I) D̃^{-1/2}` with `D̃` the degree matrix of `A + I`.
    pub fn sym_normalize(&self) -> Result<Self> {
        if !self.is_structurally_symmetric() {
            return Err(Error::Structure(
                "sym_normalize needs a structurally symmetric adjacency".into(),
            ));
        }
        let n = self.num_nodes;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(self.nnz() + n);
        let mut weights = Vec::with_capacity(self.nnz() + n);
        row_ptr.push(0);
        for i in 0..n {
            let mut placed_self = false;
            for (&j, &v) in self.neighbors(i).iter().zip(self.row_values(i)) {
                if !placed_self && j >= i {
                    if j == i {
                        col_idx.push(i);
                        weights.push(v + 1.0);
                        placed_self = true;
                        continue;
                    }
                    col_idx.push(i);
                    weights.push(1.0);
                    placed_self = true;
                }
                col_idx.push(j);
                weights.push(v);
            }
            if !placed_self {
                col_idx.push(i);
                weights.push(1.0);
            }
            row_ptr.push(col_idx.len());
        }
        let degree: Vec<f64> = (0..n)
            .map(|i| weights[row_ptr[i]..row_ptr[i + 1]].iter().sum::<f64>())
            .collect();
        // sqrt(d_i * d_j) is commutative, so stored (i, j) and (j, i) match exactly.
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                weights[k] /= (degree[i] * degree[col_idx[k]]).sqrt();
            }
        }
        Ok(Self {
            num_nodes: n,
            row_ptr,
            col_idx,
            values: weights,
        })
    }

    /// Row-stochastic neighbor averaging `D^{-1} A`, without self-loops.
    /// Isolated rows stay empty, so their neighbor mean is zero.
    pub fn mean_normalize(&self) -> Self {
        let mut values = self.values.clone();
        for i in 0..self.num_nodes {
            let d = self.degree(i);
            for v in &mut values[self.row_ptr[i]..self.row_ptr[i + 1]] {
                *v = 1.0 / d as f64;
            }
        }
        Self {
            num_nodes: self.num_nodes,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values,
        }
    }

    /// `out[i] = Σ_j a_ij · dense[j]`, accumulated in ascending column order.
    pub fn spmm(&self, dense: &DenseMatrix) -> Result<DenseMatrix> {
        if dense.rows() != self.num_nodes {
            return Err(shape(
                "spmm",
                format!("{} nodes vs {} rows", self.num_nodes, dense.rows()),
            ));
        }
        let cols = dense.cols();
        let mut out = DenseMatrix::zeros(self.num_nodes, cols);
        for i in 0..self.num_nodes {
            let acc = out.row_mut(i);
            for (&j, &a) in self.neighbors(i).iter().zip(self.row_values(i)) {
                for (o, x) in acc.iter_mut().zip(dense.row(j)) {
                    *o += a * x;
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.num_nodes, self.num_nodes);
        for i in 0..self.num_nodes {
            for (&j, &v) in self.neighbors(i).iter().zip(self.row_values(i)) {
                out.set(i, j, v);
            }
        }
        out
    }

    /// Renumbers nodes so that old node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.num_nodes {
            return Err(shape("permuted", "permutation length"));
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.num_nodes];
        for i in 0..self.num_nodes {
            for (&j, &v) in self.neighbors(i).iter().zip(self.row_values(i)) {
                rows[perm[i]].push((perm[j], v));
            }
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (j, v) in r {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self::from_parts(self.num_nodes, row_ptr, col_idx, values)
    }

    /// Hop distances from `source`; unreachable nodes get `None`.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_nodes];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path2() -> GraphCsr {
        GraphCsr::from_undirected_edges(2, &[(0, 1)]).unwrap()
    }

    #[test]
    fn two_node_path_normalizes_to_halves() {
        let a = path2().sym_normalize().unwrap();
        assert_eq!(a.to_dense().as_slice(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn isolated_node_normalizes_to_one() {
        let a = GraphCsr::from_undirected_edges(1, &[]).unwrap();
        let n = a.sym_normalize().unwrap();
        assert_eq!(n.to_dense().as_slice(), &[1.0]);
    }

    #[test]
    fn star_normalization_matches_hand_values() {
        // Degrees with self-loops: center 3, spokes 2.
        let a = GraphCsr::from_undirected_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let n = a.sym_normalize().unwrap();
        let d = n.to_dense();
        assert!((d.get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.get(1, 0) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!((d.get(0, 2) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!((d.get(1, 1) - 0.5).abs() < 1e-15);
        assert_eq!(d.get(1, 2), 0.0);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let a = GraphCsr::from_parts(2, vec![0, 1, 1], vec![1], vec![1.0]).unwrap();
        assert!(matches!(a.sym_normalize(), Err(Error::Structure(_))));
    }

    #[test]
    fn layout_violations_are_rejected() {
        assert!(GraphCsr::from_parts(2, vec![0, 2, 2], vec![1, 1], vec![1.0, 1.0]).is_err());
        assert!(GraphCsr::from_parts(2, vec![0, 1, 2], vec![2, 0], vec![1.0, 1.0]).is_err());
        assert!(GraphCsr::from_parts(2, vec![0, 1], vec![1], vec![1.0]).is_err());
        assert!(GraphCsr::from_undirected_edges(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn spmm_identity_and_zero_weights() {
        let eye = GraphCsr::from_parts(3, vec![0, 1, 2, 3], vec![0, 1, 2], vec![1.0; 3]).unwrap();
        let x = DenseMatrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 - 2.5);
        assert_eq!(eye.spmm(&x).unwrap(), x);
        let zero = GraphCsr::from_parts(3, vec![0, 2, 3, 4], vec![0, 1, 0, 2], vec![0.0; 4]).unwrap();
        assert_eq!(zero.spmm(&x).unwrap(), DenseMatrix::zeros(3, 2));
        assert!(eye.spmm(&DenseMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn spmm_on_normalized_path_matches_dense_product() {
        let a = path2().sym_normalize().unwrap();
        let x = DenseMatrix::identity(2);
        let oracle = a.to_dense().matmul(&x).unwrap();
        let got = a.spmm(&x).unwrap();
        assert_eq!(got, oracle);
        assert_eq!(got.as_slice(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn transpose_and_mean_normalize() {
        let a = GraphCsr::from_undirected_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let m = a.mean_normalize();
        assert_eq!(m.row_values(0), &[1.0 / 3.0; 3]);
        assert_eq!(m.row_values(1), &[1.0]);
        let mt = m.transpose();
        assert_eq!(mt.weight(1, 0), Some(1.0 / 3.0));
        assert_eq!(mt.weight(0, 1), Some(1.0));
        assert_eq!(mt.transpose(), m);
    }

    #[test]
    fn bfs_on_path() {
        let a = GraphCsr::from_undirected_edges(4, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(a.bfs_distances(0), vec![Some(0), Some(1), Some(2), None]);
    }
}
