//! Loader for the on-disk graph bundle.
//!
//! ```text
//! meta.json            {name, num_nodes, num_edges_undirected, feature_dim, num_classes}
//! edges.tsv            "u\tv" per line, u < v, 0-based, sorted, unique
//! features.bin         little-endian f32, row-major num_nodes × feature_dim
//! labels.txt           one class id per line
//! splits/canonical.json {"train": [...], "val": [...], "test": [...]}
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{Provenance, SplitMasks};
use crate::tensor::{DenseMatrix, GraphCsr};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub name: String,
    pub num_nodes: usize,
    pub num_edges_undirected: usize,
    pub feature_dim: usize,
    pub num_classes: usize,
}

#[derive(Clone, Debug)]
pub struct GraphBundle {
    pub path: PathBuf,
    pub meta: BundleMeta,
    pub edges: Vec<(usize, usize)>,
    pub adjacency: GraphCsr,
    /// Widened to f64.
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub canonical: SplitMasks,
}

#[derive(Deserialize)]
struct RawSplit {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

impl GraphBundle {
    /// Reads and validates every file of the bundle at `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let fail = |file: &str, detail: String| Error::Bundle {
            path: dir.join(file).display().to_string(),
            detail,
        };
        let read = |file: &str| {
            std::fs::read(dir.join(file)).map_err(|e| fail(file, e.to_string()))
        };

        let meta: BundleMeta = serde_json::from_slice(&read("meta.json")?)
            .map_err(|e| fail("meta.json", e.to_string()))?;
        let n = meta.num_nodes;

        let text = String::from_utf8(read("edges.tsv")?)
            .map_err(|_| fail("edges.tsv", "not UTF-8".into()))?;
        let mut edges = Vec::with_capacity(meta.num_edges_undirected);
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = || fail("edges.tsv", format!("line {}: {line:?}", lineno + 1));
            let (u, v) = line.split_once('\t').ok_or_else(bad)?;
            let u: usize = u.parse().map_err(|_| bad())?;
            let v: usize = v.parse().map_err(|_| bad())?;
            if u >= v || v >= n {
                return Err(fail(
                    "edges.tsv",
                    format!("line {}: need u < v < {n}", lineno + 1),
                ));
            }
            if edges.last().is_some_and(|&last| last >= (u, v)) {
                return Err(fail(
                    "edges.tsv",
                    format!("line {}: edges not sorted and unique", lineno + 1),
                ));
            }
            edges.push((u, v));
        }
        if edges.len() != meta.num_edges_undirected {
            return Err(fail(
                "edges.tsv",
                format!("{} edges, meta says {}", edges.len(), meta.num_edges_undirected),
            ));
        }

        let raw = read("features.bin")?;
        let expected = n * meta.feature_dim * 4;
        if raw.len() != expected {
            return Err(fail(
                "features.bin",
                format!("{} bytes, expected {expected}", raw.len()),
            ));
        }
        let data: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(fail("features.bin", "non-finite feature".into()));
        }
        let features = DenseMatrix::new(n, meta.feature_dim, data)?;

        let text = String::from_utf8(read("labels.txt")?)
            .map_err(|_| fail("labels.txt", "not UTF-8".into()))?;
        let labels = text
            .lines()
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(i, l)| match l.trim().parse::<usize>() {
                Ok(y) if y < meta.num_classes => Ok(y),
                _ => Err(fail("labels.txt", format!("line {}: {l:?}", i + 1))),
            })
            .collect::<Result<Vec<usize>>>()?;
        if labels.len() != n {
            return Err(fail(
                "labels.txt",
                format!("{} labels for {n} nodes", labels.len()),
            ));
        }

        let split: RawSplit = serde_json::from_slice(&read("splits/canonical.json")?)
            .map_err(|e| fail("splits/canonical.json", e.to_string()))?;
        let canonical = SplitMasks::new(split.train, split.val, split.test, Provenance::canonical());
        canonical
            .validate(n)
            .map_err(|e| fail("splits/canonical.json", e.to_string()))?;

        let adjacency = GraphCsr::from_undirected_edges(n, &edges)?;
        Ok(Self {
            path: dir.to_path_buf(),
            meta,
            edges,
            adjacency,
            features,
            labels,
            canonical,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.meta.num_nodes
    }

    pub fn num_classes(&self) -> usize {
        self.meta.num_classes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_bundle(dir: &Path) {
        std::fs::create_dir_all(dir.join("splits")).unwrap();
        std::fs::write(
            dir.join("meta.json"),
            r#"{"name":"tiny","num_nodes":3,"num_edges_undirected":2,"feature_dim":2,"num_classes":2}"#,
        )
        .unwrap();
        std::fs::write(dir.join("edges.tsv"), "0\t1\n1\t2\n").unwrap();
        let feats: Vec<u8> = [1.0f32, 0.0, 0.0, 1.0, 0.5, 0.5]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        std::fs::write(dir.join("features.bin"), feats).unwrap();
        std::fs::write(dir.join("labels.txt"), "0\n1\n1\n").unwrap();
        std::fs::write(
            dir.join("splits/canonical.json"),
            r#"{"train":[0],"val":[1],"test":[2]}"#,
        )
        .unwrap();
    }

    fn scratch(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("frgnn-bundle-{name}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn hand_built_bundle_round_trips() {
        let dir = scratch("ok");
        write_bundle(&dir);
        let b = GraphBundle::load(&dir).unwrap();
        assert_eq!(b.meta.num_nodes, 3);
        assert_eq!(b.edges, vec![(0, 1), (1, 2)]);
        assert_eq!(b.adjacency.nnz(), 4);
        assert_eq!(b.features.row(2), &[0.5, 0.5]);
        assert_eq!(b.labels, vec![0, 1, 1]);
        assert_eq!(b.canonical.test, vec![2]);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn truncated_features_fail() {
        let dir = scratch("trunc");
        write_bundle(&dir);
        std::fs::write(dir.join("features.bin"), [0u8; 20]).unwrap();
        let err = GraphBundle::load(&dir).unwrap_err();
        assert!(err.to_string().contains("features.bin"), "{err}");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn bad_edges_and_labels_fail() {
        let dir = scratch("edges");
        write_bundle(&dir);
        std::fs::write(dir.join("edges.tsv"), "1\t0\n1\t2\n").unwrap();
        assert!(GraphBundle::load(&dir).is_err());
        std::fs::write(dir.join("edges.tsv"), "1\t2\n0\t1\n").unwrap();
        assert!(GraphBundle::load(&dir).is_err());
        std::fs::write(dir.join("edges.tsv"), "0\t1\n1\t2\n").unwrap();
        std::fs::write(dir.join("labels.txt"), "0\n2\n1\n").unwrap();
        assert!(GraphBundle::load(&dir).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn overlapping_canonical_split_fails() {
        let dir = scratch("split");
        write_bundle(&dir);
        std::fs::write(
            dir.join("splits/canonical.json"),
            r#"{"train":[0],"val":[0],"test":[2]}"#,
        )
        .unwrap();
        assert!(GraphBundle::load(&dir).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
