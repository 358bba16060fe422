//! Run directories, manifests and binary dumps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use frgnn_core::tensor::SparseMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

/// Output directory that remembers the hash of every file written.
pub struct RunDir {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl RunDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| {
            CliError::Usage(format!("cannot create output directory {}: {e}", root.display()))
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> CliResult<()> {
        let bytes = bytes.as_ref();
        std::fs::write(self.root.join(name), bytes)?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(self, command: &str, config: &RunConfig, summary: serde_json::Value) -> CliResult<PathBuf> {
        let manifest = Manifest {
            tool: format!("frgnn {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            config: config.clone(),
            summary,
            files: self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(self.root.join(MANIFEST), text)?;
        Ok(self.root)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    /// Fully resolved, defaults included.
    pub config: RunConfig,
    pub summary: serde_json::Value,
    /// File name to SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(run: &Path) -> CliResult<Self> {
        let path = run.join(MANIFEST);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("no run at {}: {e}", run.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

const XSTAR_MAGIC: &[u8; 4] = b"FRXS";

/// `FRXS`, then little-endian u64 rows, cols, nnz, then per stored entry
/// (row u64, col u64, value f64) in row-major order.
pub fn encode_sparse(m: &SparseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(28 + m.nnz() * 24);
    out.extend_from_slice(XSTAR_MAGIC);
    for v in [m.rows(), m.cols(), m.nnz()] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for i in 0..m.rows() {
        for (j, v) in m.row_entries(i) {
            out.extend_from_slice(&(i as u64).to_le_bytes());
            out.extend_from_slice(&(j as u64).to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Inverse of [`encode_sparse`].
pub fn decode_sparse(bytes: &[u8]) -> CliResult<SparseMatrix> {
    let bad = |m: &str| CliError::Internal(format!("sparse dump: {m}"));
    if bytes.len() < 28 || &bytes[..4] != XSTAR_MAGIC {
        return Err(bad("bad header"));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()) as usize;
    let (rows, cols, nnz) = (word(4), word(12), word(20));
    if bytes.len() != 28 + nnz * 24 {
        return Err(bad("length does not match entry count"));
    }
    let mut dense = frgnn_core::tensor::DenseMatrix::zeros(rows, cols);
    for e in 0..nnz {
        let at = 28 + e * 24;
        let (i, j) = (word(at), word(at + 8));
        if i >= rows || j >= cols {
            return Err(bad("entry out of range"));
        }
        dense.set(i, j, f64::from_le_bytes(bytes[at + 16..at + 24].try_into().unwrap()));
    }
    Ok(SparseMatrix::from_dense(&dense))
}
