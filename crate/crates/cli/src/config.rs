//! Run configuration.
//!
//! A TOML file of dotted keys; every key is optional and unknown keys are
//! rejected. The resolved configuration, defaults included, is written into
//! each run manifest.
//!
//! ```toml
//! data.bundle = "fixtures/cora"   # relative to this file
//! split.kind = "biased"           # canonical | random | biased
//! model.arch = "gcn"              # gcn | sage_mean | appnp
//! seeds.split = [0, 1, 2]
//! seeds.init = [0, 1]
//! mlp.lr = 0.001
//! ```

use std::path::{Path, PathBuf};

use frgnn_core::fr::{FrConfig, InverseMlpConfig};
use frgnn_core::models::{Architecture, ModelConfig, TrainConfig};
use frgnn_core::sampler::{DEFAULT_ALPHA, DEFAULT_EPS};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    pub split: SplitSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub mlp: MlpSection,
    pub fr: FrSection,
    pub seeds: SeedSection,
    pub theory: TheorySection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Bundle directory; relative paths resolve against the config file.
    pub bundle: PathBuf,
    /// L1-normalize feature rows before use.
    pub row_normalize: bool,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            bundle: PathBuf::new(),
            row_normalize: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitChoice {
    Canonical,
    Random,
    Biased,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub kind: SplitChoice,
    pub per_class: usize,
    pub val_size: usize,
    pub alpha: f64,
    pub eps: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            kind: SplitChoice::Canonical,
            per_class: 20,
            val_size: 500,
            alpha: DEFAULT_ALPHA,
            eps: DEFAULT_EPS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub arch: String,
    pub hidden: usize,
    pub dropout: f64,
    pub appnp_k: usize,
    pub appnp_alpha: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::new(Architecture::Gcn);
        Self {
            arch: "gcn".into(),
            hidden: m.hidden,
            dropout: m.dropout,
            appnp_k: m.appnp_k,
            appnp_alpha: m.appnp_alpha,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lr: f64,
    pub wd: f64,
    pub epochs: usize,
    pub patience: usize,
    pub restore_best: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            lr: t.lr,
            wd: t.weight_decay,
            epochs: t.epochs,
            patience: t.patience,
            restore_best: t.restore_best,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpSection {
    pub hidden: usize,
    pub lr: f64,
    pub wd: f64,
    pub epochs: usize,
}

impl Default for MlpSection {
    fn default() -> Self {
        let m = InverseMlpConfig::default();
        Self {
            hidden: m.hidden,
            lr: m.lr,
            wd: m.weight_decay,
            epochs: m.epochs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrSection {
    /// Run feature reconstruction in `matrix` cells.
    pub enabled: bool,
    pub surrogate_eps: f64,
}

impl Default for FrSection {
    fn default() -> Self {
        Self {
            enabled: true,
            surrogate_eps: FrConfig::default().surrogate_eps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    pub split: Vec<u64>,
    pub init: Vec<u64>,
}

impl Default for SeedSection {
    fn default() -> Self {
        Self {
            split: vec![0],
            init: vec![0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheorySection {
    pub seed: u64,
    pub tail_trials: usize,
    pub t_grid: Vec<f64>,
    pub theorem2_specs: usize,
    pub theorem2_fractions: Vec<f64>,
    pub theorem2_trials: usize,
    pub lemma2_n: usize,
    pub lemma2_m: usize,
    pub lemma2_trials: usize,
    pub lipschitz_trials: usize,
}

impl Default for TheorySection {
    fn default() -> Self {
        Self {
            seed: 0,
            tail_trials: 100_000,
            t_grid: (1..=20).map(|i| i as f64 / 10.0).collect(),
            theorem2_specs: 20,
            theorem2_fractions: vec![0.1, 0.3, 0.5],
            theorem2_trials: 20_000,
            lemma2_n: 100,
            lemma2_m: 10,
            lemma2_trials: 1000,
            lipschitz_trials: 1000,
        }
    }
}

impl RunConfig {
    /// Parses `path` and resolves the bundle path against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::parse(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        if !config.data.bundle.as_os_str().is_empty() && config.data.bundle.is_relative() {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            config.data.bundle = base.join(&config.data.bundle);
        }
        Ok(config)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Usage(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Usage(m));
        if self.seeds.split.is_empty() || self.seeds.init.is_empty() {
            return bad("seeds.split and seeds.init must be nonempty".into());
        }
        Architecture::parse(&self.model.arch).map_err(|e| CliError::Usage(e.to_string()))?;
        if !(0.0..1.0).contains(&self.model.dropout) {
            return bad(format!("model.dropout {} outside [0, 1)", self.model.dropout));
        }
        if self.model.hidden == 0 || self.mlp.hidden == 0 {
            return bad("hidden widths must be positive".into());
        }
        if !(self.split.alpha > 0.0 && self.split.alpha < 1.0) || !(self.split.eps > 0.0) {
            return bad("split.alpha must lie in (0, 1) and split.eps be positive".into());
        }
        if self.train.epochs == 0 {
            return bad("train.epochs must be positive".into());
        }
        Ok(())
    }

    /// Runs a single seed: every seed list becomes `[seed]`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds.split = vec![seed];
        self.seeds.init = vec![seed];
        self.theory.seed = seed;
        self
    }

    pub fn require_bundle(&self) -> CliResult<&Path> {
        if self.data.bundle.as_os_str().is_empty() {
            return Err(CliError::Usage("data.bundle is not set".into()));
        }
        Ok(&self.data.bundle)
    }

    pub fn model_config(&self) -> ModelConfig {
        let arch = Architecture::parse(&self.model.arch).expect("validated");
        ModelConfig {
            architecture: arch,
            hidden: self.model.hidden,
            appnp_k: self.model.appnp_k,
            appnp_alpha: self.model.appnp_alpha,
            dropout: self.model.dropout,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.train.lr,
            weight_decay: self.train.wd,
            epochs: self.train.epochs,
            patience: self.train.patience,
            restore_best: self.train.restore_best,
        }
    }

    pub fn fr_config(&self) -> FrConfig {
        FrConfig {
            mlp: InverseMlpConfig {
                hidden: self.mlp.hidden,
                lr: self.mlp.lr,
                weight_decay: self.mlp.wd,
                epochs: self.mlp.epochs,
            },
            surrogate_eps: self.fr.surrogate_eps,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
