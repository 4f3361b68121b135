//! Run configuration file.
//!
//! ```json
//! {
//!   "config_id": "two-rule",
//!   "dataset": "data/manifest.json",
//!   "rules": "rules.json",
//!   "out": "runs/two-rule",
//!   "model": {"latent_dim": 16},
//!   "train": {"epochs": 20, "rule_weight": 0.15},
//!   "clustering": {"method": "fcm", "k": 4, "m": 2.0},
//!   "refine": true
//! }
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use rulevae::{ModelConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Kmeans,
    Fcm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Kmeans => "kmeans",
            Method::Fcm => "fcm",
        }
    }
}

fn default_k() -> usize {
    4
}

fn default_m() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringConfig {
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Fuzzifier, used by `fcm` only.
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            method: Method::default(),
            k: default_k(),
            m: default_m(),
            seed: 0,
        }
    }
}

/// Layer-size overrides; input widths always come from the data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSizes {
    pub semantic_dim: Option<usize>,
    pub semantic_hidden: Option<usize>,
    pub rule_dim: Option<usize>,
    pub rule_hidden: Option<usize>,
    pub hidden1: Option<usize>,
    pub hidden2: Option<usize>,
    pub latent_dim: Option<usize>,
    pub predictor_hidden: Option<usize>,
}

impl ModelSizes {
    pub fn apply(&self, mut config: ModelConfig) -> ModelConfig {
        let set = |slot: &mut usize, v: Option<usize>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut config.semantic_dim, self.semantic_dim);
        set(&mut config.semantic_hidden, self.semantic_hidden);
        set(&mut config.rule_dim, self.rule_dim);
        set(&mut config.rule_hidden, self.rule_hidden);
        set(&mut config.hidden1, self.hidden1);
        set(&mut config.hidden2, self.hidden2);
        set(&mut config.latent_dim, self.latent_dim);
        set(&mut config.predictor_hidden, self.predictor_hidden);
        config
    }
}

fn default_config_id() -> String {
    "run".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_config_id")]
    pub config_id: String,
    /// Dataset manifest.
    pub dataset: PathBuf,
    /// Rule file.
    pub rules: PathBuf,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelSizes,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    #[serde(default)]
    pub refine: bool,
}

impl RunConfig {
    /// Reads a config and resolves its paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        config.dataset = base.join(&config.dataset);
        config.rules = base.join(&config.rules);
        config.out = config.out.map(|o| base.join(o));
        Ok(config)
    }

    /// `--seed` replaces both the training and the clustering seed.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.train.seed = s;
            self.clustering.seed = s;
        }
        self
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.clustering.k == 0 {
            return Err(CliError::config("clustering.k must be at least 1"));
        }
        if self.clustering.method == Method::Fcm && self.clustering.k < 2 {
            return Err(CliError::config("fcm needs clustering.k >= 2"));
        }
        if !(self.clustering.m > 1.0 && self.clustering.m.is_finite()) {
            return Err(CliError::config("clustering.m must be finite and > 1"));
        }
        self.train.validate().map_err(CliError::from_core)?;
        Ok(())
    }
}
