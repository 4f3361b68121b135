use serde::{Deserialize, Serialize};

use crate::diffnet::AdamWConfig;
use crate::error::{Error, Result};

fn default_semantic_dim() -> usize {
    256
}
fn default_rule_dim() -> usize {
    16
}
fn default_hidden1() -> usize {
    512
}
fn default_hidden2() -> usize {
    256
}
fn default_latent_dim() -> usize {
    64
}
fn default_aux_hidden() -> usize {
    32
}

/// Network dimensions. `attribute_width` is the encoded attribute width (one
/// column per boolean/numeric attribute, one per categorical level) and
/// `rule_count` the number of rule predictor outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub visual_dim: usize,
    pub semantic_raw_dim: usize,
    pub attribute_width: usize,
    pub rule_count: usize,
    #[serde(default = "default_semantic_dim")]
    pub semantic_dim: usize,
    #[serde(default = "default_hidden2")]
    pub semantic_hidden: usize,
    #[serde(default = "default_rule_dim")]
    pub rule_dim: usize,
    #[serde(default = "default_aux_hidden")]
    pub rule_hidden: usize,
    #[serde(default = "default_hidden1")]
    pub hidden1: usize,
    #[serde(default = "default_hidden2")]
    pub hidden2: usize,
    #[serde(default = "default_latent_dim")]
    pub latent_dim: usize,
    #[serde(default = "default_aux_hidden")]
    pub predictor_hidden: usize,
}

impl ModelConfig {
    /// Default layer sizes around the given input widths.
    pub fn new(
        visual_dim: usize,
        semantic_raw_dim: usize,
        attribute_width: usize,
        rule_count: usize,
    ) -> Self {
        ModelConfig {
            visual_dim,
            semantic_raw_dim,
            attribute_width,
            rule_count,
            semantic_dim: default_semantic_dim(),
            semantic_hidden: default_hidden2(),
            rule_dim: default_rule_dim(),
            rule_hidden: default_aux_hidden(),
            hidden1: default_hidden1(),
            hidden2: default_hidden2(),
            latent_dim: default_latent_dim(),
            predictor_hidden: default_aux_hidden(),
        }
    }

    pub fn joint_dim(&self) -> usize {
        self.visual_dim + self.semantic_dim + self.rule_dim
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("visual_dim", self.visual_dim),
            ("semantic_raw_dim", self.semantic_raw_dim),
            ("attribute_width", self.attribute_width),
            ("semantic_dim", self.semantic_dim),
            ("semantic_hidden", self.semantic_hidden),
            ("rule_dim", self.rule_dim),
            ("rule_hidden", self.rule_hidden),
            ("hidden1", self.hidden1),
            ("hidden2", self.hidden2),
            ("latent_dim", self.latent_dim),
            ("predictor_hidden", self.predictor_hidden),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::usage(format!(
                "model dimension {name} must be at least 1"
            )));
        }
        Ok(())
    }
}

/// Training hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// KL weight β.
    pub beta: f64,
    /// Final rule-loss weight α_max.
    pub rule_weight: f64,
    pub warmup_fraction: f64,
    /// Epochs between refreshes of the provisional clustering.
    pub provisional_period: usize,
    /// Cluster count of the provisional clustering.
    pub provisional_k: usize,
    /// Standardize visual/semantic columns before training.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamWConfig::default();
        TrainConfig {
            epochs: 40,
            batch_size: 64,
            learning_rate: adam.learning_rate,
            weight_decay: adam.weight_decay,
            beta: 1.0,
            rule_weight: 0.15,
            warmup_fraction: 0.5,
            provisional_period: 5,
            provisional_k: 4,
            standardize: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::usage(m.to_string()));
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if self.batch_size < 2 {
            return fail("batch_size must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.warmup_fraction) {
            return fail("warmup_fraction must lie in [0, 1]");
        }
        if !(self.rule_weight >= 0.0 && self.rule_weight.is_finite()) {
            return fail("rule_weight must be a finite non-negative number");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return fail("beta must be a finite non-negative number");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return fail("weight_decay must be non-negative");
        }
        if self.provisional_period == 0 {
            return fail("provisional_period must be at least 1");
        }
        if self.provisional_k == 0 {
            return fail("provisional_k must be at least 1");
        }
        Ok(())
    }

    pub fn optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            ..AdamWConfig::default()
        }
    }
}

/// Rule-loss weight for a 1-based epoch: a linear ramp from 0 at epoch 1 to
/// `rule_weight` at epoch `ceil(warmup_fraction · epochs)`, constant after.
pub fn rule_weight_schedule(epoch: usize, config: &TrainConfig) -> f64 {
    let end = (config.warmup_fraction * config.epochs as f64).ceil() as usize;
    if end <= 1 || epoch >= end {
        return config.rule_weight;
    }
    let epoch = epoch.max(1);
    config.rule_weight * (epoch - 1) as f64 / (end - 1) as f64
}
