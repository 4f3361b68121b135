//! Constraint-guided multimodal clustering: a variational autoencoder trained
//! with rule-consistency and rule-violation losses, k-means / fuzzy c-means
//! on its latent means, rule-guided refinement and cluster-validity metrics.

pub mod clustering;
pub mod diffnet;
pub mod error;
pub mod features;
pub mod metrics;
pub mod model;
pub mod rules;

pub use clustering::{HardAssignment, RefinementLog, SoftAssignment};
pub use error::{Error, Result};
pub use features::{Dataset, FeatureRecord};
pub use metrics::EvaluationReport;
pub use model::{LossBreakdown, ModelConfig, ModelParams, TrainConfig, TrainedModel};
pub use rules::{AttributeSchema, AttributeVector, RuleSet, ViolationReport};
