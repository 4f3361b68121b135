//! The rule-guided VAE: configuration, parameters, forward/backward passes,
//! loss components, training and checkpoints.

mod checkpoint;
mod config;
mod input;
mod loss;
mod network;
mod params;
mod train;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, history_csv, latent_csv, load_checkpoint,
    save_checkpoint, write_history, write_latent, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use config::{rule_weight_schedule, ModelConfig, TrainConfig};
pub use input::{ModelInput, Preprocessor};
pub use loss::{loss_consistency, loss_kl, loss_recon, loss_violation, LossBreakdown, LossWeights};
pub use network::{
    build_joint, decode, embed_input, encode, loss_and_gradients, predict_violations,
    reparameterize, reparameterize_with, rule_encode, semantic_encode, standard_normal, total_loss,
    weighted_loss_and_gradients,
};
pub use params::{Gradients, ModelParams, LAYER_NAMES};
pub use train::{embed, evaluate_loss, initial_model, train, TrainOutcome, TrainedModel};
