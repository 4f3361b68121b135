use rand::Rng;

use super::config::ModelConfig;
use crate::diffnet::{Activation, Dense, DenseGrad, Mlp};
use crate::error::{Error, Result};

/// Names of the trainable layers, in storage and gradient order.
pub const LAYER_NAMES: [&str; 13] = [
    "semantic.0",
    "semantic.1",
    "rule.0",
    "rule.1",
    "encoder.0",
    "encoder.1",
    "mu",
    "logvar",
    "decoder.0",
    "decoder.1",
    "decoder.2",
    "predictor.0",
    "predictor.1",
];

/// All trainable weights of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub semantic: Mlp,
    pub rule: Mlp,
    pub encoder: Mlp,
    pub mu_head: Dense,
    pub logvar_head: Dense,
    pub decoder: Mlp,
    pub predictor: Mlp,
}

/// Gradient of a scalar loss, one entry per layer in [`LAYER_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseGrad>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|g| g.weights.as_slice().iter().chain(&g.biases).copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(DenseGrad::is_finite)
    }
}

type LayerDims = [(usize, usize, Activation); 13];

fn layer_dims(c: &ModelConfig) -> LayerDims {
    use Activation::{Identity, Relu};
    [
        (c.semantic_raw_dim, c.semantic_hidden, Relu),
        (c.semantic_hidden, c.semantic_dim, Relu),
        (c.attribute_width, c.rule_hidden, Relu),
        (c.rule_hidden, c.rule_dim, Relu),
        (c.joint_dim(), c.hidden1, Relu),
        (c.hidden1, c.hidden2, Relu),
        (c.hidden2, c.latent_dim, Identity),
        (c.hidden2, c.latent_dim, Identity),
        (c.latent_dim, c.hidden2, Relu),
        (c.hidden2, c.hidden1, Relu),
        (c.hidden1, c.joint_dim(), Identity),
        (c.latent_dim, c.predictor_hidden, Relu),
        (c.predictor_hidden, c.rule_count, Identity),
    ]
}

impl ModelParams {
    fn assemble(mut layers: Vec<Dense>) -> Result<Self> {
        let mut take = |n: usize| layers.drain(..n).collect::<Vec<_>>();
        let semantic = Mlp::new(take(2))?;
        let rule = Mlp::new(take(2))?;
        let encoder = Mlp::new(take(2))?;
        let mut heads = take(2);
        let logvar_head = heads.pop().expect("two heads");
        let mu_head = heads.pop().expect("two heads");
        let decoder = Mlp::new(take(3))?;
        let predictor = Mlp::new(take(2))?;
        Ok(ModelParams {
            semantic,
            rule,
            encoder,
            mu_head,
            logvar_head,
            decoder,
            predictor,
        })
    }

    /// Glorot-uniform weights and zero biases, drawn layer by layer in
    /// [`LAYER_NAMES`] order.
    pub fn init<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let layers = layer_dims(config)
            .iter()
            .map(|&(i, o, a)| Dense::glorot(i, o, a, rng))
            .collect();
        Self::assemble(layers)
    }

    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let layers = layer_dims(config)
            .iter()
            .map(|&(i, o, a)| Dense::zeros(i, o, a))
            .collect();
        Self::assemble(layers)
    }

    /// Rebuilds parameters from the flat layout produced by [`ModelParams::flatten`].
    pub fn from_flat(config: &ModelConfig, values: &[f64]) -> Result<Self> {
        let mut params = Self::zeros(config)?;
        if values.len() != params.parameter_count() {
            return Err(Error::shape(format!(
                "{} parameter values for a model with {}",
                values.len(),
                params.parameter_count()
            )));
        }
        let mut offset = 0;
        for layer in params.layers_mut() {
            for t in layer.tensors_mut() {
                t.copy_from_slice(&values[offset..offset + t.len()]);
                offset += t.len();
            }
        }
        Ok(params)
    }

    pub fn layers(&self) -> Vec<&Dense> {
        let mut out: Vec<&Dense> = Vec::with_capacity(13);
        out.extend(self.semantic.layers());
        out.extend(self.rule.layers());
        out.extend(self.encoder.layers());
        out.push(&self.mu_head);
        out.push(&self.logvar_head);
        out.extend(self.decoder.layers());
        out.extend(self.predictor.layers());
        out
    }

    pub fn layers_mut(&mut self) -> Vec<&mut Dense> {
        let mut out: Vec<&mut Dense> = Vec::with_capacity(13);
        out.extend(self.semantic.layers_mut());
        out.extend(self.rule.layers_mut());
        out.extend(self.encoder.layers_mut());
        out.push(&mut self.mu_head);
        out.push(&mut self.logvar_head);
        out.extend(self.decoder.layers_mut());
        out.extend(self.predictor.layers_mut());
        out
    }

    /// Weights (row-major) then biases, layer by layer.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers()
            .into_iter()
            .flat_map(|l| l.weights().as_slice().iter().chain(l.biases()).copied())
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers().iter().map(|l| l.parameter_count()).sum()
    }

    /// Flat length of every tensor, in optimizer order.
    pub fn tensor_sizes(&self) -> Vec<usize> {
        self.layers()
            .iter()
            .flat_map(|l| l.tensors().map(<[f64]>::len))
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers()
            .iter()
            .all(|l| l.tensors().iter().all(|t| t.iter().all(|v| v.is_finite())))
    }

    /// Checks that layer shapes and activations match `config`.
    pub fn check(&self, config: &ModelConfig) -> Result<()> {
        for ((name, layer), (i, o, a)) in LAYER_NAMES
            .iter()
            .zip(self.layers())
            .zip(layer_dims(config))
        {
            if layer.in_dim() != i || layer.out_dim() != o || layer.activation() != a {
                return Err(Error::shape(format!(
                    "layer {name} is {}x{} {:?}, configuration expects {o}x{i} {a:?}",
                    layer.out_dim(),
                    layer.in_dim(),
                    layer.activation()
                )));
            }
        }
        Ok(())
    }
}
