//! Dense layers and small multilayer perceptrons.
//!
//! A [`Dense`] layer computes `y = activation(W x + b)` for every row `x` of a
//! batch. Weights are stored row-major with shape `(out, in)`.
//!
//! Gradients are hand-derived: the forward pass keeps the inputs and outputs
//! of each layer in a [`MlpTrace`], and [`Mlp::backward`] walks it in reverse.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One fully connected layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    weights: Matrix,
    biases: Vec<f64>,
    activation: Activation,
}

/// Gradient of a scalar loss with respect to one [`Dense`] layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

impl DenseGrad {
    pub fn zeros_like(layer: &Dense) -> Self {
        DenseGrad {
            weights: Matrix::zeros(layer.out_dim(), layer.in_dim()),
            biases: vec![0.0; layer.out_dim()],
        }
    }

    pub fn tensors(&self) -> [&[f64]; 2] {
        [self.weights.as_slice(), &self.biases]
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.biases.iter().all(|v| v.is_finite())
    }
}

impl Dense {
    pub fn new(weights: Matrix, biases: Vec<f64>, activation: Activation) -> Result<Self> {
        if biases.len() != weights.rows() {
            return Err(Error::shape(format!(
                "bias length {} does not match {} output rows",
                biases.len(),
                weights.rows()
            )));
        }
        Ok(Dense {
            weights,
            biases,
            activation,
        })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (in + out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let mut weights = Matrix::zeros(out_dim, in_dim);
        if in_dim + out_dim > 0 {
            let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
            for w in weights.as_mut_slice() {
                *w = dist.sample(rng);
            }
        }
        Dense {
            weights,
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Dense {
            weights: Matrix::zeros(out_dim, in_dim),
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    #[inline]
    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.as_slice().len() + self.biases.len()
    }

    /// Weights then biases, the fixed order used by the optimizer and checkpoints.
    pub fn tensors(&self) -> [&[f64]; 2] {
        [self.weights.as_slice(), &self.biases]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 2] {
        [self.weights.as_mut_slice(), &mut self.biases]
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.in_dim() {
            return Err(Error::shape(format!(
                "layer expects {} inputs, got {}",
                self.in_dim(),
                x.cols()
            )));
        }
        let mut out = x.matmul_transposed(&self.weights)?;
        for r in 0..out.rows() {
            for (v, b) in out.row_mut(r).iter_mut().zip(&self.biases) {
                *v = self.activation.apply(*v + b);
            }
        }
        Ok(out)
    }

    /// Back-propagates `grad_out` (dL/dy) given the layer's input and output.
    /// Returns the parameter gradient and dL/dx.
    pub fn backward(
        &self,
        input: &Matrix,
        output: &Matrix,
        grad_out: &Matrix,
    ) -> Result<(DenseGrad, Matrix)> {
        if grad_out.shape() != output.shape() || input.rows() != output.rows() {
            return Err(Error::shape(format!(
                "backward through {}x{} layer with input {:?}, output {:?}, gradient {:?}",
                self.out_dim(),
                self.in_dim(),
                input.shape(),
                output.shape(),
                grad_out.shape()
            )));
        }
        let mut delta = grad_out.clone();
        if self.activation != Activation::Identity {
            for (d, &y) in delta.as_mut_slice().iter_mut().zip(output.as_slice()) {
                *d *= self.activation.derivative_from_output(y);
            }
        }
        let weights = delta.transpose_matmul(input)?;
        let biases = delta.sum_rows();
        let grad_in = delta.matmul(&self.weights)?;
        Ok((DenseGrad { weights, biases }, grad_in))
    }
}

/// A stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Activations recorded by [`Mlp::forward_trace`]: `values[0]` is the input,
/// `values[i + 1]` the output of layer `i`.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    values: Vec<Matrix>,
}

impl MlpTrace {
    pub fn output(&self) -> &Matrix {
        self.values.last().expect("trace holds the input at least")
    }
}

impl Mlp {
    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::shape(format!(
                    "layer with {} outputs feeds layer with {} inputs",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Mlp { layers })
    }

    /// Glorot-initialised MLP through `dims` (input first). Every layer uses
    /// `hidden` except the last, which uses `output`.
    pub fn glorot<R: Rng + ?Sized>(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Self {
        let n = dims.len().saturating_sub(1);
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { output } else { hidden };
                Dense::glorot(dims[i], dims[i + 1], act, rng)
            })
            .collect();
        Mlp { layers }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, Dense::in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, Dense::out_dim)
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.forward(&cur)?;
        }
        Ok(cur)
    }

    pub fn forward_trace(&self, x: &Matrix) -> Result<MlpTrace> {
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(x.clone());
        for layer in &self.layers {
            let next = layer.forward(values.last().expect("non-empty"))?;
            values.push(next);
        }
        Ok(MlpTrace { values })
    }

    /// Per-layer gradients (in layer order) and dL/d(input).
    pub fn backward(
        &self,
        trace: &MlpTrace,
        grad_out: &Matrix,
    ) -> Result<(Vec<DenseGrad>, Matrix)> {
        if trace.values.len() != self.layers.len() + 1 {
            return Err(Error::shape("trace does not belong to this network"));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (lg, gin) = layer.backward(&trace.values[i], &trace.values[i + 1], &g)?;
            grads.push(lg);
            g = gin;
        }
        grads.reverse();
        Ok((grads, g))
    }
}
