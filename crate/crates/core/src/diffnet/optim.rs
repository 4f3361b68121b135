//! Adam with decoupled weight decay.
//!
//! Each step applies `p ← p − lr·λ·p` directly to the parameters, then the
//! bias-corrected adaptive-moment update. Decay never enters the moment
//! estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

/// Optimizer state: step counter plus first/second moment per tensor.
#[derive(Debug, Clone)]
pub struct AdamW {
    config: AdamWConfig,
    step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamW {
    /// `shapes` lists the flat length of every parameter tensor, in the order
    /// they will be passed to [`AdamW::step`].
    pub fn new(config: AdamWConfig, shapes: &[usize]) -> Self {
        AdamW {
            config,
            step: 0,
            first_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn config(&self) -> &AdamWConfig {
        &self.config
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::shape(format!(
                "optimizer tracks {} tensors, got {} parameters and {} gradients",
                self.first_moment.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.first_moment[i].len() || g.len() != p.len() {
                return Err(Error::shape(format!(
                    "tensor {i}: optimizer length {}, parameter {}, gradient {}",
                    self.first_moment[i].len(),
                    p.len(),
                    g.len()
                )));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::numeric(format!("gradient tensor {i}")));
            }
        }

        self.step += 1;
        let AdamWConfig {
            learning_rate: lr,
            beta1,
            beta2,
            epsilon,
            weight_decay,
        } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        let decay = 1.0 - lr * weight_decay;

        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(
            self.first_moment
                .iter_mut()
                .zip(self.second_moment.iter_mut()),
        ) {
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = beta1 * m[j] + (1.0 - beta1) * gj;
                v[j] = beta2 * v[j] + (1.0 - beta2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] = p[j] * decay - lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_without_decay_is_noop() {
        let cfg = AdamWConfig {
            weight_decay: 0.0,
            ..Default::default()
        };
        let mut opt = AdamW::new(cfg, &[3]);
        let mut p = vec![1.0, -2.0, 0.5];
        let g = vec![0.0; 3];
        for _ in 0..5 {
            opt.step(&mut [&mut p], &[&g]).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(opt.steps_taken(), 5);
    }

    #[test]
    fn zero_gradient_applies_pure_decay() {
        let cfg = AdamWConfig {
            learning_rate: 0.01,
            weight_decay: 0.1,
            ..Default::default()
        };
        let mut opt = AdamW::new(cfg, &[2]);
        let mut p = vec![2.0, -4.0];
        opt.step(&mut [&mut p], &[&[0.0, 0.0]]).unwrap();
        let f = 1.0 - 0.01 * 0.1;
        assert_eq!(p, vec![2.0 * f, -4.0 * f]);
    }

    #[test]
    fn converges_on_scalar_quadratic() {
        // f(w) = (w - 3)^2
        let cfg = AdamWConfig {
            learning_rate: 0.1,
            ..Default::default()
        };
        let mut opt = AdamW::new(cfg, &[1]);
        let mut w = vec![0.0];
        for _ in 0..50 {
            let g = [2.0 * (w[0] - 3.0)];
            opt.step(&mut [&mut w], &[&g]).unwrap();
        }
        assert!((w[0] - 3.0).abs() < 0.5, "w = {}", w[0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // Bias correction makes the first update exactly lr * sign(g) (up to eps).
        let cfg = AdamWConfig {
            learning_rate: 0.05,
            weight_decay: 0.0,
            ..Default::default()
        };
        let mut opt = AdamW::new(cfg, &[2]);
        let mut p = vec![0.0, 0.0];
        opt.step(&mut [&mut p], &[&[3.0, -0.2]]).unwrap();
        assert!((p[0] + 0.05).abs() < 1e-8);
        assert!((p[1] - 0.05).abs() < 1e-8);
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let mut opt = AdamW::new(AdamWConfig::default(), &[1]);
        let mut p = vec![0.0];
        let err = opt.step(&mut [&mut p], &[&[f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::Numeric { .. }));
        assert_eq!(p, vec![0.0]);
        assert_eq!(opt.steps_taken(), 0);
    }

    #[test]
    fn rejects_incongruent_shapes() {
        let mut opt = AdamW::new(AdamWConfig::default(), &[2]);
        let mut p = vec![0.0];
        assert!(opt.step(&mut [&mut p], &[&[0.0]]).is_err());
    }
}
