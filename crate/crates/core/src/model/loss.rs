//! The four loss components and their gradients.

use serde::{Deserialize, Serialize};

use crate::diffnet::matrix::{dot, norm};
use crate::diffnet::{mse, sigmoid, Matrix};
use crate::error::{Error, Result};

/// Per-epoch (or per-batch) loss values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub alpha: f64,
    pub recon: f64,
    pub kl: f64,
    pub consistency: f64,
    pub violation: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// Combines components as `recon + β·kl + α·(consistency + violation)`.
    pub fn combine(
        recon: f64,
        kl: f64,
        consistency: f64,
        violation: f64,
        alpha: f64,
        beta: f64,
    ) -> Self {
        LossBreakdown {
            alpha,
            recon,
            kl,
            consistency,
            violation,
            total: recon + beta * kl + alpha * (consistency + violation),
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.recon,
            self.kl,
            self.consistency,
            self.violation,
            self.total,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Coefficients of a weighted loss `Σ wᵢ·componentᵢ`. The training objective
/// uses `recon = 1, kl = β, consistency = violation = α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub recon: f64,
    pub kl: f64,
    pub consistency: f64,
    pub violation: f64,
}

impl LossWeights {
    pub fn objective(alpha: f64, beta: f64) -> Self {
        LossWeights {
            recon: 1.0,
            kl: beta,
            consistency: alpha,
            violation: alpha,
        }
    }
}

pub fn loss_recon(joint: &Matrix, reconstruction: &Matrix) -> Result<f64> {
    mse(joint, reconstruction)
}

fn check_pair(a: &Matrix, b: &Matrix, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!(
            "{what}: shapes {:?} and {:?} differ",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Batch mean of `−½ Σᵢ (1 + log σᵢ² − μᵢ² − σᵢ²)`.
pub fn loss_kl(mu: &Matrix, logvar: &Matrix) -> Result<f64> {
    check_pair(mu, logvar, "kl")?;
    if mu.rows() == 0 {
        return Ok(0.0);
    }
    let sum: f64 = mu
        .as_slice()
        .iter()
        .zip(logvar.as_slice())
        .map(|(&m, &lv)| -0.5 * (1.0 + lv - m * m - lv.exp()))
        .sum();
    Ok(sum / mu.rows() as f64)
}

/// Gradients of [`loss_kl`] with respect to `mu` and `logvar`.
pub(crate) fn loss_kl_grad(mu: &Matrix, logvar: &Matrix) -> (Matrix, Matrix) {
    let b = mu.rows().max(1) as f64;
    let dmu = mu.map(|m| m / b);
    let dlv = logvar.map(|lv| 0.5 * (lv.exp() - 1.0) / b);
    (dmu, dlv)
}

#[inline]
fn cosine(a: &[f64], na: f64, b: &[f64], nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

fn check_consistency_inputs(z: &Matrix, rule_features: &Matrix) -> Result<()> {
    if z.rows() != rule_features.rows() {
        return Err(Error::shape(format!(
            "consistency: {} latent rows vs {} rule-feature rows",
            z.rows(),
            rule_features.rows()
        )));
    }
    if z.rows() < 2 {
        return Err(Error::usage(format!(
            "consistency loss needs a batch of at least 2, got {}",
            z.rows()
        )));
    }
    Ok(())
}

/// Mean over ordered pairs `i ≠ j` of `(cos(zᵢ, zⱼ) − cos(rᵢ, rⱼ))²`.
/// Zero vectors have similarity 0 with everything.
pub fn loss_consistency(z: &Matrix, rule_features: &Matrix) -> Result<f64> {
    check_consistency_inputs(z, rule_features)?;
    let b = z.rows();
    let zn: Vec<f64> = z.row_iter().map(norm).collect();
    let rn: Vec<f64> = rule_features.row_iter().map(norm).collect();
    let mut sum = 0.0;
    for i in 0..b {
        for j in (i + 1)..b {
            let cz = cosine(z.row(i), zn[i], z.row(j), zn[j]);
            let cr = cosine(rule_features.row(i), rn[i], rule_features.row(j), rn[j]);
            sum += (cz - cr) * (cz - cr);
        }
    }
    // each unordered pair stands for two ordered pairs
    Ok(2.0 * sum / (b * (b - 1)) as f64)
}

/// d cos(a, b) / d a, accumulated into `out` with coefficient `g`.
#[inline]
fn add_cosine_grad(g: f64, a: &[f64], na: f64, b: &[f64], nb: f64, cos: f64, out: &mut [f64]) {
    if na == 0.0 || nb == 0.0 {
        return;
    }
    let inv = 1.0 / (na * nb);
    let self_coef = cos / (na * na);
    for ((o, &ai), &bi) in out.iter_mut().zip(a).zip(b) {
        *o += g * (bi * inv - self_coef * ai);
    }
}

/// Gradients of [`loss_consistency`] with respect to `z` and the rule features.
pub(crate) fn loss_consistency_grad(
    z: &Matrix,
    rule_features: &Matrix,
) -> Result<(Matrix, Matrix)> {
    check_consistency_inputs(z, rule_features)?;
    let b = z.rows();
    let zn: Vec<f64> = z.row_iter().map(norm).collect();
    let rn: Vec<f64> = rule_features.row_iter().map(norm).collect();
    let mut dz = Matrix::zeros(z.rows(), z.cols());
    let mut dr = Matrix::zeros(rule_features.rows(), rule_features.cols());
    let scale = 4.0 / (b * (b - 1)) as f64;
    for i in 0..b {
        for j in (i + 1)..b {
            let (zi, zj) = (z.row(i), z.row(j));
            let (ri, rj) = (rule_features.row(i), rule_features.row(j));
            let cz = cosine(zi, zn[i], zj, zn[j]);
            let cr = cosine(ri, rn[i], rj, rn[j]);
            let g = scale * (cz - cr);
            if g == 0.0 {
                continue;
            }
            add_cosine_grad(g, zi, zn[i], zj, zn[j], cz, dz.row_mut(i));
            add_cosine_grad(g, zj, zn[j], zi, zn[i], cz, dz.row_mut(j));
            add_cosine_grad(-g, ri, rn[i], rj, rn[j], cr, dr.row_mut(i));
            add_cosine_grad(-g, rj, rn[j], ri, rn[i], cr, dr.row_mut(j));
        }
    }
    Ok((dz, dr))
}

fn check_targets(pred: &Matrix, target: &Matrix) -> Result<()> {
    check_pair(pred, target, "violation")?;
    if let Some(bad) = target.as_slice().iter().find(|&&t| t != 0.0 && t != 1.0) {
        return Err(Error::usage(format!(
            "violation target {bad} is not binary"
        )));
    }
    Ok(())
}

/// Mean squared difference between `sigmoid(pred)` and the binary targets.
pub fn loss_violation(pred: &Matrix, target: &Matrix) -> Result<f64> {
    check_targets(pred, target)?;
    let n = pred.as_slice().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(&p, &t)| {
            let d = sigmoid(p) - t;
            d * d
        })
        .sum();
    Ok(sum / n as f64)
}

pub(crate) fn loss_violation_grad(pred: &Matrix, target: &Matrix) -> Result<Matrix> {
    check_targets(pred, target)?;
    let n = pred.as_slice().len().max(1) as f64;
    let values = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(&p, &t)| {
            let s = sigmoid(p);
            2.0 * (s - t) * s * (1.0 - s) / n
        })
        .collect();
    Matrix::from_vec(pred.rows(), pred.cols(), values)
}
