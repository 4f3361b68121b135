//! Forward passes and the hand-derived backward pass of the full objective.

use rand::Rng;
use rand_distr::StandardNormal;

use super::input::ModelInput;
use super::loss::{
    loss_consistency, loss_consistency_grad, loss_kl, loss_kl_grad, loss_recon, loss_violation,
    loss_violation_grad, LossBreakdown, LossWeights,
};
use super::params::{Gradients, ModelParams};
use crate::diffnet::{mse_grad, Matrix, MlpTrace};
use crate::error::{Error, Result};

pub fn semantic_encode(params: &ModelParams, semantic: &Matrix) -> Result<Matrix> {
    params.semantic.forward(semantic)
}

pub fn rule_encode(params: &ModelParams, attributes: &Matrix) -> Result<Matrix> {
    params.rule.forward(attributes)
}

/// Row-wise concatenation `visual ⊕ semantic ⊕ rule`.
pub fn build_joint(visual: &Matrix, semantic: &Matrix, rule: &Matrix) -> Result<Matrix> {
    Matrix::hconcat(&[visual, semantic, rule])
}

pub fn encode(params: &ModelParams, joint: &Matrix) -> Result<(Matrix, Matrix)> {
    let h = params.encoder.forward(joint)?;
    Ok((params.mu_head.forward(&h)?, params.logvar_head.forward(&h)?))
}

/// Standard-normal noise of the given shape.
pub fn standard_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let values = (0..rows * cols)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    Matrix::from_vec(rows, cols, values).expect("length matches")
}

/// `mu + exp(logvar / 2) ⊙ eps` for given noise.
pub fn reparameterize_with(mu: &Matrix, logvar: &Matrix, eps: &Matrix) -> Result<Matrix> {
    if mu.shape() != logvar.shape() || mu.shape() != eps.shape() {
        return Err(Error::shape(format!(
            "reparameterize: mu {:?}, logvar {:?}, noise {:?}",
            mu.shape(),
            logvar.shape(),
            eps.shape()
        )));
    }
    let values = mu
        .as_slice()
        .iter()
        .zip(logvar.as_slice())
        .zip(eps.as_slice())
        .map(|((&m, &lv), &e)| m + (0.5 * lv).exp() * e)
        .collect();
    Matrix::from_vec(mu.rows(), mu.cols(), values)
}

pub fn reparameterize<R: Rng + ?Sized>(
    mu: &Matrix,
    logvar: &Matrix,
    rng: &mut R,
) -> Result<Matrix> {
    let eps = standard_normal(mu.rows(), mu.cols(), rng);
    reparameterize_with(mu, logvar, &eps)
}

pub fn decode(params: &ModelParams, z: &Matrix) -> Result<Matrix> {
    params.decoder.forward(z)
}

/// Raw (pre-sigmoid) rule violation predictions.
pub fn predict_violations(params: &ModelParams, z: &Matrix) -> Result<Matrix> {
    params.predictor.forward(z)
}

/// Latent means for every row of `input`.
pub fn embed_input(params: &ModelParams, input: &ModelInput) -> Result<Matrix> {
    let ft = semantic_encode(params, &input.semantic)?;
    let fr = rule_encode(params, &input.attributes)?;
    let joint = build_joint(&input.visual, &ft, &fr)?;
    Ok(encode(params, &joint)?.0)
}

struct Forward {
    semantic: MlpTrace,
    rule: MlpTrace,
    joint: Matrix,
    encoder: MlpTrace,
    mu: Matrix,
    logvar: Matrix,
    z: Matrix,
    decoder: MlpTrace,
    predictor: MlpTrace,
}

fn forward(params: &ModelParams, input: &ModelInput, eps: &Matrix) -> Result<Forward> {
    let semantic = params.semantic.forward_trace(&input.semantic)?;
    let rule = params.rule.forward_trace(&input.attributes)?;
    let joint = build_joint(&input.visual, semantic.output(), rule.output())?;
    let encoder = params.encoder.forward_trace(&joint)?;
    let mu = params.mu_head.forward(encoder.output())?;
    let logvar = params.logvar_head.forward(encoder.output())?;
    let z = reparameterize_with(&mu, &logvar, eps)?;
    let decoder = params.decoder.forward_trace(&z)?;
    let predictor = params.predictor.forward_trace(&z)?;
    Ok(Forward {
        semantic,
        rule,
        joint,
        encoder,
        mu,
        logvar,
        z,
        decoder,
        predictor,
    })
}

fn components(f: &Forward, targets: &Matrix) -> Result<[f64; 4]> {
    Ok([
        loss_recon(&f.joint, f.decoder.output())?,
        loss_kl(&f.mu, &f.logvar)?,
        loss_consistency(&f.z, f.rule.output())?,
        loss_violation(f.predictor.output(), targets)?,
    ])
}

/// Forward pass of the objective on one batch with fixed noise `eps`.
pub fn total_loss(
    params: &ModelParams,
    input: &ModelInput,
    eps: &Matrix,
    targets: &Matrix,
    alpha: f64,
    beta: f64,
) -> Result<LossBreakdown> {
    let f = forward(params, input, eps)?;
    let [r, k, c, v] = components(&f, targets)?;
    Ok(LossBreakdown::combine(r, k, c, v, alpha, beta))
}

/// Value and parameter gradient of `Σ wᵢ·componentᵢ` on one batch.
///
/// The reconstruction target is the joint vector itself, so its gradient
/// flows back into the semantic and rule encoders as well.
pub fn weighted_loss_and_gradients(
    params: &ModelParams,
    input: &ModelInput,
    eps: &Matrix,
    targets: &Matrix,
    weights: LossWeights,
) -> Result<([f64; 4], Gradients)> {
    let f = forward(params, input, eps)?;
    let values = components(&f, targets)?;

    // reconstruction: d/dR = -d/dJ
    let mut d_recon = mse_grad(f.decoder.output(), &f.joint)?;
    d_recon.scale(weights.recon);
    let mut d_joint = d_recon.map(|g| -g);
    let (dec_grads, mut dz) = params.decoder.backward(&f.decoder, &d_recon)?;

    let mut d_pred = loss_violation_grad(f.predictor.output(), targets)?;
    d_pred.scale(weights.violation);
    let (pred_grads, dz_pred) = params.predictor.backward(&f.predictor, &d_pred)?;
    dz.add_assign(&dz_pred)?;

    let (mut dz_cons, mut dr_cons) = loss_consistency_grad(&f.z, f.rule.output())?;
    dz_cons.scale(weights.consistency);
    dr_cons.scale(weights.consistency);
    dz.add_assign(&dz_cons)?;

    let (mut dmu, mut dlv) = loss_kl_grad(&f.mu, &f.logvar);
    dmu.scale(weights.kl);
    dlv.scale(weights.kl);
    dmu.add_assign(&dz)?;
    for (((g, &d), &lv), &e) in dlv
        .as_mut_slice()
        .iter_mut()
        .zip(dz.as_slice())
        .zip(f.logvar.as_slice())
        .zip(eps.as_slice())
    {
        *g += d * e * 0.5 * (0.5 * lv).exp();
    }

    let h2 = f.encoder.output();
    let (mu_grad, mut dh) = params.mu_head.backward(h2, &f.mu, &dmu)?;
    let (lv_grad, dh_lv) = params.logvar_head.backward(h2, &f.logvar, &dlv)?;
    dh.add_assign(&dh_lv)?;
    let (enc_grads, dj_enc) = params.encoder.backward(&f.encoder, &dh)?;
    d_joint.add_assign(&dj_enc)?;

    let widths = [
        input.visual.cols(),
        f.semantic.output().cols(),
        f.rule.output().cols(),
    ];
    let parts = d_joint.hsplit(&widths)?;
    let mut dr = parts[2].clone();
    dr.add_assign(&dr_cons)?;
    let (sem_grads, _) = params.semantic.backward(&f.semantic, &parts[1])?;
    let (rule_grads, _) = params.rule.backward(&f.rule, &dr)?;

    let mut layers = Vec::with_capacity(13);
    layers.extend(sem_grads);
    layers.extend(rule_grads);
    layers.extend(enc_grads);
    layers.push(mu_grad);
    layers.push(lv_grad);
    layers.extend(dec_grads);
    layers.extend(pred_grads);
    Ok((values, Gradients { layers }))
}

/// [`total_loss`] together with its parameter gradient.
pub fn loss_and_gradients(
    params: &ModelParams,
    input: &ModelInput,
    eps: &Matrix,
    targets: &Matrix,
    alpha: f64,
    beta: f64,
) -> Result<(LossBreakdown, Gradients)> {
    let ([r, k, c, v], grads) = weighted_loss_and_gradients(
        params,
        input,
        eps,
        targets,
        LossWeights::objective(alpha, beta),
    )?;
    Ok((LossBreakdown::combine(r, k, c, v, alpha, beta), grads))
}
