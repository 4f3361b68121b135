use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rulevae::diffnet::{check_gradient, Activation, Matrix, Mlp};
use rulevae::model::{
    build_joint, encode, reparameterize_with, standard_normal, total_loss,
    weighted_loss_and_gradients, LossWeights, ModelConfig, ModelInput, ModelParams,
};

fn config() -> ModelConfig {
    ModelConfig {
        semantic_dim: 8,
        semantic_hidden: 8,
        rule_dim: 4,
        rule_hidden: 6,
        hidden1: 12,
        hidden2: 10,
        latent_dim: 3,
        predictor_hidden: 5,
        ..ModelConfig::new(16, 6, 5, 4)
    }
}

struct Fixture {
    config: ModelConfig,
    params: ModelParams,
    input: ModelInput,
    eps: Matrix,
    targets: Matrix,
}

/// Smallest |pre-activation| over every ReLU unit and sample.
fn relu_margin(params: &ModelParams, input: &ModelInput, eps: &Matrix) -> f64 {
    fn walk(mlp: &Mlp, x: &Matrix, margin: &mut f64) -> Matrix {
        let mut cur = x.clone();
        for layer in mlp.layers() {
            let pre = cur.matmul_transposed(layer.weights()).unwrap();
            let mut out = pre.clone();
            for r in 0..pre.rows() {
                for (c, b) in layer.biases().iter().enumerate() {
                    let v = pre.get(r, c) + b;
                    if layer.activation() == Activation::Relu {
                        *margin = margin.min(v.abs());
                    }
                    out.set(r, c, layer.activation().apply(v));
                }
            }
            cur = out;
        }
        cur
    }
    let mut m = f64::INFINITY;
    let ft = walk(&params.semantic, &input.semantic, &mut m);
    let fr = walk(&params.rule, &input.attributes, &mut m);
    let joint = build_joint(&input.visual, &ft, &fr).unwrap();
    walk(&params.encoder, &joint, &mut m);
    let (mu, lv) = encode(params, &joint).unwrap();
    let z = reparameterize_with(&mu, &lv, eps).unwrap();
    walk(&params.decoder, &z, &mut m);
    walk(&params.predictor, &z, &mut m);
    m
}

/// A random fixture whose ReLU inputs all stay clear of the kink, so central
/// differences with h = 1e-4 never straddle it.
fn fixture(seed: u64) -> Fixture {
    (0..)
        .map(|attempt| draw(seed * 1000 + attempt))
        .find(|f| relu_margin(&f.params, &f.input, &f.eps) > 0.01)
        .unwrap()
}

fn draw(seed: u64) -> Fixture {
    let config = config();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::init(&config, &mut rng).unwrap();
    // zero biases put some ReLU inputs exactly on the kink; move off it
    for layer in params.layers_mut() {
        let [_, biases] = layer.tensors_mut();
        for b in biases {
            *b = rng.random_range(-0.1..0.1);
        }
    }
    let n = 10;
    let mut attrs = Matrix::zeros(n, 5);
    for i in 0..n {
        attrs.set(i, 0, rng.random_range(0..2) as f64);
        attrs.set(i, 1, rng.random_range(0..2) as f64);
        attrs.set(i, 2 + rng.random_range(0..2), 1.0);
        attrs.set(i, 4, rng.sample(rand_distr::StandardNormal));
    }
    let input = ModelInput {
        visual: standard_normal(n, 16, &mut rng),
        semantic: standard_normal(n, 6, &mut rng),
        attributes: attrs,
    };
    let eps = standard_normal(n, config.latent_dim, &mut rng);
    let t = (0..n * 4).map(|_| rng.random_range(0..2) as f64).collect();
    let targets = Matrix::from_vec(n, 4, t).unwrap();
    Fixture {
        config,
        params,
        input,
        eps,
        targets,
    }
}

fn weighted(f: &Fixture, params: &ModelParams, w: LossWeights) -> f64 {
    let b = total_loss(params, &f.input, &f.eps, &f.targets, 0.0, 0.0).unwrap();
    w.recon * b.recon + w.kl * b.kl + w.consistency * b.consistency + w.violation * b.violation
}

fn assert_matches(f: &Fixture, w: LossWeights, what: &str) {
    let (_, grads) =
        weighted_loss_and_gradients(&f.params, &f.input, &f.eps, &f.targets, w).unwrap();
    let check = check_gradient(
        &f.params.flatten(),
        &grads.flatten(),
        |p| weighted(f, &ModelParams::from_flat(&f.config, p).unwrap(), w),
        1e-4,
        1e-4,
        1e-6,
    );
    assert!(
        check.passed(),
        "{what}: {} of {} entries disagree (max rel {:e})",
        check.mismatches.len(),
        check.checked,
        check.max_relative_error
    );
}

fn only(i: usize) -> LossWeights {
    let mut w = [0.0; 4];
    w[i] = 1.0;
    LossWeights {
        recon: w[0],
        kl: w[1],
        consistency: w[2],
        violation: w[3],
    }
}

#[test]
fn reconstruction_gradient() {
    assert_matches(&fixture(1), only(0), "recon");
}

#[test]
fn kl_gradient() {
    assert_matches(&fixture(2), only(1), "kl");
}

#[test]
fn consistency_gradient() {
    assert_matches(&fixture(3), only(2), "consistency");
}

#[test]
fn violation_gradient() {
    assert_matches(&fixture(4), only(3), "violation");
}

#[test]
fn objective_gradient() {
    for seed in 5..8 {
        assert_matches(
            &fixture(seed),
            LossWeights::objective(0.15, 1.0),
            "objective",
        );
    }
}

#[test]
fn gradient_reports_value_components() {
    let f = fixture(9);
    let (values, _) = weighted_loss_and_gradients(
        &f.params,
        &f.input,
        &f.eps,
        &f.targets,
        LossWeights::objective(0.15, 1.0),
    )
    .unwrap();
    let b = total_loss(&f.params, &f.input, &f.eps, &f.targets, 0.15, 1.0).unwrap();
    assert_eq!(values, [b.recon, b.kl, b.consistency, b.violation]);
}
