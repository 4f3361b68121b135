use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{rule_weight_schedule, ModelConfig, TrainConfig};
use super::input::{ModelInput, Preprocessor};
use super::loss::{LossBreakdown, LossWeights};
use super::network::{embed_input, standard_normal, total_loss, weighted_loss_and_gradients};
use super::params::ModelParams;
use crate::clustering::{kmeans, KMeansConfig};
use crate::diffnet::{AdamW, Matrix};
use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::rules::{violation_targets, RuleSet};

/// Trained parameters plus what is needed to feed new data through them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub preprocessor: Preprocessor,
    pub params: ModelParams,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    /// One entry per epoch: batch-size-weighted means of the batch losses.
    pub history: Vec<LossBreakdown>,
}

/// Checks that the model configuration fits the dataset and rule set.
fn check_compatible(dataset: &Dataset, ruleset: &RuleSet, config: &ModelConfig) -> Result<()> {
    if &ruleset.schema != dataset.schema() {
        return Err(Error::shape(
            "rule set and dataset declare different attribute schemas",
        ));
    }
    let expected = [
        ("visual_dim", dataset.visual_dim(), config.visual_dim),
        (
            "semantic_raw_dim",
            dataset.semantic_dim(),
            config.semantic_raw_dim,
        ),
        (
            "attribute_width",
            dataset.schema().encoded_width(),
            config.attribute_width,
        ),
        ("rule_count", ruleset.len(), config.rule_count),
    ];
    for (name, data, model) in expected {
        if data != model {
            return Err(Error::shape(format!(
                "model {name} is {model}, but the data requires {data}"
            )));
        }
    }
    Ok(())
}

/// Splits a permutation into batches; a trailing batch of one sample is
/// merged into the previous batch since the consistency loss needs pairs.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        out.pop();
        let start = (out.len() - 1) * size;
        *out.last_mut().expect("non-empty") = &order[start..];
    }
    out
}

fn diverged(epoch: usize, batch: usize, source: Error) -> Error {
    Error::Training {
        epoch,
        batch,
        source: Box::new(source),
    }
}

fn provisional_targets(
    params: &ModelParams,
    input: &ModelInput,
    ruleset: &RuleSet,
    dataset: &Dataset,
    config: &TrainConfig,
    epoch: usize,
) -> Result<Matrix> {
    let mu = embed_input(params, input)?;
    mu.ensure_finite("latent means")?;
    let k = config.provisional_k.min(mu.rows());
    let km = KMeansConfig {
        seed: config.seed.wrapping_add(epoch as u64),
        ..KMeansConfig::default()
    };
    let assignment = kmeans(&mu, k, &km)?;
    violation_targets(
        ruleset,
        &dataset.attributes(),
        Some((&assignment.labels, k)),
    )
}

/// Validates inputs and builds the untrained model, returning the generator
/// positioned just after parameter initialisation.
fn setup(
    dataset: &Dataset,
    ruleset: &RuleSet,
    model_config: &ModelConfig,
    config: &TrainConfig,
) -> Result<(TrainedModel, ChaCha8Rng)> {
    config.validate()?;
    model_config.validate()?;
    check_compatible(dataset, ruleset, model_config)?;
    if dataset.len() < 2 {
        return Err(Error::usage("training needs at least 2 records"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = ModelParams::init(model_config, &mut rng)?;
    let preprocessor = Preprocessor::fit(dataset, config.standardize)?;
    let model = TrainedModel {
        config: model_config.clone(),
        preprocessor,
        params,
    };
    Ok((model, rng))
}

/// The model [`train`] starts from: same validation, preprocessing and
/// seeded initialisation, no updates.
pub fn initial_model(
    dataset: &Dataset,
    ruleset: &RuleSet,
    model_config: &ModelConfig,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    Ok(setup(dataset, ruleset, model_config, config)?.0)
}

/// Mini-batch AdamW training of the full objective.
///
/// Parameters are initialised from `config.seed`; the same generator then
/// drives batch shuffling and reparameterization noise, so runs with equal
/// inputs are bit-identical. Cluster-level target columns are refreshed
/// every `provisional_period` epochs from a k-means clustering of the current
/// latent means.
pub fn train(
    dataset: &Dataset,
    ruleset: &RuleSet,
    model_config: &ModelConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let (model, mut rng) = setup(dataset, ruleset, model_config, config)?;
    let TrainedModel {
        preprocessor,
        mut params,
        ..
    } = model;
    let input = preprocessor.prepare(dataset)?;
    let has_cluster_rules = ruleset.rules.iter().any(|r| r.kind.is_cluster_level());
    let mut targets = violation_targets(ruleset, &dataset.attributes(), None)?;
    let mut optimizer = AdamW::new(config.optimizer(), &params.tensor_sizes());

    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let alpha = rule_weight_schedule(epoch, config);
        let weights = LossWeights::objective(alpha, config.beta);
        if has_cluster_rules && (epoch - 1) % config.provisional_period == 0 {
            targets = provisional_targets(&params, &input, ruleset, dataset, config, epoch)
                .map_err(|e| diverged(epoch, 0, e))?;
        }
        order.shuffle(&mut rng);
        let mut sums = [0.0; 4];
        for (b, idx) in batches(&order, config.batch_size).into_iter().enumerate() {
            let batch = input.select(idx);
            let batch_targets = targets.select_rows(idx);
            let eps = standard_normal(idx.len(), model_config.latent_dim, &mut rng);
            let (values, grads) =
                weighted_loss_and_gradients(&params, &batch, &eps, &batch_targets, weights)
                    .map_err(|e| diverged(epoch, b + 1, e))?;
            if values.iter().any(|v| !v.is_finite()) {
                return Err(diverged(epoch, b + 1, Error::numeric("loss")));
            }
            let grad_tensors: Vec<&[f64]> = grads.layers.iter().flat_map(|g| g.tensors()).collect();
            let mut param_tensors: Vec<&mut [f64]> = params
                .layers_mut()
                .into_iter()
                .flat_map(|l| l.tensors_mut())
                .collect();
            optimizer
                .step(&mut param_tensors, &grad_tensors)
                .map_err(|e| diverged(epoch, b + 1, e))?;
            for (s, v) in sums.iter_mut().zip(values) {
                *s += v * idx.len() as f64;
            }
        }
        let [r, k, c, v] = sums.map(|s| s / n as f64);
        history.push(LossBreakdown::combine(r, k, c, v, alpha, config.beta));
    }

    Ok(TrainOutcome {
        model: TrainedModel {
            config: model_config.clone(),
            preprocessor,
            params,
        },
        history,
    })
}

/// Latent means (no sampling) for every record.
pub fn embed(model: &TrainedModel, dataset: &Dataset) -> Result<Matrix> {
    let input = model.preprocessor.prepare(dataset)?;
    embed_input(&model.params, &input)
}

/// Full-dataset loss with zero reparameterization noise. Cluster-level
/// target columns are zero.
pub fn evaluate_loss(
    model: &TrainedModel,
    dataset: &Dataset,
    ruleset: &RuleSet,
    alpha: f64,
    beta: f64,
) -> Result<LossBreakdown> {
    check_compatible(dataset, ruleset, &model.config)?;
    let input = model.preprocessor.prepare(dataset)?;
    let targets = violation_targets(ruleset, &dataset.attributes(), None)?;
    let eps = Matrix::zeros(input.len(), model.config.latent_dim);
    total_loss(&model.params, &input, &eps, &targets, alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batching_merges_trailing_single() {
        let order: Vec<usize> = (0..7).collect();
        let b = batches(&order, 3);
        assert_eq!(b, vec![&[0, 1, 2][..], &[3, 4, 5, 6][..]]);
        let b = batches(&order, 4);
        assert_eq!(b.len(), 2);
        let b = batches(&order, 10);
        assert_eq!(b, vec![&order[..]]);
    }
}
