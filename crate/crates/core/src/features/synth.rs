use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::io::parse_attributes;
use super::{Dataset, FeatureRecord};
use crate::error::{Error, Result};
use crate::rules::{AttributeKind, AttributeSchema};

fn default_mean_scale() -> f64 {
    1.0
}

/// Parameters of the synthetic generator.
///
/// Group `g` draws its visual and semantic means once from
/// `N(0, mean_scale²)`; every sample adds `N(0, noise_scale²)` noise per
/// dimension. Attributes copy the group template, each entry replaced with
/// probability `attribute_flip_probability` (booleans flip, categoricals take
/// a different level uniformly, numerics take another group's template value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub group_count: usize,
    pub samples_per_group: usize,
    pub visual_dim: usize,
    pub semantic_dim: usize,
    pub schema: AttributeSchema,
    /// One attribute map per group, keyed by attribute name.
    pub templates: Vec<BTreeMap<String, Value>>,
    pub noise_scale: f64,
    pub attribute_flip_probability: f64,
    #[serde(default = "default_mean_scale")]
    pub mean_scale: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.group_count == 0 || self.samples_per_group == 0 {
            return Err(Error::usage(
                "group_count and samples_per_group must be at least 1",
            ));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::usage("noise_scale must be finite and non-negative"));
        }
        if !(self.mean_scale >= 0.0 && self.mean_scale.is_finite()) {
            return Err(Error::usage("mean_scale must be finite and non-negative"));
        }
        if !(0.0..1.0).contains(&self.attribute_flip_probability) {
            return Err(Error::usage(
                "attribute_flip_probability must lie in [0, 1)",
            ));
        }
        if self.templates.len() != self.group_count {
            return Err(Error::usage(format!(
                "{} templates for {} groups",
                self.templates.len(),
                self.group_count
            )));
        }
        Ok(())
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Deterministic for a fixed spec. Record ids are `g{group}_{index}`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let schema = &spec.schema;
    let templates = spec
        .templates
        .iter()
        .enumerate()
        .map(|(g, t)| {
            let map = t.clone().into_iter().collect();
            parse_attributes(schema, &map).map_err(|e| Error::usage(format!("template {g}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let means: Vec<(Vec<f64>, Vec<f64>)> = (0..spec.group_count)
        .map(|_| {
            let v = gaussian_vec(&mut rng, spec.visual_dim, spec.mean_scale);
            let s = gaussian_vec(&mut rng, spec.semantic_dim, spec.mean_scale);
            (v, s)
        })
        .collect();

    let width = spec.group_count.to_string().len().max(1);
    let mut records = Vec::with_capacity(spec.group_count * spec.samples_per_group);
    for (g, (vm, sm)) in means.iter().enumerate() {
        for i in 0..spec.samples_per_group {
            let visual = vm
                .iter()
                .zip(gaussian_vec(&mut rng, spec.visual_dim, spec.noise_scale))
                .map(|(m, e)| m + e)
                .collect();
            let semantic = sm
                .iter()
                .zip(gaussian_vec(&mut rng, spec.semantic_dim, spec.noise_scale))
                .map(|(m, e)| m + e)
                .collect();
            let mut attrs = templates[g].as_slice().to_vec();
            for (a, value) in attrs.iter_mut().enumerate() {
                if rng.random::<f64>() >= spec.attribute_flip_probability {
                    continue;
                }
                match &schema.get(a).kind {
                    AttributeKind::Boolean => *value = 1.0 - *value,
                    AttributeKind::Categorical { levels } if levels.len() > 1 => {
                        let shift = rng.random_range(1..levels.len());
                        *value = ((*value as usize + shift) % levels.len()) as f64;
                    }
                    AttributeKind::Numeric { .. } if spec.group_count > 1 => {
                        let shift = rng.random_range(1..spec.group_count);
                        *value = templates[(g + shift) % spec.group_count].value(a);
                    }
                    _ => {}
                }
            }
            records.push(FeatureRecord {
                id: format!("g{g:0width$}_{i:04}"),
                visual,
                semantic,
                attributes: attrs.into(),
            });
        }
    }
    Dataset::new(schema.clone(), records, spec.visual_dim, spec.semantic_dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn spec(noise: f64, flip: f64, seed: u64) -> SyntheticSpec {
        serde_json::from_value(json!({
            "group_count": 2,
            "samples_per_group": 5,
            "visual_dim": 4,
            "semantic_dim": 3,
            "schema": [{"name": "is_uav", "kind": "boolean"},
                       {"name": "body", "kind": "categorical", "levels": ["a", "b", "c"]},
                       {"name": "h", "kind": "numeric"}],
            "templates": [{"is_uav": true, "body": "a", "h": 0.3},
                          {"is_uav": false, "body": "c", "h": 0.5}],
            "noise_scale": noise,
            "attribute_flip_probability": flip,
            "seed": seed
        }))
        .unwrap()
    }

    #[test]
    fn zero_noise_gives_group_means() {
        let ds = generate_synthetic(&spec(0.0, 0.0, 1)).unwrap();
        assert_eq!(ds.len(), 10);
        let mut distinct: Vec<Vec<f64>> = ds.records().iter().map(|r| r.visual.clone()).collect();
        distinct.dedup();
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate_synthetic(&spec(0.7, 0.2, 9)).unwrap();
        let b = generate_synthetic(&spec(0.7, 0.2, 9)).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&spec(0.7, 0.2, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn no_flips_copies_templates() {
        let ds = generate_synthetic(&spec(1.0, 0.0, 2)).unwrap();
        for r in ds.records() {
            let expected = if r.id.starts_with("g0") {
                vec![1.0, 0.0, 0.3]
            } else {
                vec![0.0, 2.0, 0.5]
            };
            assert_eq!(r.attributes.as_slice(), expected.as_slice());
        }
    }

    #[test]
    fn flips_stay_in_schema() {
        let mut s = spec(1.0, 0.9, 3);
        s.samples_per_group = 50;
        let ds = generate_synthetic(&s).unwrap();
        let changed = ds
            .records()
            .iter()
            .filter(|r| r.id.starts_with("g0") && r.attributes.value(0) == 0.0)
            .count();
        assert!(changed > 30);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = spec(1.0, 0.0, 1);
        s.attribute_flip_probability = 1.0;
        assert!(generate_synthetic(&s).is_err());
        let mut s = spec(1.0, 0.0, 1);
        s.templates.pop();
        assert!(generate_synthetic(&s).is_err());
        let mut v = serde_json::to_value(spec(1.0, 0.0, 1)).unwrap();
        v.as_object_mut().unwrap().remove("seed");
        assert!(serde_json::from_value::<SyntheticSpec>(v).is_err());
    }
}
