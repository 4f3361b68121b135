//! Conversion of a [`Dataset`] into the numeric matrices the network consumes.

use serde::{Deserialize, Serialize};

use crate::diffnet::Matrix;
use crate::error::{Error, Result};
use crate::features::{ColumnStats, Dataset, Standardization};
use crate::rules::{AttributeKind, AttributeSchema, AttributeVector};

/// Network inputs for a batch: visual features, raw semantic features and
/// encoded attributes, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput {
    pub visual: Matrix,
    pub semantic: Matrix,
    pub attributes: Matrix,
}

impl ModelInput {
    pub fn len(&self) -> usize {
        self.visual.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> ModelInput {
        ModelInput {
            visual: self.visual.select_rows(idx),
            semantic: self.semantic.select_rows(idx),
            attributes: self.attributes.select_rows(idx),
        }
    }
}

/// Statistics fitted on the training data and reapplied at inference time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub schema: AttributeSchema,
    pub visual_dim: usize,
    pub semantic_dim: usize,
    /// Feature standardization, if enabled.
    pub features: Option<Standardization>,
    /// Standardization of each numeric attribute, `None` for discrete ones.
    pub numeric_attributes: Vec<Option<ColumnStats>>,
}

impl Preprocessor {
    pub fn fit(dataset: &Dataset, standardize_features: bool) -> Result<Self> {
        let features = if standardize_features {
            Some(Standardization::fit(dataset)?)
        } else {
            None
        };
        let records = dataset.records();
        let numeric_attributes = dataset
            .schema()
            .attributes()
            .iter()
            .enumerate()
            .map(|(j, spec)| match spec.kind {
                AttributeKind::Numeric { .. } => Some(ColumnStats::of(
                    records.iter().map(move |r| r.attributes.value(j)),
                )),
                _ => None,
            })
            .collect();
        Ok(Preprocessor {
            schema: dataset.schema().clone(),
            visual_dim: dataset.visual_dim(),
            semantic_dim: dataset.semantic_dim(),
            features,
            numeric_attributes,
        })
    }

    pub fn attribute_width(&self) -> usize {
        self.schema.encoded_width()
    }

    /// Booleans as 0/1, categoricals one-hot, numerics standardized.
    pub fn encode_attributes(&self, attrs: &AttributeVector, out: &mut Vec<f64>) {
        for (j, spec) in self.schema.attributes().iter().enumerate() {
            match &spec.kind {
                AttributeKind::Boolean => out.push(attrs.value(j)),
                AttributeKind::Categorical { levels } => {
                    let hit = attrs.level(j);
                    out.extend((0..levels.len()).map(|l| if l == hit { 1.0 } else { 0.0 }));
                }
                AttributeKind::Numeric { .. } => {
                    let v = attrs.value(j);
                    out.push(self.numeric_attributes[j].map_or(v, |s| s.apply(v)));
                }
            }
        }
    }

    /// Checks that `dataset` has the schema and widths this preprocessor was fitted on.
    pub fn check(&self, dataset: &Dataset) -> Result<()> {
        if dataset.schema() != &self.schema {
            return Err(Error::shape(
                "dataset attribute schema differs from the model's",
            ));
        }
        if dataset.visual_dim() != self.visual_dim || dataset.semantic_dim() != self.semantic_dim {
            return Err(Error::shape(format!(
                "dataset has feature widths {}+{}, model expects {}+{}",
                dataset.visual_dim(),
                dataset.semantic_dim(),
                self.visual_dim,
                self.semantic_dim
            )));
        }
        Ok(())
    }

    pub fn prepare(&self, dataset: &Dataset) -> Result<ModelInput> {
        self.check(dataset)?;
        let scaled;
        let source = match &self.features {
            Some(stats) => {
                scaled = stats.apply(dataset)?;
                &scaled
            }
            None => dataset,
        };
        let width = self.attribute_width();
        let mut attrs = Vec::with_capacity(dataset.len() * width);
        for r in dataset.records() {
            self.encode_attributes(&r.attributes, &mut attrs);
        }
        Ok(ModelInput {
            visual: source.visual_matrix(),
            semantic: source.semantic_matrix(),
            attributes: Matrix::from_vec(dataset.len(), width, attrs)?,
        })
    }
}
