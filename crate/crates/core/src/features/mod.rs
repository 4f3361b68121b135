//! Multimodal feature records: ingestion of precomputed vectors, a seeded
//! synthetic generator, and per-column standardization.

mod io;
mod standardize;
mod synth;

pub use io::{load_dataset, save_dataset, RECORDS_FILE};
pub use standardize::{standardize, ColumnStats, Standardization};
pub use synth::{generate_synthetic, SyntheticSpec};

use std::collections::HashSet;

use crate::diffnet::Matrix;
use crate::error::{Error, Result};
use crate::rules::{AttributeSchema, AttributeVector};

/// One sample: a visual feature vector, a raw semantic vector and attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub id: String,
    pub visual: Vec<f64>,
    pub semantic: Vec<f64>,
    pub attributes: AttributeVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: AttributeSchema,
    records: Vec<FeatureRecord>,
    visual_dim: usize,
    semantic_dim: usize,
}

impl Dataset {
    /// Validates ids, dimensions, finiteness and attribute values.
    pub fn new(
        schema: AttributeSchema,
        records: Vec<FeatureRecord>,
        visual_dim: usize,
        semantic_dim: usize,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(load_err(None, "dataset has no records"));
        }
        let mut ids = HashSet::with_capacity(records.len());
        for r in &records {
            if !ids.insert(r.id.as_str()) {
                return Err(load_err(Some(&r.id), "duplicate record id"));
            }
            if r.visual.len() != visual_dim {
                return Err(load_err(
                    Some(&r.id),
                    format!(
                        "visual vector has length {}, expected {visual_dim}",
                        r.visual.len()
                    ),
                ));
            }
            if r.semantic.len() != semantic_dim {
                return Err(load_err(
                    Some(&r.id),
                    format!(
                        "semantic vector has length {}, expected {semantic_dim}",
                        r.semantic.len()
                    ),
                ));
            }
            if r.visual.iter().chain(&r.semantic).any(|v| !v.is_finite()) {
                return Err(load_err(Some(&r.id), "non-finite feature value"));
            }
            schema
                .validate(&r.attributes)
                .map_err(|e| load_err(Some(&r.id), e.to_string()))?;
        }
        Ok(Dataset {
            schema,
            records,
            visual_dim,
            semantic_dim,
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn records(&self) -> &[FeatureRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn visual_dim(&self) -> usize {
        self.visual_dim
    }

    pub fn semantic_dim(&self) -> usize {
        self.semantic_dim
    }

    pub fn ids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.id.clone()).collect()
    }

    pub fn attributes(&self) -> Vec<AttributeVector> {
        self.records.iter().map(|r| r.attributes.clone()).collect()
    }

    /// N×Dv matrix of visual features.
    pub fn visual_matrix(&self) -> Matrix {
        let v = self
            .records
            .iter()
            .flat_map(|r| r.visual.iter().copied())
            .collect();
        Matrix::from_vec(self.len(), self.visual_dim, v).expect("validated dims")
    }

    /// N×Ds matrix of raw semantic features.
    pub fn semantic_matrix(&self) -> Matrix {
        let v = self
            .records
            .iter()
            .flat_map(|r| r.semantic.iter().copied())
            .collect();
        Matrix::from_vec(self.len(), self.semantic_dim, v).expect("validated dims")
    }
}

fn load_err(record: Option<&str>, message: impl Into<String>) -> Error {
    Error::Load {
        record: record.map(str::to_string),
        message: message.into(),
    }
}
