use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureRecord};
use crate::error::{Error, Result};

/// Mean and population standard deviation of one feature column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub std: f64,
}

impl ColumnStats {
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count().max(1) as f64;
        let mean = values.clone().sum::<f64>() / n;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        ColumnStats {
            mean,
            std: var.sqrt(),
        }
    }

    /// Constant columns (zero deviation) map to 0.
    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        if self.std > 0.0 {
            (v - self.mean) / self.std
        } else {
            0.0
        }
    }

    #[inline]
    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub visual: Vec<ColumnStats>,
    pub semantic: Vec<ColumnStats>,
}

impl Standardization {
    pub fn fit(dataset: &Dataset) -> Result<Self> {
        if dataset.len() < 2 {
            return Err(Error::usage(format!(
                "standardization needs at least 2 records, got {}",
                dataset.len()
            )));
        }
        let recs = dataset.records();
        let visual = (0..dataset.visual_dim())
            .map(|j| ColumnStats::of(recs.iter().map(move |r| r.visual[j])))
            .collect();
        let semantic = (0..dataset.semantic_dim())
            .map(|j| ColumnStats::of(recs.iter().map(move |r| r.semantic[j])))
            .collect();
        Ok(Standardization { visual, semantic })
    }

    fn map(&self, dataset: &Dataset, f: impl Fn(&ColumnStats, f64) -> f64) -> Result<Dataset> {
        if self.visual.len() != dataset.visual_dim()
            || self.semantic.len() != dataset.semantic_dim()
        {
            return Err(Error::shape(format!(
                "statistics cover {}+{} columns, dataset has {}+{}",
                self.visual.len(),
                self.semantic.len(),
                dataset.visual_dim(),
                dataset.semantic_dim()
            )));
        }
        let records = dataset
            .records()
            .iter()
            .map(|r| FeatureRecord {
                id: r.id.clone(),
                visual: r
                    .visual
                    .iter()
                    .zip(&self.visual)
                    .map(|(&v, s)| f(s, v))
                    .collect(),
                semantic: r
                    .semantic
                    .iter()
                    .zip(&self.semantic)
                    .map(|(&v, s)| f(s, v))
                    .collect(),
                attributes: r.attributes.clone(),
            })
            .collect();
        Dataset::new(
            dataset.schema().clone(),
            records,
            dataset.visual_dim(),
            dataset.semantic_dim(),
        )
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        self.map(dataset, ColumnStats::apply)
    }

    pub fn invert(&self, dataset: &Dataset) -> Result<Dataset> {
        self.map(dataset, ColumnStats::invert)
    }
}

/// Zero-mean, unit-variance visual and semantic columns, plus the statistics
/// needed to undo the transform.
pub fn standardize(dataset: &Dataset) -> Result<(Dataset, Standardization)> {
    let stats = Standardization::fit(dataset)?;
    Ok((stats.apply(dataset)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{AttributeSchema, AttributeVector};

    fn ds(cols: &[(f64, f64)]) -> Dataset {
        let records = cols
            .iter()
            .enumerate()
            .map(|(i, &(v, s))| FeatureRecord {
                id: format!("r{i}"),
                visual: vec![v],
                semantic: vec![s],
                attributes: AttributeVector::default(),
            })
            .collect();
        Dataset::new(AttributeSchema::default(), records, 1, 1).unwrap()
    }

    #[test]
    fn two_point_column() {
        let (out, stats) = standardize(&ds(&[(1.0, 5.0), (3.0, 5.0)])).unwrap();
        assert_eq!(
            stats.visual[0],
            ColumnStats {
                mean: 2.0,
                std: 1.0
            }
        );
        assert_eq!(out.records()[0].visual, vec![-1.0]);
        assert_eq!(out.records()[1].visual, vec![1.0]);
    }

    #[test]
    fn constant_column_goes_to_zero() {
        let (out, _) = standardize(&ds(&[(0.0, 5.0), (1.0, 5.0), (2.0, 5.0)])).unwrap();
        assert!(out.records().iter().all(|r| r.semantic == vec![0.0]));
    }

    #[test]
    fn round_trip() {
        let d = ds(&[(0.3, -7.0), (12.5, 5.0), (-2.25, 1e-3), (4.0, 9.5)]);
        let (out, stats) = standardize(&d).unwrap();
        let back = stats.invert(&out).unwrap();
        for (a, b) in back.records().iter().zip(d.records()) {
            assert!((a.visual[0] - b.visual[0]).abs() < 1e-12);
            assert!((a.semantic[0] - b.semantic[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn needs_two_records() {
        assert!(matches!(
            standardize(&ds(&[(1.0, 1.0)])),
            Err(Error::Usage(_))
        ));
    }
}
