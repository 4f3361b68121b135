//! Hard and soft clustering of latent vectors and rule-guided refinement.

mod fcm;
mod kmeans;
mod refine;

pub use fcm::{fuzzy_cmeans, harden, FcmConfig, SoftAssignment};
pub use kmeans::{kmeans, lloyd, KMeansConfig, LloydRun};
pub use refine::{refine, RefinementLog, RefinementMove, UnresolvedFlag, MAX_REFINE_PASSES};

use serde::{Deserialize, Serialize};

use crate::diffnet::matrix::squared_distance;
use crate::diffnet::Matrix;
use crate::error::{Error, Result};

/// Hard partition of `N` samples into `k` clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct HardAssignment {
    pub labels: Vec<usize>,
    /// k×d.
    pub centroids: Matrix,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
}

impl HardAssignment {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    /// Builds an assignment from labels, with centroids at cluster means.
    /// Empty clusters get a zero centroid.
    pub fn from_labels(z: &Matrix, labels: Vec<usize>, k: usize) -> Result<Self> {
        let centroids = cluster_means(z, &labels, k, None)?;
        let inertia = inertia(z, &labels, &centroids);
        Ok(HardAssignment {
            labels,
            centroids,
            inertia,
        })
    }
}

/// Index of the nearest centroid (ties to the lowest index) and its squared distance.
pub(crate) fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.row_iter().enumerate() {
        let d = squared_distance(point, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

pub(crate) fn inertia(z: &Matrix, labels: &[usize], centroids: &Matrix) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| squared_distance(z.row(i), centroids.row(l)))
        .sum()
}

/// Per-cluster means. Empty clusters keep the row of `previous` when given,
/// otherwise zero.
pub(crate) fn cluster_means(
    z: &Matrix,
    labels: &[usize],
    k: usize,
    previous: Option<&Matrix>,
) -> Result<Matrix> {
    if labels.len() != z.rows() {
        return Err(Error::shape(format!(
            "{} labels for {} latent rows",
            labels.len(),
            z.rows()
        )));
    }
    let d = z.cols();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        if l >= k {
            return Err(Error::usage(format!(
                "sample {i} has label {l}, but k = {k}"
            )));
        }
        counts[l] += 1;
        for (s, &v) in sums.row_mut(l).iter_mut().zip(z.row(i)) {
            *s += v;
        }
    }
    for (c, &n) in counts.iter().enumerate() {
        if n > 0 {
            for s in sums.row_mut(c) {
                *s /= n as f64;
            }
        } else if let Some(prev) = previous {
            sums.row_mut(c).copy_from_slice(prev.row(c));
        }
    }
    Ok(sums)
}

/// On-disk form of a clustering result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentFile {
    pub k: usize,
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memberships: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement_log: Option<RefinementLog>,
}

pub(crate) fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(<[f64]>::to_vec).collect()
}

impl AssignmentFile {
    pub fn new(
        hard: &HardAssignment,
        soft: Option<&SoftAssignment>,
        log: Option<&RefinementLog>,
    ) -> Self {
        AssignmentFile {
            k: hard.k(),
            labels: hard.labels.clone(),
            centroids: matrix_rows(&hard.centroids),
            memberships: soft.map(|s| matrix_rows(&s.memberships)),
            refinement_log: log.cloned(),
        }
    }
}
