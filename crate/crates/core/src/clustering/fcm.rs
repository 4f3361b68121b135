use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{inertia, HardAssignment};
use crate::diffnet::matrix::squared_distance;
use crate::diffnet::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FcmConfig {
    /// Fuzzifier, must exceed 1.
    pub m: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for FcmConfig {
    fn default() -> Self {
        FcmConfig {
            m: 2.0,
            max_iter: 300,
            tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment {
    /// N×k membership matrix, rows sum to 1.
    pub memberships: Matrix,
    /// k×d.
    pub centroids: Matrix,
    pub m: f64,
    /// Final value of `Σᵢₖ u_ikᵐ ‖zᵢ − c_k‖²`.
    pub objective: f64,
    /// Objective after every membership update.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
}

fn update_centroids(z: &Matrix, u: &Matrix, m: f64) -> Matrix {
    let (n, k, d) = (z.rows(), u.cols(), z.cols());
    let mut c = Matrix::zeros(k, d);
    let mut weights = vec![0.0; k];
    for i in 0..n {
        for (j, weight) in weights.iter_mut().enumerate() {
            let w = u.get(i, j).powf(m);
            *weight += w;
            for (cv, &zv) in c.row_mut(j).iter_mut().zip(z.row(i)) {
                *cv += w * zv;
            }
        }
    }
    for (j, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            for v in c.row_mut(j) {
                *v /= w;
            }
        }
    }
    c
}

/// Membership update; a point on top of a centroid belongs fully to the
/// lowest-index such centroid.
fn update_memberships(z: &Matrix, c: &Matrix, m: f64, u: &mut Matrix) {
    let k = c.rows();
    let exponent = 1.0 / (m - 1.0);
    let mut d2 = vec![0.0; k];
    for i in 0..z.rows() {
        for (j, d) in d2.iter_mut().enumerate() {
            *d = squared_distance(z.row(i), c.row(j));
        }
        let row = u.row_mut(i);
        if let Some(hit) = d2.iter().position(|&d| d == 0.0) {
            row.fill(0.0);
            row[hit] = 1.0;
            continue;
        }
        // u_ij = 1 / Σ_l (d_ij / d_il)^(2/(m-1)), written with squared distances
        let inv: Vec<f64> = d2.iter().map(|&d| d.powf(-exponent)).collect();
        let total: f64 = inv.iter().sum();
        for (r, &v) in row.iter_mut().zip(&inv) {
            *r = v / total;
        }
    }
}

fn objective(z: &Matrix, u: &Matrix, c: &Matrix, m: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..z.rows() {
        for j in 0..c.rows() {
            total += u.get(i, j).powf(m) * squared_distance(z.row(i), c.row(j));
        }
    }
    total
}

/// Fuzzy c-means with random initial memberships.
pub fn fuzzy_cmeans(z: &Matrix, k: usize, config: &FcmConfig) -> Result<SoftAssignment> {
    let m = config.m;
    if !(m > 1.0 && m.is_finite()) {
        return Err(Error::usage(format!(
            "fuzzifier m must be finite and > 1, got {m}"
        )));
    }
    if k < 2 || z.rows() < k {
        return Err(Error::usage(format!(
            "fuzzy c-means needs 2 <= k <= N, got k = {k}, N = {}",
            z.rows()
        )));
    }
    z.ensure_finite("fuzzy c-means input")?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut u = Matrix::zeros(z.rows(), k);
    for i in 0..z.rows() {
        let row = u.row_mut(i);
        for v in row.iter_mut() {
            *v = rng.random::<f64>() + 1e-3;
        }
        let s: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= s;
        }
    }

    let mut history = Vec::new();
    let mut centroids = update_centroids(z, &u, m);
    let mut iterations = 0;
    while iterations < config.max_iter.max(1) {
        iterations += 1;
        let prev = u.clone();
        update_memberships(z, &centroids, m, &mut u);
        centroids = update_centroids(z, &u, m);
        history.push(objective(z, &u, &centroids, m));
        let delta = prev
            .as_slice()
            .iter()
            .zip(u.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if delta < config.tol {
            break;
        }
    }
    Ok(SoftAssignment {
        objective: *history.last().expect("one iteration"),
        memberships: u,
        centroids,
        m,
        objective_history: history,
        iterations,
    })
}

/// Crisp labels by largest membership (ties to the lowest index). Centroids
/// are carried over; inertia is measured on `z`.
pub fn harden(soft: &SoftAssignment, z: &Matrix) -> Result<HardAssignment> {
    let u = &soft.memberships;
    if u.rows() != z.rows() || soft.centroids.cols() != z.cols() {
        return Err(Error::shape(format!(
            "memberships for {} samples of width {}, data is {:?}",
            u.rows(),
            soft.centroids.cols(),
            z.shape()
        )));
    }
    let labels: Vec<usize> = u
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    let inertia = inertia(z, &labels, &soft.centroids);
    Ok(HardAssignment {
        labels,
        centroids: soft.centroids.clone(),
        inertia,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soft(rows: &[[f64; 2]]) -> SoftAssignment {
        SoftAssignment {
            memberships: Matrix::from_rows(rows).unwrap(),
            centroids: Matrix::from_rows(&[[0.0], [1.0]]).unwrap(),
            m: 2.0,
            objective: 0.0,
            objective_history: vec![],
            iterations: 0,
        }
    }

    #[test]
    fn harden_ties_and_crisp() {
        let z = Matrix::from_rows(&[[0.0], [1.0], [0.4]]).unwrap();
        let h = harden(&soft(&[[0.9, 0.1], [0.5, 0.5], [0.0, 1.0]]), &z).unwrap();
        assert_eq!(h.labels, vec![0, 0, 1]);
    }

    #[test]
    fn tight_groups_are_nearly_crisp() {
        let z = Matrix::from_rows(&[[0.0, 0.0], [0.01, 0.0], [5.0, 5.0], [5.0, 5.01]]).unwrap();
        let s = fuzzy_cmeans(&z, 2, &FcmConfig::default()).unwrap();
        for row in s.memberships.row_iter() {
            assert!(row.iter().cloned().fold(0.0, f64::max) > 0.99);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(s.objective_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn rejects_bad_fuzzifier_and_k() {
        let z = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let bad = FcmConfig {
            m: 1.0,
            ..FcmConfig::default()
        };
        assert!(matches!(fuzzy_cmeans(&z, 2, &bad), Err(Error::Usage(_))));
        assert!(fuzzy_cmeans(&z, 1, &FcmConfig::default()).is_err());
        assert!(fuzzy_cmeans(&z, 4, &FcmConfig::default()).is_err());
    }

    #[test]
    fn coincident_point_gets_full_membership() {
        let z = Matrix::from_rows(&[[0.0], [2.0]]).unwrap();
        let c = Matrix::from_rows(&[[0.0], [2.0]]).unwrap();
        let mut u = Matrix::zeros(2, 2);
        update_memberships(&z, &c, 2.0, &mut u);
        assert_eq!(u.as_slice(), &[1.0, 0.0, 0.0, 1.0]);
    }
}
