use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cluster_means, inertia, nearest, HardAssignment};
use crate::diffnet::matrix::{dot, squared_distance};
use crate::diffnet::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            max_iter: 300,
            tol: 1e-6,
            restarts: 10,
            seed: 0,
        }
    }
}

/// One Lloyd run: final assignment, iteration count and the inertia after
/// each assignment step.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub assignment: HardAssignment,
    pub iterations: usize,
    pub inertia_history: Vec<f64>,
}

fn plus_plus_seeds<R: Rng + ?Sized>(z: &Matrix, k: usize, rng: &mut R) -> Matrix {
    let n = z.rows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n)
        .map(|i| squared_distance(z.row(i), z.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            // rounding can leave the fallback on a zero-weight point
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&w| w > 0.0).expect("total > 0");
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(pick);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(z.row(i), z.row(pick)));
        }
    }
    z.select_rows(&chosen)
}

fn assign(z: &Matrix, centroids: &Matrix, labels: &mut [usize]) {
    for (i, l) in labels.iter_mut().enumerate() {
        *l = nearest(z.row(i), centroids).0;
    }
}

/// Gives every empty cluster the point farthest from its own centroid,
/// taken from a cluster with more than one member.
fn repair_empty(z: &Matrix, labels: &mut [usize], centroids: &mut Matrix) {
    let k = centroids.rows();
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let donor = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .map(|i| (i, squared_distance(z.row(i), centroids.row(labels[i]))))
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        let Some((i, _)) = donor else {
            return;
        };
        let old = labels[i];
        labels[i] = empty;
        centroids.row_mut(empty).copy_from_slice(z.row(i));
        let fixed = cluster_means(z, labels, k, Some(centroids)).expect("labels below k");
        centroids.row_mut(old).copy_from_slice(fixed.row(old));
    }
}

/// Lloyd iterations from the given initial centroids. Stops when labels no
/// longer change, the largest centroid shift falls below `tol`, or after
/// `max_iter` iterations.
pub fn lloyd(z: &Matrix, initial: Matrix, max_iter: usize, tol: f64) -> Result<LloydRun> {
    if initial.cols() != z.cols() {
        return Err(Error::shape(format!(
            "centroids have width {}, data {}",
            initial.cols(),
            z.cols()
        )));
    }
    let k = initial.rows();
    let mut centroids = initial;
    let mut labels = vec![usize::MAX; z.rows()];
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter.max(1) {
        iterations += 1;
        let before = labels.clone();
        assign(z, &centroids, &mut labels);
        repair_empty(z, &mut labels, &mut centroids);
        history.push(inertia(z, &labels, &centroids));
        let next = cluster_means(z, &labels, k, Some(&centroids))?;
        let shift = (0..k)
            .map(|c| squared_distance(next.row(c), centroids.row(c)).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if labels == before || shift < tol {
            break;
        }
    }
    let inertia = inertia(z, &labels, &centroids);
    Ok(LloydRun {
        assignment: HardAssignment {
            labels,
            centroids,
            inertia,
        },
        iterations,
        inertia_history: history,
    })
}

/// Single-point moves that lower the SSE once centroids follow their
/// members (Hartigan's rule): moving `x` from cluster `a` to `b` changes the
/// SSE by `n_b/(n_b+1)·‖x−c_b‖² − n_a/(n_a−1)·‖x−c_a‖²`. Its local optima
/// are a subset of Lloyd fixpoints, so this only escapes poor Lloyd optima.
fn hartigan_polish(z: &Matrix, a: &mut HardAssignment, max_sweeps: usize) {
    let k = a.centroids.rows();
    let mut counts = vec![0usize; k];
    for &l in &a.labels {
        counts[l] += 1;
    }
    for _ in 0..max_sweeps {
        let mut moved = false;
        for i in 0..z.rows() {
            let from = a.labels[i];
            if counts[from] <= 1 {
                continue;
            }
            let x = z.row(i);
            let nf = counts[from] as f64;
            let removal = nf / (nf - 1.0) * squared_distance(x, a.centroids.row(from));
            // gains below rounding noise of the distances would let moves cycle
            let noise = 1e-10
                * (dot(x, x)
                    + dot(a.centroids.row(from), a.centroids.row(from))
                    + f64::MIN_POSITIVE);
            let mut best: Option<(usize, f64)> = None;
            for c in (0..k).filter(|&c| c != from) {
                let nc = counts[c] as f64;
                let delta = nc / (nc + 1.0) * squared_distance(x, a.centroids.row(c)) - removal;
                if delta < -noise && best.is_none_or(|(_, d)| delta < d) {
                    best = Some((c, delta));
                }
            }
            let Some((to, _)) = best else {
                continue;
            };
            let nt = counts[to] as f64;
            for (cv, &xv) in a.centroids.row_mut(from).iter_mut().zip(x) {
                *cv = (*cv * nf - xv) / (nf - 1.0);
            }
            for (cv, &xv) in a.centroids.row_mut(to).iter_mut().zip(x) {
                *cv = (*cv * nt + xv) / (nt + 1.0);
            }
            counts[from] -= 1;
            counts[to] += 1;
            a.labels[i] = to;
            moved = true;
        }
        // recompute exactly to shed incremental rounding
        a.centroids = cluster_means(z, &a.labels, k, Some(&a.centroids)).expect("labels below k");
        if !moved {
            break;
        }
    }
    a.inertia = inertia(z, &a.labels, &a.centroids);
}

const DUPLICATE_BUDGET: usize = 5;

/// Labels renumbered by first appearance, so equal partitions compare equal.
fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Best of `config.restarts` distinct k-means++-seeded runs, by inertia. Each run is
/// Lloyd iteration followed by a Hartigan single-move polish.
pub fn kmeans(z: &Matrix, k: usize, config: &KMeansConfig) -> Result<HardAssignment> {
    if k == 0 || z.rows() < k {
        return Err(Error::usage(format!(
            "k-means needs 1 <= k <= N, got k = {k}, N = {}",
            z.rows()
        )));
    }
    z.ensure_finite("k-means input")?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let restarts = config.restarts.max(1);
    let mut best: Option<HardAssignment> = None;
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    // Restarts that land on an already-found partition don't count, so small
    // inputs with one dominant basin still get `restarts` distinct optima.
    for _ in 0..restarts * DUPLICATE_BUDGET {
        let seeds = plus_plus_seeds(z, k, &mut rng);
        let mut run = lloyd(z, seeds, config.max_iter, config.tol)?.assignment;
        hartigan_polish(z, &mut run, config.max_iter);
        if !seen.insert(canonical_labels(&run.labels)) {
            continue;
        }
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
        if seen.len() == restarts {
            break;
        }
    }
    Ok(best.expect("at least one restart"))
}
