//! Clustering and metric results checked against brute-force or
//! direct-formula implementations written independently here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rulevae::clustering::{fuzzy_cmeans, harden, kmeans, lloyd, FcmConfig, KMeansConfig};
use rulevae::diffnet::Matrix;
use rulevae::metrics::{calinski_harabasz, davies_bouldin, fuzzy_silhouette, silhouette};
use rulevae::model::loss_consistency;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let v = (0..rows * cols)
        .map(|_| rng.random_range(-5.0..5.0))
        .collect();
    Matrix::from_vec(rows, cols, v).unwrap()
}

/// Minimal SSE over every split into two non-empty groups.
fn exhaustive_two_means(z: &Matrix) -> f64 {
    let n = z.rows();
    let mut best = f64::INFINITY;
    for mask in 1..(1u32 << n) - 1 {
        let mut sse = 0.0;
        for side in [true, false] {
            let members: Vec<usize> = (0..n).filter(|&i| ((mask >> i) & 1 == 1) == side).collect();
            let d = z.cols();
            let mean: Vec<f64> = (0..d)
                .map(|j| members.iter().map(|&i| z.get(i, j)).sum::<f64>() / members.len() as f64)
                .collect();
            sse += members
                .iter()
                .map(|&i| dist(z.row(i), &mean).powi(2))
                .sum::<f64>();
        }
        best = best.min(sse);
    }
    best
}

#[test]
fn kmeans_matches_exhaustive_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for trial in 0..200 {
        let n = rng.random_range(2..=8);
        let d = rng.random_range(1..=3);
        let z = random_matrix(&mut rng, n, d);
        let cfg = KMeansConfig {
            seed: trial,
            ..KMeansConfig::default()
        };
        let got = kmeans(&z, 2, &cfg).unwrap().inertia;
        let want = exhaustive_two_means(&z);
        assert!(
            (got - want).abs() <= 1e-9 * want.max(1.0),
            "trial {trial}: {got} vs {want}"
        );
    }
}

#[test]
fn lloyd_inertia_never_rises_and_ends_at_fixpoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let z = random_matrix(&mut rng, 30, 2);
        let init = z.select_rows(&[0, 1, 2]);
        let run = lloyd(&z, init, 300, 0.0).unwrap();
        assert!(run.inertia_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let a = run.assignment;
        for i in 0..z.rows() {
            let own = dist(z.row(i), a.centroids.row(a.labels[i]));
            for c in 0..3 {
                assert!(own <= dist(z.row(i), a.centroids.row(c)) + 1e-12);
            }
        }
    }
}

#[test]
fn consistency_matches_ordered_pair_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let z = random_matrix(&mut rng, 4, 3);
        let r = random_matrix(&mut rng, 4, 3);
        let cos = |m: &Matrix, i: usize, j: usize| {
            let (a, b) = (m.row(i), m.row(j));
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            dot / (dist(a, &[0.0; 3]) * dist(b, &[0.0; 3]))
        };
        let mut sum = 0.0;
        let mut count = 0;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    sum += (cos(&z, i, j) - cos(&r, i, j)).powi(2);
                    count += 1;
                }
            }
        }
        let want = sum / count as f64;
        assert!((loss_consistency(&z, &r).unwrap() - want).abs() < 1e-12);
    }
}

fn tight_pairs() -> (Matrix, Vec<usize>) {
    (
        Matrix::from_vec(4, 1, vec![0.0, 0.1, 10.0, 10.1]).unwrap(),
        vec![0, 0, 1, 1],
    )
}

/// Silhouette straight from the definition.
fn silhouette_oracle(z: &Matrix, labels: &[usize]) -> f64 {
    let n = z.rows();
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..n {
        let mean_to = |c: usize| {
            let others: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == c).collect();
            others
                .iter()
                .map(|&j| dist(z.row(i), z.row(j)))
                .sum::<f64>()
                / others.len() as f64
        };
        if labels.iter().filter(|&&l| l == labels[i]).count() == 1 {
            continue;
        }
        let a = mean_to(labels[i]);
        let b = (0..k)
            .filter(|&c| c != labels[i])
            .map(mean_to)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

#[test]
fn tight_pair_metrics() {
    let (z, l) = tight_pairs();
    let ss = silhouette(&z, &l).unwrap();
    // a = 0.1; b = mean(10, 10.1) or mean(9.9, 10) = 10.05 or 9.95
    let by_hand = ((10.05 - 0.1) / 10.05 * 2.0 + (9.95 - 0.1) / 9.95 * 2.0) / 4.0;
    assert!((ss - by_hand).abs() < 1e-6);
    assert!((ss - silhouette_oracle(&z, &l)).abs() < 1e-12);
    assert!((davies_bouldin(&z, &l).unwrap() - 0.01).abs() < 1e-6);
    // B = 4·5² = 100, W = 4·0.05² = 0.01, CH = (B/1)/(W/2)
    assert!((calinski_harabasz(&z, &l).unwrap() - 20000.0).abs() < 1e-6);
}

#[test]
fn duplicate_points_split_apart_score_non_positive() {
    let z = Matrix::from_vec(4, 1, vec![1.0, 1.0, 1.0, 5.0]).unwrap();
    let s = rulevae::metrics::silhouette_samples(&z, &[0, 0, 1, 1]).unwrap();
    // sample 2 duplicates 0 and 1 yet sits with 5: a = 4, b = 0
    assert!(s[2] <= 0.0);
}

#[test]
fn random_labels_on_a_blob_give_ch_near_one() {
    // under random labels CH follows an F-like law with mean ≈ 1
    let mut total = 0.0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 300;
        let v = (0..n * 2)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let z = Matrix::from_vec(n, 2, v).unwrap();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        total += calinski_harabasz(&z, &labels).unwrap();
    }
    let mean = total / 20.0;
    assert!(mean > 1.0 / 3.0 && mean < 3.0, "{mean}");
}

#[test]
fn fuzzy_silhouette_matches_weighted_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rows = Vec::new();
    for g in 0..2 {
        for _ in 0..10 {
            rows.push([
                g as f64 * 4.0 + rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]);
        }
    }
    let z = Matrix::from_rows(&rows).unwrap();
    let soft = fuzzy_cmeans(&z, 2, &FcmConfig::default()).unwrap();
    let u = &soft.memberships;
    let labels = harden(&soft, &z).unwrap().labels;

    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..z.rows() {
        let mut top = u.row(i).to_vec();
        top.sort_by(|a, b| b.total_cmp(a));
        let w = top[0] - top[1];
        let same: Vec<usize> = (0..z.rows())
            .filter(|&j| j != i && labels[j] == labels[i])
            .collect();
        let other: Vec<usize> = (0..z.rows()).filter(|&j| labels[j] != labels[i]).collect();
        let a = same.iter().map(|&j| dist(z.row(i), z.row(j))).sum::<f64>() / same.len() as f64;
        let b = other.iter().map(|&j| dist(z.row(i), z.row(j))).sum::<f64>() / other.len() as f64;
        num += w * (b - a) / a.max(b);
        den += w;
    }
    assert!((fuzzy_silhouette(&z, u).unwrap() - num / den).abs() < 1e-10);
}

#[test]
fn fcm_rows_sum_to_one_and_objective_descends() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for seed in 0..20 {
        let z = random_matrix(&mut rng, 25, 3);
        let k = 2 + (seed as usize % 3);
        let soft = fuzzy_cmeans(
            &z,
            k,
            &FcmConfig {
                seed,
                ..FcmConfig::default()
            },
        )
        .unwrap();
        for row in soft.memberships.row_iter() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        let h = &soft.objective_history;
        assert!(h.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{h:?}");
    }
}

#[test]
fn fcm_symmetric_groups_are_crisp() {
    let z = Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [3.0, 3.0], [3.0, 3.0]]).unwrap();
    let soft = fuzzy_cmeans(&z, 2, &FcmConfig::default()).unwrap();
    for row in soft.memberships.row_iter() {
        assert!(row[0].max(row[1]) > 0.99);
    }
    let labels = harden(&soft, &z).unwrap().labels;
    assert_eq!(labels[0], labels[1]);
    assert_ne!(labels[0], labels[2]);
}
