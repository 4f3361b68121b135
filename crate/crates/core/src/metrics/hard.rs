//! Crisp cluster-validity indices. Only clusters that actually occur in
//! `labels` count towards `k`.

use crate::diffnet::matrix::squared_distance;
use crate::diffnet::Matrix;
use crate::error::{Error, Result};

/// Relabels to `0..k'` over the clusters present, in order of first label value.
pub(crate) fn compact_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let max = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut map = vec![usize::MAX; max];
    for &l in labels {
        map[l] = 0;
    }
    let mut next = 0;
    for m in map.iter_mut().filter(|m| **m == 0) {
        *m = next;
        next += 1;
    }
    (labels.iter().map(|&l| map[l]).collect(), next)
}

fn check(z: &Matrix, labels: &[usize], what: &str) -> Result<(Vec<usize>, usize)> {
    if z.rows() != labels.len() {
        return Err(Error::shape(format!(
            "{what}: {} labels for {} rows",
            labels.len(),
            z.rows()
        )));
    }
    let (compact, k) = compact_labels(labels);
    if k < 2 {
        return Err(Error::usage(format!(
            "{what} needs at least 2 non-empty clusters, got {k}"
        )));
    }
    Ok((compact, k))
}

fn centroids(z: &Matrix, labels: &[usize], k: usize) -> (Matrix, Vec<usize>) {
    let mut c = Matrix::zeros(k, z.cols());
    let mut n = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        n[l] += 1;
        for (cv, &v) in c.row_mut(l).iter_mut().zip(z.row(i)) {
            *cv += v;
        }
    }
    for (j, &cnt) in n.iter().enumerate() {
        for v in c.row_mut(j) {
            *v /= cnt as f64;
        }
    }
    (c, n)
}

/// Per-sample silhouette values; members of singleton clusters score 0.
pub fn silhouette_samples(z: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
    let (labels, k) = check(z, labels, "silhouette")?;
    let n = z.rows();
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    let mut out = Vec::with_capacity(n);
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.fill(0.0);
        for j in 0..n {
            if i != j {
                sums[labels[j]] += squared_distance(z.row(i), z.row(j)).sqrt();
            }
        }
        let own = labels[i];
        if sizes[own] == 1 {
            out.push(0.0);
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        out.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
    }
    Ok(out)
}

/// Mean silhouette coefficient.
pub fn silhouette(z: &Matrix, labels: &[usize]) -> Result<f64> {
    let s = silhouette_samples(z, labels)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Davies–Bouldin index with mean member-to-centroid distance as scatter.
pub fn davies_bouldin(z: &Matrix, labels: &[usize]) -> Result<f64> {
    let (labels, k) = check(z, labels, "Davies-Bouldin")?;
    let (c, n) = centroids(z, &labels, k);
    let mut scatter = vec![0.0; k];
    for (i, &l) in labels.iter().enumerate() {
        scatter[l] += squared_distance(z.row(i), c.row(l)).sqrt();
    }
    for (s, &cnt) in scatter.iter_mut().zip(&n) {
        *s /= cnt as f64;
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let d = squared_distance(c.row(i), c.row(j)).sqrt();
            if d == 0.0 {
                return Err(Error::usage(format!(
                    "Davies-Bouldin undefined: clusters {i} and {j} have coincident centroids"
                )));
            }
            worst = worst.max((scatter[i] + scatter[j]) / d);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Calinski–Harabasz index; `+∞` when the within-cluster dispersion is zero.
pub fn calinski_harabasz(z: &Matrix, labels: &[usize]) -> Result<f64> {
    let (labels, k) = check(z, labels, "Calinski-Harabasz")?;
    let n = z.rows();
    if n <= k {
        return Err(Error::usage(format!(
            "Calinski-Harabasz needs more samples than clusters, got N = {n}, k = {k}"
        )));
    }
    let (c, sizes) = centroids(z, &labels, k);
    let mut mean = vec![0.0; z.cols()];
    for row in z.row_iter() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v / n as f64;
        }
    }
    let between: f64 = (0..k)
        .map(|j| sizes[j] as f64 * squared_distance(c.row(j), &mean))
        .sum();
    let within: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| squared_distance(z.row(i), c.row(l)))
        .sum();
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs() -> (Matrix, Vec<usize>) {
        (
            Matrix::from_vec(4, 1, vec![0.0, 0.1, 10.0, 10.1]).unwrap(),
            vec![0, 0, 1, 1],
        )
    }

    #[test]
    fn tight_pairs() {
        let (z, l) = pairs();
        assert!((silhouette(&z, &l).unwrap() - 0.99).abs() < 0.005);
        assert!((davies_bouldin(&z, &l).unwrap() - 0.01).abs() < 1e-9);
        // centroids 0.05 and 10.05, grand mean 5.05: B = 4·5² = 100, W = 4·0.05² = 0.01
        assert!((calinski_harabasz(&z, &l).unwrap() - 20000.0).abs() < 1e-6);
    }

    #[test]
    fn singletons_and_degenerate() {
        let z = Matrix::from_vec(2, 1, vec![0.0, 3.0]).unwrap();
        assert_eq!(silhouette(&z, &[0, 1]).unwrap(), 0.0);
        assert_eq!(davies_bouldin(&z, &[0, 1]).unwrap(), 0.0);
        assert!(calinski_harabasz(&z, &[0, 1]).is_err());
        assert!(silhouette(&z, &[1, 1]).is_err());

        let dup = Matrix::from_vec(3, 1, vec![1.0, 1.0, 1.0]).unwrap();
        assert!(davies_bouldin(&dup, &[0, 1, 1]).is_err());
        let z = Matrix::from_vec(4, 1, vec![0.0, 0.0, 5.0, 5.0]).unwrap();
        assert_eq!(calinski_harabasz(&z, &[0, 0, 1, 1]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn absent_labels_are_ignored() {
        let (z, _) = pairs();
        let a = silhouette(&z, &[0, 0, 1, 1]).unwrap();
        let b = silhouette(&z, &[3, 3, 1, 1]).unwrap();
        assert_eq!(a, b);
    }
}
