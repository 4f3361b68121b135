//! Fuzzy partition indices over an N×k membership matrix.

use super::hard::silhouette_samples;
use crate::diffnet::Matrix;
use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-6;

fn check_memberships(u: &Matrix) -> Result<()> {
    if u.rows() == 0 || u.cols() == 0 {
        return Err(Error::usage("membership matrix is empty"));
    }
    for (i, row) in u.row_iter().enumerate() {
        if row
            .iter()
            .any(|&v| !(-ROW_SUM_TOL..=1.0 + ROW_SUM_TOL).contains(&v))
        {
            return Err(Error::usage(format!(
                "membership row {i} has entries outside [0, 1]"
            )));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::usage(format!("membership row {i} sums to {s}")));
        }
    }
    Ok(())
}

/// Partition coefficient `(1/N) Σᵢₖ u²`.
pub fn fpc(u: &Matrix) -> Result<f64> {
    check_memberships(u)?;
    Ok(u.as_slice().iter().map(|v| v * v).sum::<f64>() / u.rows() as f64)
}

/// Partition entropy `−(1/N) Σᵢₖ u ln u`, with `0 ln 0 = 0`.
pub fn fpe(u: &Matrix) -> Result<f64> {
    check_memberships(u)?;
    let s: f64 = u
        .as_slice()
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum();
    Ok((-s / u.rows() as f64).max(0.0))
}

/// Mean over samples of the largest membership.
pub fn mean_membership(u: &Matrix) -> Result<f64> {
    check_memberships(u)?;
    let s: f64 = u
        .row_iter()
        .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum();
    Ok(s / u.rows() as f64)
}

/// Largest-membership labels, ties to the lowest index.
pub(crate) fn argmax_labels(u: &Matrix) -> Vec<usize> {
    u.row_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Weighted silhouette: crisp silhouettes under argmax labels, weighted by
/// the gap between each sample's two largest memberships.
pub fn fuzzy_silhouette(z: &Matrix, u: &Matrix) -> Result<f64> {
    check_memberships(u)?;
    if u.cols() < 2 {
        return Err(Error::usage("fuzzy silhouette needs k >= 2"));
    }
    if u.rows() != z.rows() {
        return Err(Error::shape(format!(
            "{} membership rows for {} samples",
            u.rows(),
            z.rows()
        )));
    }
    let weights: Vec<f64> = u
        .row_iter()
        .map(|row| {
            let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &v in row {
                if v > first {
                    second = first;
                    first = v;
                } else if v > second {
                    second = v;
                }
            }
            first - second
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::usage(
            "fuzzy silhouette undefined: every sample has tied top memberships",
        ));
    }
    let s = silhouette_samples(z, &argmax_labels(u))?;
    Ok(s.iter().zip(&weights).map(|(s, w)| s * w).sum::<f64>() / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crisp_and_uniform() {
        let crisp = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(fpc(&crisp).unwrap(), 1.0);
        assert_eq!(fpe(&crisp).unwrap(), 0.0);
        assert_eq!(mean_membership(&crisp).unwrap(), 1.0);

        let uniform = Matrix::from_vec(3, 4, vec![0.25; 12]).unwrap();
        assert!((fpc(&uniform).unwrap() - 0.25).abs() < 1e-15);
        assert!((fpe(&uniform).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert_eq!(mean_membership(&uniform).unwrap(), 0.25);
        let z = Matrix::from_vec(3, 1, vec![0.0, 1.0, 2.0]).unwrap();
        assert!(fuzzy_silhouette(&z, &uniform).is_err());
    }

    #[test]
    fn ninety_ten() {
        let u = Matrix::from_rows(&[[0.9, 0.1], [0.9, 0.1]]).unwrap();
        assert!((fpc(&u).unwrap() - 0.82).abs() < 1e-12);
        assert!((mean_membership(&u).unwrap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_rows() {
        let u = Matrix::from_rows(&[[0.7, 0.1]]).unwrap();
        assert!(matches!(fpc(&u), Err(Error::Usage(_))));
    }

    #[test]
    fn crisp_fuzzy_silhouette_is_crisp_silhouette() {
        let z = Matrix::from_vec(4, 1, vec![0.0, 0.3, 4.0, 5.0]).unwrap();
        let u = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]).unwrap();
        let crisp = super::super::silhouette(&z, &[0, 0, 1, 1]).unwrap();
        assert_eq!(fuzzy_silhouette(&z, &u).unwrap(), crisp);
    }
}
