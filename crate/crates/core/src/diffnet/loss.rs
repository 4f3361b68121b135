use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Mean of squared elementwise differences.
pub fn mse(a: &Matrix, b: &Matrix) -> Result<f64> {
    check_same_shape(a, b)?;
    let n = a.as_slice().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / n as f64)
}

/// Gradient of [`mse`] with respect to its first argument.
pub fn mse_grad(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_same_shape(a, b)?;
    let n = a.as_slice().len().max(1) as f64;
    let values = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| 2.0 * (x - y) / n)
        .collect();
    Matrix::from_vec(a.rows(), a.cols(), values)
}

fn check_same_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!(
            "mse operands have shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}
