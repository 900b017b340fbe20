//! Small dense least-squares fits.

use nalgebra::{DMatrix, DVector};

/// Least-squares solution of `rows · β ≈ y`. Columns are rescaled to unit
/// norm before the SVD solve.
pub(crate) fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let n = rows.len();
    let p = rows.first()?.len();
    if n < p || y.len() != n {
        return None;
    }
    let mut a = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let mut scale = vec![1.0; p];
    for (j, s) in scale.iter_mut().enumerate() {
        let norm = a.column(j).norm();
        if norm > 0.0 {
            *s = norm;
            a.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    let b = DVector::from_column_slice(y);
    let beta = a.svd(true, true).solve(&b, 1e-13).ok()?;
    Some(beta.iter().zip(&scale).map(|(v, s)| v / s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_model() {
        let rows: Vec<Vec<f64>> = (1..30).map(|n| vec![n as f64 * (n as f64).ln(), n as f64, 1.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 1.5 * r[0] - 0.25 * r[1] + 3.0).collect();
        let beta = least_squares(&rows, &y).unwrap();
        assert!((beta[0] - 1.5).abs() < 1e-10);
        assert!((beta[1] + 0.25).abs() < 1e-9);
        assert!((beta[2] - 3.0).abs() < 1e-8);
    }
}
