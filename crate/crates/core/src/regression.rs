//! Ridge least squares for affine maps with an unpenalized intercept.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regularizer applied when the normal equations are numerically singular.
pub const FALLBACK_RIDGE: f64 = 1e-4;
/// Condition-number ceiling for the regularized normal matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// `y = intercepts + weights * x`, one weight row per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub weights: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
}

impl AffineMap {
    pub fn input_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.intercepts.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.intercepts)
            .map(|(row, b)| b + dot(row, x))
            .collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineFit {
    pub map: AffineMap,
    /// Regularizer actually used; differs from the request after a fallback.
    pub ridge: f64,
}

/// Minimizes `sum ||y - b - W x||^2 + ridge * ||W||_F^2` over `(W, b)`.
///
/// Inputs and outputs are centered so the intercept is unpenalized. When the
/// condition estimate of `X_c^T X_c + ridge I` exceeds [`MAX_CONDITION`], the
/// regularizer is raised to [`FALLBACK_RIDGE`].
pub fn fit_affine(inputs: &[Vec<f64>], outputs: &[Vec<f64>], ridge: f64) -> Result<AffineFit> {
    let m = inputs.len();
    if m == 0 {
        return Err(Error::EmptyMemory);
    }
    if outputs.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            actual: outputs.len(),
        });
    }
    if ridge.is_nan() || ridge < 0.0 {
        return Err(Error::InvalidConfig(format!("ridge must be >= 0, got {ridge}")));
    }
    let d = inputs[0].len();
    let k = outputs[0].len();
    let x = DMatrix::from_fn(m, d, |i, j| inputs[i][j]);
    let y = DMatrix::from_fn(m, k, |i, j| outputs[i][j]);

    let x_mean: DVector<f64> = x.row_mean().transpose();
    let y_mean: DVector<f64> = y.row_mean().transpose();
    let xc = DMatrix::from_fn(m, d, |i, j| x[(i, j)] - x_mean[j]);
    let yc = DMatrix::from_fn(m, k, |i, j| y[(i, j)] - y_mean[j]);
    let gram = xc.transpose() * &xc;
    let rhs = xc.transpose() * &yc;

    let mut lambda = ridge;
    let solution = loop {
        let a = &gram + DMatrix::identity(d, d) * lambda;
        let solved = if condition_estimate(&a) <= MAX_CONDITION {
            a.cholesky().map(|c| c.solve(&rhs))
        } else {
            None
        };
        match solved {
            Some(w) => break w,
            None if lambda < FALLBACK_RIDGE => lambda = FALLBACK_RIDGE,
            None => {
                return Err(Error::InvalidConfig(
                    "normal equations stayed singular after regularization".into(),
                ))
            }
        }
    };

    // solution is d x k; row j of the map is column j of the solution.
    let weights: Vec<Vec<f64>> = (0..k)
        .map(|o| (0..d).map(|j| solution[(j, o)]).collect())
        .collect();
    let intercepts = (0..k)
        .map(|o| y_mean[o] - dot(&weights[o], x_mean.as_slice()))
        .collect();
    Ok(AffineFit {
        map: AffineMap {
            weights,
            intercepts,
        },
        ridge: lambda,
    })
}

/// Ratio of extreme eigenvalues of a symmetric matrix; infinite when the
/// smallest is not positive.
pub fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let eig = SymmetricEigen::new(a.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Numerical rank of a row-major matrix via SVD.
pub fn matrix_rank(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.max();
    let tol = rows.len().max(rows[0].len()) as f64 * f64::EPSILON * max;
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}
