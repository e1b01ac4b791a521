//! Kernel Fisher discriminant analysis.

use serde::{Deserialize, Serialize};

use super::{check_gram, check_kernel_columns, encode_labels, fix_signs, Embedding};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// Discriminant directions in the span of the training points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KfdaModel {
    /// `m × dims` expansion coefficients; a point with kernel column `k`
    /// projects to `kᵀA`.
    #[serde(with = "crate::io::matrix_rows")]
    pub coefficients: Matrix,
    pub eigenvalues: Vec<f64>,
    pub ridge: f64,
    pub embedding: Embedding,
}

impl KfdaModel {
    /// Projects test points given the `m × t` kernel values between training
    /// and test points; one row per test point.
    pub fn project(&self, kernel_columns: &Matrix) -> Result<Matrix> {
        check_kernel_columns(self.coefficients.nrows(), kernel_columns)?;
        Ok(kernel_columns.transpose() * &self.coefficients)
    }
}

/// Kernel FDA with `dims ≤ classes − 1` output dimensions.
///
/// Solves `B a = λ (N + ridge·I) a` with `B` and `N` the between- and
/// within-class scatter in the dual. `ridge = None` uses
/// `1e-4·trace(N)/m`, or `1e-8·trace(K)/m` when `N` vanishes.
pub fn kernel_fda(
    k: &Matrix,
    labels: &[i64],
    ridge: Option<f64>,
    dims: usize,
) -> Result<KfdaModel> {
    let m = k.nrows();
    if labels.len() != m {
        return Err(Error::dims(format!("{m} labels"), labels.len()));
    }
    check_gram(k)?;
    let (classes, idx) = encode_labels(labels);
    let max = classes.len().saturating_sub(1);
    if dims < 1 || dims > max {
        return Err(Error::BadDims { dims, max });
    }
    if let Some(r) = ridge {
        if !(r >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ridge must be ≥ 0, got {r}"
            )));
        }
    }

    let mut counts = vec![0usize; classes.len()];
    let mut class_sums = Matrix::zeros(m, classes.len());
    for (j, &c) in idx.iter().enumerate() {
        counts[c] += 1;
        class_sums.column_mut(c).axpy(1.0, &k.column(j), 1.0);
    }
    let global = k.column_sum() / m as f64;
    let mut between = Matrix::zeros(m, m);
    let mut within = k * k;
    for (c, &n) in counts.iter().enumerate() {
        let mean: Vector = class_sums.column(c) / n as f64;
        let diff = &mean - &global;
        between += (&diff * diff.transpose()) * n as f64;
        within -= (&mean * mean.transpose()) * n as f64;
    }
    let within = linalg::symmetrize(&within);
    let between = linalg::symmetrize(&between);

    let n_trace = within.trace().max(0.0);
    let ridge = match ridge {
        Some(r) => r,
        None if n_trace > 0.0 => 1e-4 * n_trace / m as f64,
        None => (1e-8 * k.trace() / m as f64).max(1e-12),
    };
    let regularized = &within + Matrix::identity(m, m) * ridge;
    let scale = regularized.trace().abs().max(f64::MIN_POSITIVE) / m as f64;
    let chol = regularized
        .clone()
        .cholesky()
        .filter(|c| {
            let d = c.l().diagonal();
            d.iter().all(|v| v * v > 1e-12 * scale)
        })
        .ok_or(Error::SingularScatter)?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().ok_or(Error::SingularScatter)?;
    let reduced = linalg::symmetrize(&(&l_inv * &between * l_inv.transpose()));
    let eig = linalg::sym_eig(&reduced)?;
    let mut coefficients = Matrix::zeros(m, dims);
    for d in 0..dims {
        coefficients.set_column(d, &(l_inv.transpose() * eig.vectors.column(d)));
    }
    let mut coords = k * &coefficients;
    fix_signs(&mut coords, Some(&mut coefficients));
    let eigenvalues: Vec<f64> = eig.values.iter().take(dims).copied().collect();
    Ok(KfdaModel {
        coefficients,
        eigenvalues: eigenvalues.clone(),
        ridge,
        embedding: Embedding {
            coords,
            eigenvalues,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicated_points_are_separated() {
        // Two classes, each a duplicated point, linear kernel on 1-D inputs.
        let x = [0.0, 0.0, 1.0, 1.0];
        let k = Matrix::from_fn(4, 4, |i, j| 1.0 + x[i] * x[j]);
        let model = kernel_fda(&k, &[0, 0, 1, 1], None, 1).unwrap();
        let c = &model.embedding.coords;
        let (a, b) = (c[(0, 0)], c[(2, 0)]);
        assert!((c[(1, 0)] - a).abs() < 1e-9 && (c[(3, 0)] - b).abs() < 1e-9);
        assert!((a - b).abs() > 1e-6);
    }

    #[test]
    fn zero_ridge_with_singular_scatter_fails() {
        let k = Matrix::from_element(4, 4, 1.0);
        assert_eq!(
            kernel_fda(&k, &[0, 0, 1, 1], Some(0.0), 1).unwrap_err(),
            Error::SingularScatter
        );
    }

    #[test]
    fn too_many_dims() {
        let k = Matrix::identity(4, 4);
        assert_eq!(
            kernel_fda(&k, &[0, 0, 1, 1], None, 2).unwrap_err(),
            Error::BadDims { dims: 2, max: 1 }
        );
    }

    #[test]
    fn projection_of_training_columns_matches_coords() {
        let x: [f64; 6] = [0.0, 0.3, 1.0, 1.4, 2.2, 2.0];
        let k = Matrix::from_fn(6, 6, |i, j| (-(x[i] - x[j]).powi(2)).exp());
        let model = kernel_fda(&k, &[0, 0, 1, 1, 2, 2], None, 2).unwrap();
        let p = model.project(&k).unwrap();
        assert!((p - &model.embedding.coords).norm() < 1e-10);
    }
}
