//! Kernel methods on precomputed Gram matrices.
//!
//! Nothing here sees manifold points. Every algorithm takes an `m × m` Gram
//! matrix (and, for prediction, an `m × t` block of kernel values between
//! training and test points), so the same code serves every manifold and
//! metric.

mod kfda;
mod kmeans;
mod kpca;
mod mkl;
mod svm;

pub use kfda::{kernel_fda, KfdaModel};
pub use kmeans::{clustering_accuracy, kernel_kmeans, ClusterResult, DEFAULT_RESTARTS};
pub use kpca::kernel_pca;
pub use mkl::{mkl_train, MklModel};
pub use svm::{
    multiclass_svm, svm_predict, svm_train, svm_train_with, BinaryMachine, MulticlassMode,
    MulticlassSvm, SvmModel, SvmOptions, KKT_TOL,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel;
use crate::linalg::{Matrix, Vector};

/// Low-dimensional coordinates of the training points, one row per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    #[serde(with = "crate::io::matrix_rows")]
    pub coords: Matrix,
    pub eigenvalues: Vec<f64>,
}

/// PSD tolerance for an `m × m` Gram matrix.
pub fn gram_tol(k: &Matrix) -> f64 {
    let m = k.nrows().max(1) as f64;
    1e-8 * m * (k.trace() / m).max(1.0)
}

/// Rejects non-square, asymmetric or clearly indefinite Gram matrices.
pub fn check_gram(k: &Matrix) -> Result<()> {
    if k.nrows() == 0 {
        return Err(Error::EmptySet);
    }
    let (ok, min) = kernel::psd_check(k, gram_tol(k))?;
    if !ok {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

/// Linear Gram matrix `⟨xᵢ, xⱼ⟩` of plain vectors.
pub fn linear_gram(rows: &[Vector]) -> Result<Matrix> {
    let first = rows.first().ok_or(Error::EmptySet)?;
    let m = rows.len();
    let mut k = Matrix::zeros(m, m);
    for i in 0..m {
        if rows[i].len() != first.len() {
            return Err(Error::dims(first.len(), rows[i].len()));
        }
        for j in 0..=i {
            let v = rows[i].dot(&rows[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Flips each column so its largest-magnitude entry (first on ties) is
/// positive. Applied to `alongside` too, which must have the same columns.
pub(crate) fn fix_signs(coords: &mut Matrix, mut alongside: Option<&mut Matrix>) {
    for c in 0..coords.ncols() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for v in coords.column(c).iter() {
            if v.abs() > best {
                best = v.abs();
                sign = v.signum();
            }
        }
        if sign < 0.0 {
            coords.column_mut(c).neg_mut();
            if let Some(a) = alongside.as_deref_mut() {
                a.column_mut(c).neg_mut();
            }
        }
    }
}

/// Distinct labels in ascending order and each sample's class index.
pub(crate) fn encode_labels(labels: &[i64]) -> (Vec<i64>, Vec<usize>) {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let idx = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    (classes, idx)
}

pub(crate) fn check_kernel_columns(m: usize, cols: &Matrix) -> Result<()> {
    if cols.nrows() != m {
        return Err(Error::dims(format!("{m} kernel rows"), cols.nrows()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_check_rejects_indefinite() {
        let k = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(check_gram(&k), Err(Error::NotPsd(_))));
        assert!(check_gram(&Matrix::identity(3, 3)).is_ok());
    }

    #[test]
    fn sign_fix_makes_dominant_entry_positive() {
        let mut c = Matrix::from_row_slice(3, 1, &[0.5, -2.0, 1.0]);
        fix_signs(&mut c, None);
        assert_eq!(c[(1, 0)], 2.0);
    }
}
