//! Kernel principal component analysis.

use super::{check_gram, fix_signs, Embedding};
use crate::error::{Error, Result};
use crate::kernel::centering_projector;
use crate::linalg::{self, Matrix};

/// Top-`l` kernel principal components of the training points.
///
/// Column `c` of the coordinates has squared norm equal to eigenvalue `c` of
/// the double-centered Gram matrix `HKH`. Eigenvalues are reported as
/// computed (tiny negative values are possible at full rank).
pub fn kernel_pca(k: &Matrix, l: usize) -> Result<Embedding> {
    let m = k.nrows();
    if l < 1 || l > m {
        return Err(Error::BadL { l, m });
    }
    check_gram(k)?;
    let h = centering_projector(m);
    let centered = linalg::symmetrize(&(&h * k * &h));
    let eig = linalg::sym_eig(&centered)?;
    let mut coords = Matrix::zeros(m, l);
    for c in 0..l {
        let scale = eig.values[c].max(0.0).sqrt();
        coords.set_column(c, &(eig.vectors.column(c) * scale));
    }
    fix_signs(&mut coords, None);
    Ok(Embedding {
        coords,
        eigenvalues: eig.values.iter().take(l).copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::linear_gram;
    use crate::sample::gaussian_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_rows_give_zero_coordinates() {
        let k = Matrix::from_element(5, 5, 0.7);
        let e = kernel_pca(&k, 2).unwrap();
        assert!(e.coords.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn full_rank_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = gaussian_matrix(&mut rng, 12, 4);
        let k = &x * x.transpose();
        let e = kernel_pca(&k, 12).unwrap();
        let h = centering_projector(12);
        let tr = (&h * &k * &h).trace();
        assert!((e.eigenvalues.iter().sum::<f64>() - tr).abs() < 1e-9);
        for w in e.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn squared_column_norm_is_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = gaussian_matrix(&mut rng, 10, 3);
        let rows: Vec<_> = x.row_iter().map(|r| r.transpose()).collect();
        let e = kernel_pca(&linear_gram(&rows).unwrap(), 3).unwrap();
        for c in 0..3 {
            assert!((e.coords.column(c).norm_squared() - e.eigenvalues[c]).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_l() {
        assert_eq!(
            kernel_pca(&Matrix::identity(3, 3), 4),
            Err(Error::BadL { l: 4, m: 3 })
        );
    }
}
