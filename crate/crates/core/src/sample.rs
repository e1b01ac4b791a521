//! Seeded samplers for manifold points.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::grassmann::GrassmannPoint;
use crate::linalg::Matrix;
use crate::spd::SpdMatrix;

/// Symmetric matrix with independent standard normal entries on and above
/// the diagonal.
pub fn gaussian_symmetric<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Matrix {
    let mut a = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v: f64 = rng.sample(StandardNormal);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Log-normal SPD sample: `exp(A)` with `A` standard normal symmetric.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, d: usize) -> SpdMatrix {
    SpdMatrix::exp_of(&gaussian_symmetric(rng, d)).expect("exp of symmetric is SPD")
}

/// Orthonormalized `n × r` standard normal matrix.
pub fn random_grassmann<R: Rng + ?Sized>(rng: &mut R, n: usize, r: usize) -> GrassmannPoint {
    loop {
        let raw = gaussian_matrix(rng, n, r);
        if let Ok(p) = GrassmannPoint::new(&raw) {
            return p;
        }
    }
}

/// Haar-distributed orthogonal matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Matrix {
    let raw = gaussian_matrix(rng, d, d);
    let qr = raw.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}
