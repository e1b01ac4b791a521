//! Dense matrix primitives: symmetric eigendecomposition, spectral matrix
//! functions for SPD matrices, Cholesky and thin SVD.
//!
//! Every matrix function (log, exp, fractional power, inverse square root)
//! goes through a single symmetric eigendecomposition `S = U diag(λ) Uᵀ`
//! and maps the spectrum; no Padé or scaling-and-squaring is involved.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative symmetry tolerance.
pub const SYM_TOL: f64 = 1e-10;

const EIG_MAX_ITER: usize = 10_000;

/// Largest |a_ij − a_ji| scaled by `max(1, ‖A‖_F)`.
pub fn asymmetry(a: &Matrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst / a.norm().max(1.0)
}

pub(crate) fn ensure_square(a: &Matrix) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(())
}

/// Returns `(A + Aᵀ)/2` when `A` is symmetric within `10·SYM_TOL`, otherwise
/// `NonSymmetric`.
pub fn symmetrize_checked(a: &Matrix) -> Result<Matrix> {
    ensure_square(a)?;
    let asym = asymmetry(a);
    if !asym.is_finite() || asym > 10.0 * SYM_TOL {
        return Err(Error::NonSymmetric(asym));
    }
    Ok(symmetrize(a))
}

pub(crate) fn symmetrize(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

/// Relative eigenvalue floor below which a matrix is not treated as SPD.
pub fn spd_floor(s: &Matrix) -> f64 {
    let d = s.nrows().max(1) as f64;
    1e-12 * (s.trace() / d).max(1.0)
}

/// Eigenpairs of a symmetric matrix, values in non-increasing order.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    pub values: Vector,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: Matrix,
}

impl EigenDecomp {
    pub fn min_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn max_value(&self) -> f64 {
        self.values[0]
    }

    /// `U diag(f(λ)) Uᵀ`, symmetrized to remove roundoff asymmetry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let u = &self.vectors;
        let mut scaled = u.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[j]);
        }
        symmetrize(&(scaled * u.transpose()))
    }

    pub fn reconstruct(&self) -> Matrix {
        self.map(|x| x)
    }
}

pub fn sym_eig(s: &Matrix) -> Result<EigenDecomp> {
    let s = symmetrize_checked(s)?;
    let eig = s
        .try_symmetric_eigen(f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::NoConvergence("symmetric eigendecomposition"))?;
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenDecomp { values, vectors })
}

/// Eigendecomposition that additionally enforces strict positive definiteness.
pub fn spd_eig(s: &Matrix) -> Result<EigenDecomp> {
    let eig = sym_eig(s)?;
    let floor = spd_floor(s);
    let min_eigen = eig.min_value();
    if !(min_eigen > floor) {
        return Err(Error::NotSpd { min_eigen, floor });
    }
    Ok(eig)
}

/// Principal matrix logarithm of an SPD matrix.
pub fn spd_log(s: &Matrix) -> Result<Matrix> {
    Ok(spd_eig(s)?.map(f64::ln))
}

/// Matrix exponential of a symmetric matrix; the result is SPD.
pub fn spd_exp(a: &Matrix) -> Result<Matrix> {
    Ok(sym_eig(a)?.map(f64::exp))
}

/// `S^α` for SPD `S`, mapping eigenvalues `λ ↦ λ^α`.
pub fn spd_power(s: &Matrix, alpha: f64) -> Result<Matrix> {
    if alpha == 0.0 {
        return Err(Error::ZeroExponent);
    }
    Ok(spd_eig(s)?.map(|x| x.powf(alpha)))
}

/// `S^{-1/2}` with eigenvalues clamped from below at the SPD floor.
pub fn spd_inv_sqrt(s: &Matrix) -> Result<Matrix> {
    let floor = spd_floor(s);
    Ok(spd_eig(s)?.map(|x| 1.0 / x.max(floor).sqrt()))
}

/// Lower-triangular Cholesky factor with strictly positive diagonal.
pub fn cholesky_lower(s: &Matrix) -> Result<Matrix> {
    let s = symmetrize_checked(s)?;
    let floor = spd_floor(&s);
    let chol = s.clone().cholesky().ok_or(Error::NotSpd {
        min_eigen: f64::NAN,
        floor,
    })?;
    let l = chol.l();
    if l.diagonal().iter().any(|&x| !(x > 0.0)) {
        return Err(Error::NotSpd {
            min_eigen: f64::NAN,
            floor,
        });
    }
    Ok(l)
}

/// `log det S` from the Cholesky factor: `2 Σ log L_ii`.
pub fn spd_logdet(s: &Matrix) -> Result<f64> {
    let l = cholesky_lower(s)?;
    Ok(2.0 * l.diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

/// Thin SVD `A = U diag(s) Vᵀ` of an `n × r` matrix with `n ≥ r`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// `n × r`, orthonormal columns.
    pub u: Matrix,
    /// Non-negative, non-increasing.
    pub s: Vector,
    /// `r × r` orthogonal.
    pub v: Matrix,
}

pub fn thin_svd(a: &Matrix) -> Result<ThinSvd> {
    let (n, r) = a.shape();
    if r == 0 || n < r {
        return Err(Error::BadShape(format!(
            "thin SVD needs n >= r >= 1, got {n}x{r}"
        )));
    }
    let svd = a
        .clone()
        .try_svd(true, true, f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::NoConvergence("singular value decomposition"))?;
    let (u_raw, vt_raw) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::NoConvergence("singular value decomposition")),
    };
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let mut u = Matrix::zeros(n, r);
    let mut v = Matrix::zeros(r, r);
    let mut s = Vector::zeros(r);
    for (dst, &src) in order.iter().enumerate() {
        // roundoff can leave tiny negatives; singular values are clamped at 0
        s[dst] = svd.singular_values[src].max(0.0);
        u.set_column(dst, &u_raw.column(src));
        v.set_column(dst, &vt_raw.row(src).transpose());
    }
    Ok(ThinSvd { u, s, v })
}

/// Spectral norm of a general matrix.
pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().iter().cloned().fold(0.0, f64::max)
}
