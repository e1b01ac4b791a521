//! The manifold of symmetric positive definite matrices.
//!
//! Five distances are provided. Three of them (log-Euclidean, Cholesky and
//! power-Euclidean) are Euclidean distances after an explicit map
//! `ψ: Sym⁺_d → Sym_d` (see [`SpdMetric::embed`]), which is what makes the
//! Gaussian kernel built on them positive definite for every bandwidth.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Default exponent of the power-Euclidean metric.
pub const DEFAULT_POWER_ALPHA: f64 = 0.5;

/// Root Stein radicands down to this value are treated as roundoff.
const STEIN_RADICAND_SLACK: f64 = 1e-12;

/// A validated `d × d` symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    inner: Matrix,
    /// Diagonal shift added by [`make_spd`] to reach positive definiteness.
    shift: f64,
}

impl SpdMatrix {
    /// Strict constructor; see [`make_spd`].
    pub fn new(raw: Matrix) -> Result<Self> {
        make_spd(&raw, None)
    }

    pub fn identity(d: usize) -> Self {
        SpdMatrix {
            inner: Matrix::identity(d, d),
            shift: 0.0,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&linalg::Vector::from_row_slice(diag)))
    }

    /// `exp(A)` for symmetric `A`.
    pub fn exp_of(a: &Matrix) -> Result<Self> {
        let inner = linalg::spd_exp(a)?;
        // exp cannot produce a non-positive spectrum except by underflow
        make_spd(&inner, None)
    }

    pub(crate) fn from_trusted(inner: Matrix) -> Self {
        SpdMatrix { inner, shift: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    /// Regularization shift applied at construction, zero for strict inputs.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn log(&self) -> Matrix {
        linalg::spd_log(&self.inner).expect("validated SPD matrix")
    }

    pub fn powf(&self, alpha: f64) -> Result<SpdMatrix> {
        Ok(SpdMatrix::from_trusted(linalg::spd_power(
            &self.inner,
            alpha,
        )?))
    }

    pub fn inv_sqrt(&self) -> Matrix {
        linalg::spd_inv_sqrt(&self.inner).expect("validated SPD matrix")
    }

    pub fn sqrt(&self) -> Matrix {
        linalg::spd_power(&self.inner, 0.5).expect("validated SPD matrix")
    }

    pub fn cholesky(&self) -> Matrix {
        linalg::cholesky_lower(&self.inner).expect("validated SPD matrix")
    }

    pub fn logdet(&self) -> f64 {
        linalg::spd_logdet(&self.inner).expect("validated SPD matrix")
    }

    /// `Aᵀ S A` for invertible `A`.
    pub fn congruence(&self, a: &Matrix) -> Result<SpdMatrix> {
        make_spd(&(a.transpose() * &self.inner * a), None)
    }
}

/// Validates (or, with `regularize = Some(ε)`, repairs) a raw square matrix.
///
/// The input is symmetrized first. In strict mode the minimum eigenvalue must
/// exceed the SPD floor. With `ε`, a matrix that fails the check is returned
/// as `sym(raw) + εI` if that passes.
pub fn make_spd(raw: &Matrix, regularize: Option<f64>) -> Result<SpdMatrix> {
    linalg::ensure_square(raw)?;
    let sym = linalg::symmetrize_checked(raw)?;
    let check = |m: &Matrix| -> Result<()> {
        let eig = linalg::sym_eig(m)?;
        let floor = linalg::spd_floor(m);
        let min_eigen = eig.min_value();
        if min_eigen > floor {
            Ok(())
        } else {
            Err(Error::NotSpd { min_eigen, floor })
        }
    };
    match (check(&sym), regularize) {
        (Ok(()), _) => Ok(SpdMatrix {
            inner: sym,
            shift: 0.0,
        }),
        (Err(e), None) => Err(e),
        (Err(_), Some(eps)) => {
            if !(eps > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "regularization must be positive, got {eps}"
                )));
            }
            let d = sym.nrows();
            let shifted = sym + Matrix::identity(d, d) * eps;
            check(&shifted)?;
            Ok(SpdMatrix {
                inner: shifted,
                shift: eps,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum SpdMetric {
    LogEuclidean,
    AffineInvariant,
    Cholesky,
    PowerEuclidean { alpha: f64 },
    RootStein,
}

impl SpdMetric {
    pub fn power_euclidean(alpha: f64) -> Result<Self> {
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(Error::ZeroExponent);
        }
        Ok(SpdMetric::PowerEuclidean { alpha })
    }

    pub fn all_default() -> [SpdMetric; 5] {
        [
            SpdMetric::LogEuclidean,
            SpdMetric::AffineInvariant,
            SpdMetric::Cholesky,
            SpdMetric::PowerEuclidean {
                alpha: DEFAULT_POWER_ALPHA,
            },
            SpdMetric::RootStein,
        ]
    }

    /// True for the metrics whose Gaussian kernel is positive definite for
    /// every `γ > 0`.
    pub fn has_pd_gaussian(&self) -> bool {
        matches!(
            self,
            SpdMetric::LogEuclidean | SpdMetric::Cholesky | SpdMetric::PowerEuclidean { .. }
        )
    }

    /// Map `ψ` into symmetric (or lower-triangular) matrices under which the
    /// metric is the Frobenius distance, if one exists.
    pub fn embed(&self, s: &SpdMatrix) -> Option<Matrix> {
        match *self {
            SpdMetric::LogEuclidean => Some(s.log()),
            SpdMetric::Cholesky => Some(s.cholesky()),
            SpdMetric::PowerEuclidean { alpha } => {
                Some(linalg::spd_power(s.as_matrix(), alpha).ok()? / alpha.abs())
            }
            SpdMetric::AffineInvariant | SpdMetric::RootStein => None,
        }
    }
}

impl fmt::Display for SpdMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpdMetric::LogEuclidean => write!(f, "log-euclidean"),
            SpdMetric::AffineInvariant => write!(f, "affine-invariant"),
            SpdMetric::Cholesky => write!(f, "cholesky"),
            SpdMetric::PowerEuclidean { alpha } => write!(f, "power-euclidean({alpha})"),
            SpdMetric::RootStein => write!(f, "root-stein"),
        }
    }
}

impl FromStr for SpdMetric {
    type Err = Error;

    /// Accepts `power-euclidean` (α = 0.5) or `power-euclidean(α)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "log-euclidean" | "le" => Ok(SpdMetric::LogEuclidean),
            "affine-invariant" | "ai" => Ok(SpdMetric::AffineInvariant),
            "cholesky" => Ok(SpdMetric::Cholesky),
            "power-euclidean" => SpdMetric::power_euclidean(DEFAULT_POWER_ALPHA),
            "root-stein" | "root-stein-divergence" => Ok(SpdMetric::RootStein),
            other => {
                if let Some(arg) = other
                    .strip_prefix("power-euclidean(")
                    .and_then(|r| r.strip_suffix(')'))
                {
                    let alpha: f64 = arg
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad power exponent '{arg}'")))?;
                    SpdMetric::power_euclidean(alpha)
                } else {
                    Err(Error::Parse(format!("unknown SPD metric '{other}'")))
                }
            }
        }
    }
}

fn check_dims(a: &SpdMatrix, b: &SpdMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::dims(a.dim(), b.dim()));
    }
    Ok(())
}

/// Distance between two SPD matrices under `metric`.
pub fn distance(metric: SpdMetric, a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_dims(a, b)?;
    match metric {
        SpdMetric::LogEuclidean | SpdMetric::Cholesky | SpdMetric::PowerEuclidean { .. } => {
            let ea = metric.embed(a).ok_or(Error::ZeroExponent)?;
            let eb = metric.embed(b).ok_or(Error::ZeroExponent)?;
            Ok((ea - eb).norm())
        }
        SpdMetric::AffineInvariant => affine_invariant(a, b),
        SpdMetric::RootStein => root_stein(a, b),
    }
}

fn affine_invariant(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    let w = a.inv_sqrt();
    let sandwich = &w * b.as_matrix() * &w;
    let eig = linalg::sym_eig(&linalg::symmetrize(&sandwich))?;
    let sq: f64 = eig
        .values
        .iter()
        .map(|&l| {
            let l = l.max(f64::MIN_POSITIVE);
            l.ln() * l.ln()
        })
        .sum();
    Ok(sq.sqrt())
}

/// Root Stein divergence from Cholesky log-determinants.
pub(crate) fn root_stein_from_logdets(
    a: &SpdMatrix,
    b: &SpdMatrix,
    logdet_a: f64,
    logdet_b: f64,
) -> Result<f64> {
    let mid = (a.as_matrix() + b.as_matrix()) * 0.5;
    let logdet_mid = linalg::spd_logdet(&mid)?;
    let radicand = logdet_mid - 0.5 * (logdet_a + logdet_b);
    if radicand < -STEIN_RADICAND_SLACK {
        return Err(Error::Numerical(format!(
            "negative root Stein radicand {radicand:.3e}"
        )));
    }
    Ok(radicand.max(0.0).sqrt())
}

fn root_stein(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    root_stein_from_logdets(a, b, a.logdet(), b.logdet())
}

fn check_set(points: &[SpdMatrix]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptySet)?;
    let d = first.dim();
    for p in points {
        if p.dim() != d {
            return Err(Error::dims(d, p.dim()));
        }
    }
    Ok(d)
}

fn mean_of(mats: impl Iterator<Item = Matrix>, d: usize, count: usize) -> Matrix {
    let mut acc = Matrix::zeros(d, d);
    for m in mats {
        acc += m;
    }
    acc / count as f64
}

/// `exp((1/m) Σ log Xᵢ)`.
pub fn karcher_mean_log_euclidean(points: &[SpdMatrix]) -> Result<SpdMatrix> {
    let d = check_set(points)?;
    let mean_log = mean_of(points.iter().map(|p| p.log()), d, points.len());
    SpdMatrix::exp_of(&mean_log)
}

/// Fréchet/Karcher mean under `metric`.
///
/// Log-Euclidean, Cholesky and power-Euclidean means are closed forms in the
/// embedded space. The affine-invariant mean runs the fixed-point iteration
/// `M ← M^{1/2} exp((1/m) Σ log(M^{-1/2} Xᵢ M^{-1/2})) M^{1/2}` from the
/// log-Euclidean mean until the tangent step norm drops below `tol`.
pub fn karcher_mean_iterative(
    metric: SpdMetric,
    points: &[SpdMatrix],
    max_iter: usize,
    tol: f64,
) -> Result<SpdMatrix> {
    let d = check_set(points)?;
    let m = points.len();
    match metric {
        SpdMetric::LogEuclidean => karcher_mean_log_euclidean(points),
        SpdMetric::Cholesky => {
            let l = mean_of(points.iter().map(|p| p.cholesky()), d, m);
            make_spd(&(&l * l.transpose()), None)
        }
        SpdMetric::PowerEuclidean { alpha } => {
            if alpha == 0.0 {
                return Err(Error::ZeroExponent);
            }
            let mean_pow = mean_of(
                points
                    .iter()
                    .map(|p| linalg::spd_power(p.as_matrix(), alpha).expect("validated SPD")),
                d,
                m,
            );
            Ok(SpdMatrix::from_trusted(linalg::spd_power(
                &mean_pow,
                1.0 / alpha,
            )?))
        }
        SpdMetric::AffineInvariant => {
            let mut current = karcher_mean_log_euclidean(points)?;
            for _ in 0..max_iter {
                let step = affine_invariant_tangent_mean(&current, points);
                if step.norm() < tol {
                    return Ok(current);
                }
                let root = current.sqrt();
                let next = &root * linalg::spd_exp(&step)? * &root;
                current = make_spd(&next, None)?;
            }
            if affine_invariant_tangent_mean(&current, points).norm() < tol {
                Ok(current)
            } else {
                Err(Error::NoConvergence("affine-invariant Karcher mean"))
            }
        }
        SpdMetric::RootStein => Err(Error::UnsupportedMetric(metric.to_string())),
    }
}

/// `(1/m) Σ log(M^{-1/2} Xᵢ M^{-1/2})`, the whitened Riemannian gradient
/// (negated) of `½·(1/m) Σ d²_AI(M, Xᵢ)`.
pub fn affine_invariant_tangent_mean(mean: &SpdMatrix, points: &[SpdMatrix]) -> Matrix {
    let w = mean.inv_sqrt();
    let d = mean.dim();
    mean_of(
        points.iter().map(|p| {
            let sandwich = linalg::symmetrize(&(&w * p.as_matrix() * &w));
            linalg::sym_eig(&sandwich)
                .expect("symmetric by construction")
                .map(|l| l.max(f64::MIN_POSITIVE).ln())
        }),
        d,
        points.len(),
    )
}

/// `(1/m) Σ d^p(Xᵢ, mean)`.
pub fn dispersion_stat(
    metric: SpdMetric,
    points: &[SpdMatrix],
    p: f64,
    mean: &SpdMatrix,
) -> Result<f64> {
    check_set(points)?;
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "p must be positive, got {p}"
        )));
    }
    let mut acc = 0.0;
    for x in points {
        acc += distance(metric, x, mean)?.powf(p);
    }
    Ok(acc / points.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::random_spd;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, SQRT_2};

    fn diag(v: &[f64]) -> SpdMatrix {
        SpdMatrix::from_diagonal(v).unwrap()
    }

    #[test]
    fn make_spd_modes() {
        let i3 = Matrix::identity(3, 3);
        let s = make_spd(&i3, None).unwrap();
        assert_eq!(s.as_matrix(), &i3);
        assert_eq!(s.shift(), 0.0);

        let z = make_spd(&Matrix::zeros(3, 3), Some(1e-5)).unwrap();
        assert_eq!(z.as_matrix(), &(Matrix::identity(3, 3) * 1e-5));
        assert!(matches!(
            make_spd(&Matrix::zeros(3, 3), None),
            Err(Error::NotSpd { .. })
        ));
        assert!(matches!(
            make_spd(&Matrix::zeros(3, 2), None),
            Err(Error::NonSquare { .. })
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        use rand::Rng;
        for _ in 0..10 {
            let a = Matrix::from_fn(6, 4, |_, _| rng.random_range(-1.0..1.0));
            let g = a.transpose() * &a + Matrix::identity(4, 4) * 1e-8;
            assert!(make_spd(&g, None).is_ok());
        }
    }

    #[test]
    fn distance_closed_forms() {
        let i2 = SpdMatrix::identity(2);
        let e2 = diag(&[E * E, E * E]);
        assert_relative_eq!(
            distance(SpdMetric::LogEuclidean, &i2, &e2).unwrap(),
            2.0 * SQRT_2,
            epsilon = 1e-13
        );
        assert_relative_eq!(
            distance(SpdMetric::Cholesky, &diag(&[4.0]), &diag(&[9.0])).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            distance(
                SpdMetric::PowerEuclidean { alpha: 0.5 },
                &diag(&[4.0]),
                &diag(&[9.0])
            )
            .unwrap(),
            2.0,
            epsilon = 1e-14
        );
        assert!(matches!(
            distance(SpdMetric::LogEuclidean, &i2, &SpdMatrix::identity(3)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn affine_invariant_from_identity_is_log_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let s = random_spd(&mut rng, 4);
            let eig = linalg::sym_eig(s.as_matrix()).unwrap();
            let oracle = eig
                .values
                .iter()
                .map(|l| l.ln().powi(2))
                .sum::<f64>()
                .sqrt();
            let d = distance(SpdMetric::AffineInvariant, &SpdMatrix::identity(4), &s).unwrap();
            assert_relative_eq!(d, oracle, max_relative = 1e-10);
            let stein = distance(SpdMetric::RootStein, &s, &s).unwrap();
            assert!(stein.abs() < 1e-6);
        }
    }

    #[test]
    fn karcher_closed_forms() {
        let s = diag(&[2.0, 5.0]);
        let m = karcher_mean_log_euclidean(std::slice::from_ref(&s)).unwrap();
        assert!((m.as_matrix() - s.as_matrix()).norm() < 1e-13);

        let m =
            karcher_mean_log_euclidean(&[SpdMatrix::identity(2), diag(&[E * E, E * E])]).unwrap();
        assert!((m.as_matrix() - diag(&[E, E]).as_matrix()).norm() < 1e-13);

        let m = karcher_mean_iterative(
            SpdMetric::Cholesky,
            &[diag(&[4.0]), diag(&[16.0])],
            10,
            1e-12,
        )
        .unwrap();
        assert_relative_eq!(m.as_matrix()[(0, 0)], 9.0, epsilon = 1e-12);

        let m = karcher_mean_iterative(
            SpdMetric::AffineInvariant,
            std::slice::from_ref(&s),
            10,
            1e-12,
        )
        .unwrap();
        assert!((m.as_matrix() - s.as_matrix()).norm() < 1e-12);

        assert!(matches!(
            karcher_mean_iterative(SpdMetric::RootStein, &[s], 10, 1e-12),
            Err(Error::UnsupportedMetric(_))
        ));
        assert_eq!(
            karcher_mean_log_euclidean(&[]).unwrap_err(),
            Error::EmptySet
        );
    }

    #[test]
    fn power_mean_is_inverse_map_of_euclidean_mean() {
        let m = karcher_mean_iterative(
            SpdMetric::PowerEuclidean { alpha: 0.5 },
            &[diag(&[4.0]), diag(&[16.0])],
            10,
            1e-12,
        )
        .unwrap();
        assert_relative_eq!(m.as_matrix()[(0, 0)], 9.0, epsilon = 1e-12);
    }

    #[test]
    fn affine_invariant_mean_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pts: Vec<_> = (0..8).map(|_| random_spd(&mut rng, 3)).collect();
        let m = karcher_mean_iterative(SpdMetric::AffineInvariant, &pts, 200, 1e-10).unwrap();
        assert!(affine_invariant_tangent_mean(&m, &pts).norm() < 1e-7);
    }

    #[test]
    fn dispersion_cases() {
        let s = diag(&[2.0, 3.0]);
        let zero =
            dispersion_stat(SpdMetric::LogEuclidean, &[s.clone(), s.clone()], 1.0, &s).unwrap();
        assert_eq!(zero, 0.0);
        let v = dispersion_stat(
            SpdMetric::LogEuclidean,
            &[SpdMatrix::identity(2), diag(&[E * E, E * E])],
            1.0,
            &diag(&[E, E]),
        )
        .unwrap();
        assert_relative_eq!(v, SQRT_2, epsilon = 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let pts: Vec<_> = (0..10).map(|_| random_spd(&mut rng, 3)).collect();
        let mean = karcher_mean_log_euclidean(&pts).unwrap();
        let direct: f64 = pts
            .iter()
            .map(|x| distance(SpdMetric::LogEuclidean, x, &mean).unwrap().powi(2))
            .sum::<f64>()
            / 10.0;
        let got = dispersion_stat(SpdMetric::LogEuclidean, &pts, 2.0, &mean).unwrap();
        assert_relative_eq!(got, direct, max_relative = 1e-12);
        assert!(dispersion_stat(SpdMetric::LogEuclidean, &pts, 0.0, &mean).is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for m in SpdMetric::all_default() {
            let parsed: SpdMetric = m.to_string().parse().unwrap();
            assert_eq!(parsed, m);
        }
        assert_eq!(
            "power-euclidean(0.25)".parse::<SpdMetric>().unwrap(),
            SpdMetric::PowerEuclidean { alpha: 0.25 }
        );
        assert!("power-euclidean(0)".parse::<SpdMetric>().is_err());
        assert!("frobenius".parse::<SpdMetric>().is_err());
    }
}
