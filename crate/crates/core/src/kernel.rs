//! Gaussian RBF kernels `k(x, y) = exp(−γ d²(x, y))` on manifolds, Gram
//! matrices, and empirical definiteness tests.
//!
//! A kernel is audited through its Gram matrices: positive definiteness of
//! the kernel implies every Gram matrix is PSD ([`psd_check`]), and negative
//! definiteness of `d²` is tested on the centered matrix `P D² P` with
//! `P = I − (1/m)11ᵀ` ([`cnd_check`]). [`definiteness_search`] samples random
//! point sets looking for a Gram matrix with a clearly negative eigenvalue.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{self, GrassmannMetric, GrassmannPoint};
use crate::linalg::{self, Matrix, Vector};
use crate::sample;
use crate::spd::{self, SpdMatrix, SpdMetric};

/// Symmetry tolerance for Gram and distance matrices.
const GRAM_SYM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Manifold {
    Spd(SpdMetric),
    Grassmann(GrassmannMetric),
    /// Ordinary Euclidean distance; SPD points are compared entrywise
    /// (Frobenius distance).
    Euclidean,
}

impl Manifold {
    pub fn has_pd_gaussian(&self) -> bool {
        match self {
            Manifold::Spd(m) => m.has_pd_gaussian(),
            Manifold::Grassmann(m) => m.has_pd_gaussian(),
            Manifold::Euclidean => true,
        }
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Manifold::Spd(m) => write!(f, "spd:{m}"),
            Manifold::Grassmann(m) => write!(f, "grassmann:{m}"),
            Manifold::Euclidean => write!(f, "euclidean"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub manifold: Manifold,
    gamma: f64,
}

impl KernelSpec {
    pub fn new(manifold: Manifold, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Ok(KernelSpec { manifold, gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        KernelSpec::new(self.manifold, gamma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Spd(SpdMatrix),
    Grassmann(GrassmannPoint),
    Euclidean(Vector),
}

impl Point {
    fn shape(&self) -> (usize, usize) {
        match self {
            Point::Spd(s) => (s.dim(), s.dim()),
            Point::Grassmann(g) => (g.ambient_dim(), g.subspace_dim()),
            Point::Euclidean(v) => (v.len(), 1),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Point::Spd(_) => "spd",
            Point::Grassmann(_) => "grassmann",
            Point::Euclidean(_) => "euclidean",
        }
    }
}

impl From<SpdMatrix> for Point {
    fn from(s: SpdMatrix) -> Self {
        Point::Spd(s)
    }
}

impl From<GrassmannPoint> for Point {
    fn from(g: GrassmannPoint) -> Self {
        Point::Grassmann(g)
    }
}

impl From<Vector> for Point {
    fn from(v: Vector) -> Self {
        Point::Euclidean(v)
    }
}

/// Per-point precomputation so that pairwise distances cost one
/// subtraction where an explicit Euclidean embedding exists.
enum Prepared<'a> {
    Embedded(Matrix),
    Stein(&'a SpdMatrix, f64),
    AffineInvariant(&'a SpdMatrix),
    Grassmann(&'a GrassmannPoint, GrassmannMetric),
}

fn wrong_kind(manifold: &Manifold, p: &Point) -> Error {
    Error::dims(format!("{manifold} point"), format!("{} point", p.kind()))
}

fn prepare<'a>(manifold: &Manifold, p: &'a Point) -> Result<Prepared<'a>> {
    match (manifold, p) {
        (Manifold::Spd(metric), Point::Spd(s)) => Ok(match metric {
            SpdMetric::AffineInvariant => Prepared::AffineInvariant(s),
            SpdMetric::RootStein => Prepared::Stein(s, s.logdet()),
            m => Prepared::Embedded(m.embed(s).ok_or(Error::ZeroExponent)?),
        }),
        (Manifold::Grassmann(metric), Point::Grassmann(g)) => Ok(Prepared::Grassmann(g, *metric)),
        (Manifold::Euclidean, Point::Euclidean(v)) => Ok(Prepared::Embedded(
            Matrix::from_column_slice(v.len(), 1, v.as_slice()),
        )),
        (Manifold::Euclidean, Point::Spd(s)) => Ok(Prepared::Embedded(s.as_matrix().clone())),
        (m, p) => Err(wrong_kind(m, p)),
    }
}

fn prepared_sq_dist(a: &Prepared, b: &Prepared) -> Result<f64> {
    match (a, b) {
        (Prepared::Embedded(x), Prepared::Embedded(y)) => {
            if x.shape() != y.shape() {
                return Err(Error::dims(
                    format!("{:?}", x.shape()),
                    format!("{:?}", y.shape()),
                ));
            }
            Ok((x - y).norm_squared())
        }
        (Prepared::Stein(x, lx), Prepared::Stein(y, ly)) => {
            if x.dim() != y.dim() {
                return Err(Error::dims(x.dim(), y.dim()));
            }
            Ok(spd::root_stein_from_logdets(x, y, *lx, *ly)?.powi(2))
        }
        (Prepared::AffineInvariant(x), Prepared::AffineInvariant(y)) => {
            Ok(spd::distance(SpdMetric::AffineInvariant, x, y)?.powi(2))
        }
        (Prepared::Grassmann(x, metric), Prepared::Grassmann(y, _)) => match metric {
            GrassmannMetric::Projection => grassmann::projection_dist_sq_fast(x, y),
            m => Ok(grassmann::distance(*m, x, y)?.powi(2)),
        },
        _ => unreachable!("points prepared under one manifold"),
    }
}

/// `d²(x, y)` under the manifold's metric.
pub fn squared_distance(manifold: &Manifold, x: &Point, y: &Point) -> Result<f64> {
    if x.shape() != y.shape() {
        return Err(Error::dims(
            format!("{:?}", x.shape()),
            format!("{:?}", y.shape()),
        ));
    }
    prepared_sq_dist(&prepare(manifold, x)?, &prepare(manifold, y)?)
}

pub fn gaussian_kernel_value(spec: &KernelSpec, x: &Point, y: &Point) -> Result<f64> {
    Ok((-spec.gamma * squared_distance(&spec.manifold, x, y)?).exp())
}

/// Matrix of squared distances `D²ᵢⱼ = d²(pᵢ, pⱼ)` with an exactly zero
/// diagonal. Rows are computed in parallel; every entry is an independent
/// computation, so the result does not depend on scheduling.
pub fn squared_distance_matrix(manifold: &Manifold, points: &[Point]) -> Result<Matrix> {
    let first = points.first().ok_or(Error::EmptySet)?;
    for p in points {
        if p.shape() != first.shape() {
            return Err(Error::dims(
                format!("{:?}", first.shape()),
                format!("{:?}", p.shape()),
            ));
        }
    }
    let prepared: Vec<Prepared> = points
        .iter()
        .map(|p| prepare(manifold, p))
        .collect::<Result<_>>()?;
    let m = points.len();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..m)
                .map(|j| prepared_sq_dist(&prepared[i], &prepared[j]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut d2 = Matrix::zeros(m, m);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            d2[(i, j)] = v;
            d2[(j, i)] = v;
        }
    }
    Ok(d2)
}

/// `m × t` squared distances between `train` and `test` points.
pub fn cross_squared_distances(
    manifold: &Manifold,
    train: &[Point],
    test: &[Point],
) -> Result<Matrix> {
    let first = train.first().ok_or(Error::EmptySet)?;
    for p in train.iter().chain(test) {
        if p.shape() != first.shape() {
            return Err(Error::dims(
                format!("{:?}", first.shape()),
                format!("{:?}", p.shape()),
            ));
        }
    }
    let a: Vec<Prepared> = train
        .iter()
        .map(|p| prepare(manifold, p))
        .collect::<Result<_>>()?;
    let b: Vec<Prepared> = test
        .iter()
        .map(|p| prepare(manifold, p))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = a
        .par_iter()
        .map(|x| {
            b.iter()
                .map(|y| prepared_sq_dist(x, y))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(Matrix::from_fn(train.len(), test.len(), |i, j| rows[i][j]))
}

/// Kernel values between training points (rows) and test points (columns).
pub fn cross_gram(spec: &KernelSpec, train: &[Point], test: &[Point]) -> Result<Matrix> {
    Ok(gaussian_from_sq_dist(
        &cross_squared_distances(&spec.manifold, train, test)?,
        spec.gamma,
    ))
}

/// `exp(−γ D²)` entrywise.
pub fn gaussian_from_sq_dist(d2: &Matrix, gamma: f64) -> Matrix {
    d2.map(|v| (-gamma * v).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    pub spec: KernelSpec,
    #[serde(with = "crate::io::matrix_rows")]
    pub entries: Matrix,
    pub min_eigen: Option<f64>,
}

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }
}

/// Gram matrix of `spec` over `points`; with `audit`, also the minimum
/// eigenvalue.
pub fn gram_matrix(spec: &KernelSpec, points: &[Point], audit: bool) -> Result<GramMatrix> {
    let d2 = squared_distance_matrix(&spec.manifold, points)?;
    let entries = gaussian_from_sq_dist(&d2, spec.gamma);
    let min_eigen = if audit {
        Some(linalg::sym_eig(&entries)?.min_value())
    } else {
        None
    };
    Ok(GramMatrix {
        spec: *spec,
        entries,
        min_eigen,
    })
}

/// Linear projection kernel `‖Y₁ᵀY₂‖²_F` (no bandwidth), a baseline for
/// discriminant analysis and SVMs on Grassmann data.
pub fn projection_linear_gram(points: &[GrassmannPoint]) -> Result<Matrix> {
    let first = points.first().ok_or(Error::EmptySet)?;
    let m = points.len();
    let mut k = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            if points[j].basis().shape() != first.basis().shape() {
                return Err(Error::dims(first.ambient_dim(), points[j].ambient_dim()));
            }
            let v = (points[i].basis().transpose() * points[j].basis()).norm_squared();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

pub(crate) fn check_sym(m: &Matrix) -> Result<()> {
    linalg::ensure_square(m)?;
    let scale = m.norm().max(1.0);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (m[(i, j)] - m[(j, i)]).abs();
            if gap > GRAM_SYM_TOL * scale {
                return Err(Error::NonSymmetric(gap / scale));
            }
        }
    }
    Ok(())
}

/// `(min eigenvalue ≥ −tol, min eigenvalue)`.
pub fn psd_check(m: &Matrix, tol: f64) -> Result<(bool, f64)> {
    check_sym(m)?;
    let min = linalg::sym_eig(m)?.min_value();
    Ok((min >= -tol, min))
}

/// Centering projector `I − (1/m)11ᵀ`.
pub fn centering_projector(m: usize) -> Matrix {
    Matrix::identity(m, m) - Matrix::from_element(m, m, 1.0 / m as f64)
}

/// Conditional negative semi-definiteness: `(max eig(PMP) ≤ tol, max eig)`.
pub fn cnd_check(m: &Matrix, tol: f64) -> Result<(bool, f64)> {
    check_sym(m)?;
    let p = centering_projector(m.nrows());
    let pmp = linalg::symmetrize(&(&p * m * &p));
    let max = linalg::sym_eig(&pmp)?.max_value();
    Ok((max <= tol, max))
}

/// Witness threshold for `m` points.
pub fn witness_tol(m: usize) -> f64 {
    1e-7 * m as f64
}

/// Family of random point sets explored by [`definiteness_search`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchDomain {
    pub manifold: Manifold,
    /// `d` for SPD and Euclidean points, `n` for Grassmann points.
    pub dim: usize,
    /// `r` for Grassmann points; ignored otherwise.
    pub subspace_dim: usize,
}

impl SearchDomain {
    pub fn spd(metric: SpdMetric, d: usize) -> Self {
        SearchDomain {
            manifold: Manifold::Spd(metric),
            dim: d,
            subspace_dim: 0,
        }
    }

    pub fn grassmann(metric: GrassmannMetric, n: usize, r: usize) -> Self {
        SearchDomain {
            manifold: Manifold::Grassmann(metric),
            dim: n,
            subspace_dim: r,
        }
    }

    pub fn sample_points(&self, rng: &mut ChaCha8Rng, m: usize) -> Vec<Point> {
        (0..m)
            .map(|_| match self.manifold {
                Manifold::Spd(_) => Point::Spd(sample::random_spd(rng, self.dim)),
                Manifold::Grassmann(_) => {
                    Point::Grassmann(sample::random_grassmann(rng, self.dim, self.subspace_dim))
                }
                Manifold::Euclidean => {
                    let g = sample::gaussian_matrix(rng, self.dim, 1);
                    Point::Euclidean(g.column(0).into_owned())
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.manifold {
            Manifold::Grassmann(_) => self.subspace_dim >= 1 && self.dim > self.subspace_dim,
            _ => self.dim >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::BadShape(format!(
                "invalid search domain dim={} subspace_dim={}",
                self.dim, self.subspace_dim
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PsdWithinTol,
    WitnessFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefinitenessReport {
    pub verdict: Verdict,
    pub domain: SearchDomain,
    /// Witness eigenvalue, or the smallest eigenvalue seen over all trials.
    pub min_eigen: f64,
    /// Bandwidth at which `min_eigen` was observed.
    pub gamma: f64,
    pub witness_tol: f64,
    pub trials_run: usize,
    pub seed: u64,
    pub witness_trial: Option<usize>,
    /// RNG seed that regenerates the witness point set on its own.
    pub witness_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_points: Option<Vec<Vec<Vec<f64>>>>,
}

impl DefinitenessReport {
    pub fn witness(&self) -> bool {
        self.verdict == Verdict::WitnessFound
    }
}

/// Per-trial RNG seed; each trial is reproducible in isolation.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(trial as u64)
}

/// `cᵀ M c` accumulated with Neumaier compensation.
fn compensated_quadratic_form(m: &Matrix, c: &Vector) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let term = c[i] * m[(i, j)] * c[j];
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
    }
    sum + comp
}

/// Recomputes the Gram matrix of a candidate witness from scratch and
/// confirms the negative direction with a compensated Rayleigh quotient.
fn verify_witness(
    manifold: &Manifold,
    points: &[Point],
    gamma: f64,
    tol: f64,
) -> Result<Option<f64>> {
    let d2 = squared_distance_matrix(manifold, points)?;
    let k = gaussian_from_sq_dist(&d2, gamma);
    let eig = linalg::sym_eig(&k)?;
    let min = eig.min_value();
    let v = eig.vectors.column(eig.values.len() - 1).into_owned();
    let rayleigh = compensated_quadratic_form(&k, &v) / v.norm_squared();
    Ok((min < -tol && rayleigh < -tol).then_some(min))
}

/// Randomized counterexample search for positive definiteness of the
/// Gaussian kernel over a grid of bandwidths.
///
/// Trials run in order; the first trial (lowest index) producing a Gram
/// matrix with minimum eigenvalue below `−1e-7·m` is verified and reported.
pub fn definiteness_search(
    domain: SearchDomain,
    gamma_grid: &[f64],
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<DefinitenessReport> {
    if gamma_grid.is_empty() {
        return Err(Error::BadGrid("empty grid".into()));
    }
    if let Some(g) = gamma_grid.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
        return Err(Error::BadGrid(format!("gamma {g} is not positive")));
    }
    if m < 3 {
        return Err(Error::InvalidParameter(format!(
            "need m >= 3 points, got {m}"
        )));
    }
    domain.validate()?;
    let tol = witness_tol(m);
    let mut global_min = f64::INFINITY;
    let mut global_gamma = gamma_grid[0];
    for trial in 0..trials {
        let tseed = trial_seed(seed, trial);
        let mut rng = ChaCha8Rng::seed_from_u64(tseed);
        let points = domain.sample_points(&mut rng, m);
        let d2 = squared_distance_matrix(&domain.manifold, &points)?;
        for &gamma in gamma_grid {
            let k = gaussian_from_sq_dist(&d2, gamma);
            let min = linalg::sym_eig(&k)?.min_value();
            if min < global_min {
                global_min = min;
                global_gamma = gamma;
            }
            if min < -tol {
                if let Some(verified) = verify_witness(&domain.manifold, &points, gamma, tol)? {
                    return Ok(DefinitenessReport {
                        verdict: Verdict::WitnessFound,
                        domain,
                        min_eigen: verified,
                        gamma,
                        witness_tol: tol,
                        trials_run: trial + 1,
                        seed,
                        witness_trial: Some(trial),
                        witness_seed: Some(tseed),
                        witness_points: Some(points.iter().map(point_rows).collect()),
                    });
                }
            }
        }
    }
    Ok(DefinitenessReport {
        verdict: Verdict::PsdWithinTol,
        domain,
        min_eigen: global_min,
        gamma: global_gamma,
        witness_tol: tol,
        trials_run: trials,
        seed,
        witness_trial: None,
        witness_seed: None,
        witness_points: None,
    })
}

pub(crate) fn point_rows(p: &Point) -> Vec<Vec<f64>> {
    match p {
        Point::Spd(s) => crate::io::rows_of(s.as_matrix()),
        Point::Grassmann(g) => crate::io::rows_of(g.basis()),
        Point::Euclidean(v) => vec![v.iter().cloned().collect()],
    }
}
