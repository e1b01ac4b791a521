//! The Grassmann manifold `G(r, n)` of r-dimensional subspaces of ℝⁿ,
//! represented by `n × r` orthonormal bases.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Singular values of `Y₁ᵀY₂` above 1 by more than this are rejected.
const COSINE_CLAMP_WIDTH: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannPoint {
    basis: Matrix,
}

impl GrassmannPoint {
    /// Orthonormalizes `raw` (thin QR, non-negative diagonal of R).
    pub fn new(raw: &Matrix) -> Result<Self> {
        let (n, r) = raw.shape();
        if r == 0 || n <= r {
            return Err(Error::BadShape(format!(
                "Grassmann basis must be n x r with n > r >= 1, got {n}x{r}"
            )));
        }
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::BadShape("non-finite basis entry".into()));
        }
        let qr = raw.clone().qr();
        let mut q = qr.q();
        let rmat = qr.r();
        let scale = raw.norm().max(f64::MIN_POSITIVE);
        for j in 0..r {
            let rjj = rmat[(j, j)];
            if rjj.abs() <= 1e-12 * scale * n as f64 {
                return Err(Error::RankDeficient(r));
            }
            if rjj < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        Ok(GrassmannPoint { basis: q })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn subspace_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// `Y Yᵀ`, the orthogonal projector onto the subspace.
    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.transpose()
    }

    /// Same subspace with basis `Y Q` for an `r × r` orthogonal `Q`.
    pub fn rotate(&self, q: &Matrix) -> Result<Self> {
        if q.shape() != (self.subspace_dim(), self.subspace_dim()) {
            return Err(Error::dims(self.subspace_dim(), q.nrows()));
        }
        Ok(GrassmannPoint {
            basis: &self.basis * q,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrassmannMetric {
    Projection,
    ArcLength,
    FubiniStudy,
    Chordal2Norm,
    ChordalFNorm,
}

impl GrassmannMetric {
    pub const ALL: [GrassmannMetric; 5] = [
        GrassmannMetric::Projection,
        GrassmannMetric::ArcLength,
        GrassmannMetric::FubiniStudy,
        GrassmannMetric::Chordal2Norm,
        GrassmannMetric::ChordalFNorm,
    ];

    pub fn has_pd_gaussian(&self) -> bool {
        matches!(self, GrassmannMetric::Projection)
    }
}

impl fmt::Display for GrassmannMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrassmannMetric::Projection => "projection",
            GrassmannMetric::ArcLength => "arc-length",
            GrassmannMetric::FubiniStudy => "fubini-study",
            GrassmannMetric::Chordal2Norm => "chordal-2-norm",
            GrassmannMetric::ChordalFNorm => "chordal-f-norm",
        })
    }
}

impl FromStr for GrassmannMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        GrassmannMetric::ALL
            .into_iter()
            .find(|m| m.to_string() == key)
            .ok_or_else(|| Error::Parse(format!("unknown Grassmann metric '{s}'")))
    }
}

fn check_pair(a: &GrassmannPoint, b: &GrassmannPoint) -> Result<()> {
    if a.basis.shape() != b.basis.shape() {
        return Err(Error::dims(
            format!("{}x{}", a.ambient_dim(), a.subspace_dim()),
            format!("{}x{}", b.ambient_dim(), b.subspace_dim()),
        ));
    }
    Ok(())
}

/// Principal angles in `[0, π/2]`, ascending.
///
/// Cosines come from the singular values of `Y₁ᵀY₂`; angles whose cosine
/// exceeds `1/√2` are instead taken from the sines, the singular values of
/// `(I − Y₁Y₁ᵀ)Y₂`, which keeps small angles accurate.
pub fn principal_angles(a: &GrassmannPoint, b: &GrassmannPoint) -> Result<Vec<f64>> {
    check_pair(a, b)?;
    let cross = a.basis.transpose() * &b.basis;
    let cosines = linalg::thin_svd(&cross)?.s;
    let residual = &b.basis - &a.basis * &cross;
    let mut sines: Vec<f64> = linalg::thin_svd(&residual)?.s.iter().cloned().collect();
    sines.reverse();
    let r = cosines.len();
    let mut angles = Vec::with_capacity(r);
    for i in 0..r {
        let c = cosines[i];
        if c > 1.0 + COSINE_CLAMP_WIDTH {
            return Err(Error::Numerical(format!(
                "principal cosine {c} exceeds 1; bases are not orthonormal"
            )));
        }
        let c = c.clamp(0.0, 1.0);
        let theta = if c * c >= 0.5 {
            sines[i].clamp(0.0, 1.0).asin()
        } else {
            c.acos()
        };
        angles.push(theta);
    }
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

/// Distance under `metric`, computed from principal angles.
pub fn distance(metric: GrassmannMetric, a: &GrassmannPoint, b: &GrassmannPoint) -> Result<f64> {
    check_pair(a, b)?;
    if metric == GrassmannMetric::Projection {
        // ‖(I − Y₁Y₁ᵀ)Y₂‖_F = (Σ sin²θᵢ)^{1/2}, exact at coincident subspaces
        let residual = &b.basis - &a.basis * (a.basis.transpose() * &b.basis);
        return Ok(residual.norm());
    }
    distance_from_angles(metric, &principal_angles(a, b)?)
}

/// Table of angle-based distance formulas.
pub fn distance_from_angles(metric: GrassmannMetric, angles: &[f64]) -> Result<f64> {
    Ok(match metric {
        GrassmannMetric::Projection => angles.iter().map(|t| t.sin().powi(2)).sum::<f64>().sqrt(),
        GrassmannMetric::ArcLength => angles.iter().map(|t| t * t).sum::<f64>().sqrt(),
        GrassmannMetric::FubiniStudy => {
            let prod: f64 = angles.iter().map(|t| t.cos()).product();
            let small: f64 = angles.iter().map(|t| t * t).sum();
            if small < 1e-8 {
                // arccos(Π cos θ) ≈ ‖θ‖ for small angles; avoids acos(1 − ε)
                small.sqrt()
            } else {
                prod.clamp(-1.0, 1.0).acos()
            }
        }
        GrassmannMetric::Chordal2Norm => {
            2.0 * angles.iter().map(|t| (0.5 * t).sin()).fold(0.0, f64::max)
        }
        GrassmannMetric::ChordalFNorm => {
            2.0 * angles
                .iter()
                .map(|t| (0.5 * t).sin().powi(2))
                .sum::<f64>()
                .sqrt()
        }
    })
}

/// Squared projection distance `r − ‖Y₁ᵀY₂‖²_F`, clamped at zero.
pub fn projection_dist_sq_fast(a: &GrassmannPoint, b: &GrassmannPoint) -> Result<f64> {
    check_pair(a, b)?;
    let cross = a.basis.transpose() * &b.basis;
    Ok((a.subspace_dim() as f64 - cross.norm_squared()).max(0.0))
}

/// Span of the `r` leading left singular vectors of the column set `F`.
pub fn subspace_from_vectors(f: &Matrix, r: usize) -> Result<GrassmannPoint> {
    let (n, p) = f.shape();
    if r == 0 || r >= n.min(p) {
        return Err(Error::BadShape(format!(
            "need 1 <= r < min(n, p) = {}, got r = {r}",
            n.min(p)
        )));
    }
    let (left, s) = if n >= p {
        let svd = linalg::thin_svd(f)?;
        (svd.u, svd.s)
    } else {
        let svd = linalg::thin_svd(&f.transpose())?;
        (svd.v, svd.s)
    };
    if !(s[r - 1] > 1e-12 * s[0].max(f64::MIN_POSITIVE) * n.max(p) as f64) {
        return Err(Error::RankDeficient(r));
    }
    GrassmannPoint::new(&left.columns(0, r).into_owned())
}
