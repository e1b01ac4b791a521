//! Seeded synthetic datasets with known labels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::GrassmannPoint;
use crate::linalg::{Matrix, Vector};
use crate::sample::{gaussian_matrix, gaussian_symmetric, random_grassmann};
use crate::spd::SpdMatrix;

/// Gaussian blobs in the log domain of SPD matrices.
///
/// Cluster `c` has log-domain center `shift_c·I + spread·G_c` with
/// `shift_c = separation·(c − (k−1)/2)` and `G_c` standard normal symmetric;
/// each point adds `noise·E` with `E` standard normal symmetric. Because the
/// clusters sit at different overall scales, distances between the matrices
/// themselves are dominated by the largest cluster while the log domain keeps
/// every cluster equally tight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpdBlobs {
    pub clusters: usize,
    pub per_cluster: usize,
    pub dim: usize,
    pub separation: f64,
    pub spread: f64,
    pub noise: f64,
}

impl Default for SpdBlobs {
    fn default() -> Self {
        SpdBlobs {
            clusters: 3,
            per_cluster: 40,
            dim: 3,
            separation: 1.0,
            spread: 0.5,
            noise: 0.35,
        }
    }
}

impl SpdBlobs {
    pub fn generate(&self, seed: u64) -> Result<(Vec<SpdMatrix>, Vec<usize>)> {
        if self.clusters < 1 || self.per_cluster < 1 || self.dim < 1 {
            return Err(Error::InvalidParameter(
                "clusters, per_cluster and dim must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim;
        let mid = (self.clusters as f64 - 1.0) / 2.0;
        let centers: Vec<Matrix> = (0..self.clusters)
            .map(|c| {
                Matrix::identity(d, d) * (self.separation * (c as f64 - mid))
                    + gaussian_symmetric(&mut rng, d) * self.spread
            })
            .collect();
        let mut points = Vec::with_capacity(self.clusters * self.per_cluster);
        let mut labels = Vec::with_capacity(points.capacity());
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..self.per_cluster {
                let log = center + gaussian_symmetric(&mut rng, d) * self.noise;
                points.push(SpdMatrix::exp_of(&log)?);
                labels.push(c);
            }
        }
        Ok((points, labels))
    }
}

/// Subspace clusters: each cluster perturbs a random `n × r` basis by
/// Gaussian noise and re-orthonormalizes, mimicking image sets of one object
/// under small pose changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrassmannClusters {
    pub clusters: usize,
    pub per_cluster: usize,
    pub ambient_dim: usize,
    pub subspace_dim: usize,
    pub noise: f64,
}

impl Default for GrassmannClusters {
    fn default() -> Self {
        GrassmannClusters {
            clusters: 3,
            per_cluster: 20,
            ambient_dim: 10,
            subspace_dim: 3,
            noise: 0.2,
        }
    }
}

impl GrassmannClusters {
    pub fn generate(&self, seed: u64) -> Result<(Vec<GrassmannPoint>, Vec<usize>)> {
        let (n, r) = (self.ambient_dim, self.subspace_dim);
        if self.clusters < 1 || self.per_cluster < 1 || r < 1 || n <= r {
            return Err(Error::InvalidParameter(format!(
                "need clusters, per_cluster ≥ 1 and ambient_dim > subspace_dim ≥ 1 (got {n}, {r})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers: Vec<GrassmannPoint> = (0..self.clusters)
            .map(|_| random_grassmann(&mut rng, n, r))
            .collect();
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            let mut made = 0;
            while made < self.per_cluster {
                let raw = center.basis() + gaussian_matrix(&mut rng, n, r) * self.noise;
                if let Ok(p) = GrassmannPoint::new(&raw) {
                    points.push(p);
                    labels.push(c);
                    made += 1;
                }
            }
        }
        Ok((points, labels))
    }
}

/// Two concentric noisy rings in the plane, radii 1 and 2; label 0 for the
/// inner ring. Points alternate between rings.
pub fn rings(points: usize, noise: f64, seed: u64) -> (Vec<Vector>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..points)
        .map(|i| {
            let label = i % 2;
            let radius = 1.0 + label as f64;
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            let p = Vector::from_vec(vec![
                radius * theta.cos() + noise * nx,
                radius * theta.sin() + noise * ny,
            ]);
            (p, label)
        })
        .unzip()
}

/// Two Gram matrices for multiple kernel learning: an informative Gaussian
/// kernel over 1-D points clustered at `±2` by label, and a Gaussian kernel
/// over label-independent 2-D noise. Labels alternate `+1, −1`.
pub fn informative_and_noise_kernels(m: usize, seed: u64) -> (Vec<Matrix>, Vec<i64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<i64> = (0..m).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
    let jitter = gaussian_matrix(&mut rng, m, 1);
    let noise = gaussian_matrix(&mut rng, m, 2);
    let informative = Matrix::from_fn(m, m, |i, j| {
        let xi = 2.0 * y[i] as f64 + 0.3 * jitter[(i, 0)];
        let xj = 2.0 * y[j] as f64 + 0.3 * jitter[(j, 0)];
        (-0.5 * (xi - xj).powi(2)).exp()
    });
    let noisy = Matrix::from_fn(m, m, |i, j| {
        (-(noise.row(i) - noise.row(j)).norm_squared()).exp()
    });
    (vec![informative, noisy], y)
}

/// `1 / median` of the off-diagonal squared distances, a standard bandwidth
/// heuristic; falls back to 1 when every distance is zero.
pub fn median_gamma(sq_dist: &Matrix) -> f64 {
    let m = sq_dist.nrows();
    let mut v: Vec<f64> = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            v.push(sq_dist[(i, j)]);
        }
    }
    if v.is_empty() {
        return 1.0;
    }
    v.sort_by(f64::total_cmp);
    let med = if v.len() % 2 == 1 {
        v[v.len() / 2]
    } else {
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    if med > 0.0 {
        1.0 / med
    } else {
        1.0
    }
}
