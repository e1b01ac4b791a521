//! Kernel k-means with k-means++ seeding in feature space.
//!
//! Each run alternates batch reassignment with centroid updates; once the
//! batch step is stable, single-point transfers that still lower the energy
//! are applied before resuming.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_gram;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const DEFAULT_RESTARTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    /// Sum of squared feature-space distances to assigned centroids.
    pub energy: f64,
    pub restarts_used: usize,
    /// Energy after each assignment step of the winning run.
    pub energy_trace: Vec<f64>,
}

struct Clusters<'a> {
    k_mat: &'a Matrix,
    k: usize,
    labels: Vec<usize>,
    sizes: Vec<usize>,
    /// `Σ_{i,j∈c} K_ij` per cluster.
    within: Vec<f64>,
    /// `Σ_{j∈c} K_xj` per point and cluster, row-major `m × k`.
    cross: Vec<f64>,
}

impl<'a> Clusters<'a> {
    fn new(k_mat: &'a Matrix, k: usize, labels: Vec<usize>) -> Self {
        let mut c = Clusters {
            k_mat,
            k,
            labels,
            sizes: vec![0; k],
            within: vec![0.0; k],
            cross: vec![0.0; k_mat.nrows() * k],
        };
        c.refresh();
        c
    }

    fn refresh(&mut self) {
        let m = self.k_mat.nrows();
        let k = self.k;
        self.sizes.iter_mut().for_each(|s| *s = 0);
        self.cross.iter_mut().for_each(|s| *s = 0.0);
        for &l in &self.labels {
            self.sizes[l] += 1;
        }
        for x in 0..m {
            for j in 0..m {
                self.cross[x * k + self.labels[j]] += self.k_mat[(x, j)];
            }
        }
        self.within.iter_mut().for_each(|s| *s = 0.0);
        for i in 0..m {
            self.within[self.labels[i]] += self.cross[i * k + self.labels[i]];
        }
    }

    /// `‖φ(x) − μ_c‖²`, infinite for an empty cluster.
    fn dist(&self, x: usize, c: usize) -> f64 {
        let n = self.sizes[c];
        if n == 0 {
            return f64::INFINITY;
        }
        let n = n as f64;
        let d =
            self.k_mat[(x, x)] - 2.0 * self.cross[x * self.k + c] / n + self.within[c] / (n * n);
        d.max(0.0)
    }

    fn energy(&self) -> f64 {
        (0..self.labels.len())
            .map(|x| self.dist(x, self.labels[x]))
            .sum()
    }

    /// Moves the point farthest from its centroid (taken from clusters with
    /// more than one member) into each empty cluster.
    fn repair_empty(&mut self) {
        while let Some(empty) = self.sizes.iter().position(|&s| s == 0) {
            let mut best: Option<(usize, f64)> = None;
            for x in 0..self.labels.len() {
                if self.sizes[self.labels[x]] < 2 {
                    continue;
                }
                let d = self.dist(x, self.labels[x]);
                if best.is_none_or(|(_, bd)| d > bd) {
                    best = Some((x, d));
                }
            }
            let (x, _) = best.expect("k ≤ m leaves a donor cluster");
            self.labels[x] = empty;
            self.refresh();
        }
    }
}

impl Clusters<'_> {
    /// One sweep of single-point transfers: moves a point whenever doing so
    /// lowers the total energy, accounting for the centroid shifts. Returns
    /// whether any point moved.
    fn transfer_pass(&mut self) -> bool {
        let mut moved = false;
        for x in 0..self.labels.len() {
            let a = self.labels[x];
            let na = self.sizes[a] as f64;
            if na < 2.0 {
                continue;
            }
            let removal = na / (na - 1.0) * self.dist(x, a);
            let mut best: Option<(usize, f64)> = None;
            for c in (0..self.k).filter(|&c| c != a) {
                let nc = self.sizes[c] as f64;
                let add = nc / (nc + 1.0) * self.dist(x, c);
                if add < removal - 1e-12 * removal.max(1.0) && best.is_none_or(|(_, b)| add < b) {
                    best = Some((c, add));
                }
            }
            if let Some((c, _)) = best {
                self.labels[x] = c;
                self.refresh();
                moved = true;
            }
        }
        moved
    }
}

fn plus_plus_seeds(k_mat: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let m = k_mat.nrows();
    let mut centers = vec![rng.random_range(0..m)];
    let dist = |x: usize, c: usize| (k_mat[(x, x)] - 2.0 * k_mat[(x, c)] + k_mat[(c, c)]).max(0.0);
    let mut d2: Vec<f64> = (0..m).map(|x| dist(x, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = m - 1;
            for (x, &w) in d2.iter().enumerate() {
                if w > 0.0 && u < w {
                    pick = x;
                    break;
                }
                u -= w;
            }
            if d2[pick] == 0.0 {
                pick = (0..m).rev().find(|&x| d2[x] > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            (0..m).find(|x| !centers.contains(x)).expect("k ≤ m")
        };
        centers.push(next);
        for (x, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist(x, next));
        }
    }
    centers
}

fn single_run(k_mat: &Matrix, k: usize, max_iter: usize, seed: u64) -> (Vec<usize>, f64, Vec<f64>) {
    let m = k_mat.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = plus_plus_seeds(k_mat, k, &mut rng);
    let labels = (0..m)
        .map(|x| {
            let mut best = 0;
            let mut bd = f64::INFINITY;
            for (c, &p) in centers.iter().enumerate() {
                let d = k_mat[(x, x)] - 2.0 * k_mat[(x, p)] + k_mat[(p, p)];
                if d < bd {
                    bd = d;
                    best = c;
                }
            }
            best
        })
        .collect();
    let mut state = Clusters::new(k_mat, k, labels);
    state.repair_empty();
    let mut trace = vec![state.energy()];
    for _ in 0..max_iter {
        let next: Vec<usize> = (0..m)
            .map(|x| {
                let mut best = state.labels[x];
                let mut bd = state.dist(x, best);
                for c in 0..k {
                    let d = state.dist(x, c);
                    if d < bd || (d == bd && c < best) {
                        bd = d;
                        best = c;
                    }
                }
                best
            })
            .collect();
        if next == state.labels {
            if !state.transfer_pass() {
                break;
            }
        } else {
            state.labels = next;
            state.refresh();
            state.repair_empty();
        }
        trace.push(state.energy());
    }
    let energy = state.energy();
    (state.labels, energy, trace)
}

/// Kernel k-means: `restarts` seeded runs (seed `seed + r` for run `r`),
/// keeping the lowest final energy. Runs execute in parallel; the result is
/// the same as running them in order.
pub fn kernel_kmeans(
    k_mat: &Matrix,
    k: usize,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<ClusterResult> {
    let m = k_mat.nrows();
    if k < 1 || k > m {
        return Err(Error::BadK { k, m });
    }
    check_gram(k_mat)?;
    let restarts = restarts.max(1);
    let runs: Vec<_> = (0..restarts)
        .into_par_iter()
        .map(|r| single_run(k_mat, k, max_iter, seed.wrapping_add(r as u64)))
        .collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.1 < runs[best].1 {
            best = r;
        }
    }
    let (labels, energy, energy_trace) = runs.into_iter().nth(best).expect("at least one run");
    Ok(ClusterResult {
        labels,
        energy,
        restarts_used: restarts,
        energy_trace,
    })
}

/// Fraction of points labelled correctly under the best one-to-one matching
/// between predicted clusters and true classes.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(pred.len(), truth.len());
    if pred.is_empty() {
        return 1.0;
    }
    let kp = pred.iter().max().map_or(0, |v| v + 1);
    let kt = truth.iter().max().map_or(0, |v| v + 1);
    let mut counts = vec![vec![0usize; kt]; kp];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[p][t] += 1;
    }
    fn search(row: usize, counts: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
        if row == counts.len() {
            return 0;
        }
        let mut best = search(row + 1, counts, used);
        for t in 0..used.len() {
            if !used[t] {
                used[t] = true;
                best = best.max(counts[row][t] + search(row + 1, counts, used));
                used[t] = false;
            }
        }
        best
    }
    search(0, &counts, &mut vec![false; kt]) as f64 / pred.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{gaussian_from_sq_dist, squared_distance_matrix};
    use crate::kernel::{Manifold, Point};
    use crate::sample::gaussian_matrix;
    use crate::Vector;

    fn euclid_gram(points: &Matrix, gamma: f64) -> Matrix {
        let pts: Vec<Point> = points
            .row_iter()
            .map(|r| Point::Euclidean(Vector::from_iterator(r.len(), r.iter().copied())))
            .collect();
        gaussian_from_sq_dist(
            &squared_distance_matrix(&Manifold::Euclidean, &pts).unwrap(),
            gamma,
        )
    }

    #[test]
    fn k_equal_m_has_zero_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = euclid_gram(&gaussian_matrix(&mut rng, 6, 2), 0.5);
        let res = kernel_kmeans(&k, 6, 3, 50, 0).unwrap();
        assert!(res.energy.abs() < 1e-12);
        let mut l = res.labels.clone();
        l.sort();
        assert_eq!(l, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn duplicate_points_with_k_equal_m() {
        let k = Matrix::from_element(4, 4, 1.0);
        let res = kernel_kmeans(&k, 4, 2, 10, 3).unwrap();
        let mut l = res.labels.clone();
        l.sort();
        assert_eq!(l, vec![0, 1, 2, 3]);
        assert!(res.energy.abs() < 1e-12);
    }

    #[test]
    fn bad_k_rejected() {
        let k = Matrix::identity(3, 3);
        assert_eq!(
            kernel_kmeans(&k, 0, 1, 10, 0),
            Err(Error::BadK { k: 0, m: 3 })
        );
        assert_eq!(
            kernel_kmeans(&k, 4, 1, 10, 0),
            Err(Error::BadK { k: 4, m: 3 })
        );
    }

    #[test]
    fn energy_trace_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let k = euclid_gram(&gaussian_matrix(&mut rng, 60, 3), 0.3);
        let res = kernel_kmeans(&k, 5, 4, 100, 11).unwrap();
        for w in res.energy_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
        assert!((res.energy - res.energy_trace.last().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn accuracy_uses_best_matching() {
        assert_eq!(clustering_accuracy(&[1, 1, 0, 0], &[0, 0, 1, 1]), 1.0);
        assert_eq!(clustering_accuracy(&[0, 0, 0, 1], &[0, 0, 1, 1]), 0.75);
    }
}
