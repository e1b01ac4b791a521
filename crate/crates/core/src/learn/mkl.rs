//! Multiple kernel learning: an SVM on `Σⱼ λⱼ Kⱼ` with `λ` on the unit
//! simplex, optimized by reduced-gradient descent.

use serde::{Deserialize, Serialize};

use super::check_gram;
use super::svm::{svm_train, SvmModel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MklModel {
    pub weights: Vec<f64>,
    /// SVM trained on the combined Gram matrix with the final weights.
    pub svm: SvmModel,
    /// SVM dual objective after each accepted weight update.
    pub objective_trace: Vec<f64>,
}

fn combine(ks: &[Matrix], w: &[f64]) -> Matrix {
    let mut out = Matrix::zeros(ks[0].nrows(), ks[0].ncols());
    for (k, &l) in ks.iter().zip(w) {
        if l != 0.0 {
            out += k * l;
        }
    }
    out
}

fn project_simplex(w: &mut [f64]) {
    for v in w.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= s;
    }
}

/// Gradient of the optimal dual objective with respect to each weight.
fn gradient(ks: &[Matrix], svm: &SvmModel) -> Vec<f64> {
    let sv = &svm.support_indices;
    ks.iter()
        .map(|k| {
            let mut q = 0.0;
            for &i in sv {
                for &j in sv {
                    q += svm.dual_coefs[i] * svm.dual_coefs[j] * k[(i, j)];
                }
            }
            -0.5 * q
        })
        .collect()
}

/// Learns kernel weights and the SVM jointly. Stops when an outer iteration
/// improves the objective by less than `tol` (relative) or after
/// `max_outer_iter` iterations.
pub fn mkl_train(
    ks: &[Matrix],
    y: &[i64],
    c: f64,
    max_outer_iter: usize,
    tol: f64,
) -> Result<MklModel> {
    let first = ks.first().ok_or(Error::EmptySet)?;
    for k in ks {
        if k.shape() != first.shape() {
            return Err(Error::dims(
                format!("{:?}", first.shape()),
                format!("{:?}", k.shape()),
            ));
        }
        check_gram(k)?;
    }
    let n = ks.len();
    let mut weights = vec![1.0 / n as f64; n];
    let mut svm = svm_train(&combine(ks, &weights), y, c)?;
    let mut trace = vec![svm.objective];

    for _ in 0..max_outer_iter {
        let g = gradient(ks, &svm);
        // Reduced gradient relative to the largest weight.
        let mu = (0..n)
            .max_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a)))
            .expect("n ≥ 1");
        let mut dir = vec![0.0; n];
        for j in 0..n {
            if j != mu && !(weights[j] == 0.0 && g[j] > g[mu]) {
                dir[j] = g[mu] - g[j];
            }
        }
        dir[mu] = -dir.iter().sum::<f64>();
        if dir.iter().all(|d| d.abs() < 1e-15) {
            break;
        }
        let mut step = f64::INFINITY;
        for j in 0..n {
            if dir[j] < 0.0 {
                step = step.min(-weights[j] / dir[j]);
            }
        }
        if !step.is_finite() {
            break;
        }
        let current = svm.objective;
        let mut accepted = None;
        for _ in 0..30 {
            let mut cand: Vec<f64> = weights
                .iter()
                .zip(&dir)
                .map(|(w, d)| w + step * d)
                .collect();
            project_simplex(&mut cand);
            let trial = svm_train(&combine(ks, &cand), y, c)?;
            if trial.objective < current {
                accepted = Some((cand, trial));
                break;
            }
            step *= 0.5;
        }
        let Some((w, s)) = accepted else { break };
        weights = w;
        svm = s;
        trace.push(svm.objective);
        if current - svm.objective < tol * current.abs().max(1.0) {
            break;
        }
    }
    Ok(MklModel {
        weights,
        svm,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_kernel_equals_plain_svm() {
        let k = Matrix::from_fn(6, 6, |i, j| {
            (-((i as f64) - (j as f64)).powi(2) / 4.0).exp()
        });
        let y = [1, 1, 1, -1, -1, -1];
        let model = mkl_train(std::slice::from_ref(&k), &y, 1.0, 20, 1e-8).unwrap();
        let plain = svm_train(&k, &y, 1.0).unwrap();
        assert_eq!(model.weights, vec![1.0]);
        assert!((model.svm.objective - plain.objective).abs() < 1e-6);
    }

    #[test]
    fn identical_kernels_match_single_objective() {
        let k = Matrix::from_fn(6, 6, |i, j| {
            (-((i as f64) - (j as f64)).powi(2) / 3.0).exp()
        });
        let y = [1, -1, 1, -1, 1, -1];
        let model = mkl_train(&[k.clone(), k.clone()], &y, 2.0, 20, 1e-8).unwrap();
        let plain = svm_train(&k, &y, 2.0).unwrap();
        assert!((model.svm.objective - plain.objective).abs() < 1e-6);
        assert!((model.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_sizes_rejected() {
        let r = mkl_train(
            &[Matrix::identity(2, 2), Matrix::identity(3, 3)],
            &[1, -1],
            1.0,
            5,
            1e-6,
        );
        assert!(matches!(r, Err(Error::DimMismatch { .. })));
    }
}
