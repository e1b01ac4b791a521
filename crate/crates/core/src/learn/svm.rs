//! Soft-margin SVM trained by sequential minimal optimization, plus
//! one-vs-all and one-vs-one multiclass wrappers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_gram, check_kernel_columns, encode_labels};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::linalg::Matrix;

/// Default bound on the maximal KKT violation at convergence.
pub const KKT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmOptions {
    pub kkt_tol: f64,
    /// Duality gap allowed per training point.
    pub gap_tol_per_point: f64,
    pub max_iter: usize,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions {
            kkt_tol: KKT_TOL,
            gap_tol_per_point: 1e-6,
            max_iter: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// `αᵢyᵢ` per training point, zero away from the support vectors.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub support_indices: Vec<usize>,
    pub c: f64,
    /// Dual objective `Σα − ½ΣΣ αᵢαⱼyᵢyⱼKᵢⱼ` at the solution.
    pub objective: f64,
    pub kkt_violation: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<KernelSpec>,
}

impl SvmModel {
    pub fn alphas(&self) -> Vec<f64> {
        self.dual_coefs.iter().map(|v| v.abs()).collect()
    }
}

fn check_binary_labels(y: &[i64]) -> Result<Vec<f64>> {
    let mut seen = (false, false);
    let out = y
        .iter()
        .map(|&l| match l {
            1 => {
                seen.0 = true;
                Ok(1.0)
            }
            -1 => {
                seen.1 = true;
                Ok(-1.0)
            }
            other => Err(Error::InvalidParameter(format!(
                "binary labels must be +1 or -1, got {other}"
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    if !(seen.0 && seen.1) {
        return Err(Error::OneClass);
    }
    Ok(out)
}

/// Trains a binary SVM with default options.
pub fn svm_train(k: &Matrix, y: &[i64], c: f64) -> Result<SvmModel> {
    svm_train_with(k, y, c, &SvmOptions::default())
}

pub fn svm_train_with(k: &Matrix, y: &[i64], c: f64, opts: &SvmOptions) -> Result<SvmModel> {
    let m = k.nrows();
    if y.len() != m {
        return Err(Error::dims(format!("{m} labels"), y.len()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "C must be positive, got {c}"
        )));
    }
    let yf = check_binary_labels(y)?;
    check_gram(k)?;
    let max_iter = if opts.max_iter == 0 {
        100_000 + 2_000 * m
    } else {
        opts.max_iter
    };
    let gap_tol = opts.gap_tol_per_point * m as f64;

    let mut alpha = vec![0.0f64; m];
    // Gradient of ½αᵀQα − 1ᵀα.
    let mut grad = vec![-1.0f64; m];
    let mut iterations = 0;
    let (violation, bias, gap) = loop {
        let mut up = (f64::NEG_INFINITY, usize::MAX);
        let mut low = (f64::INFINITY, usize::MAX);
        for t in 0..m {
            let v = -yf[t] * grad[t];
            let in_up = if yf[t] > 0.0 {
                alpha[t] < c
            } else {
                alpha[t] > 0.0
            };
            let in_low = if yf[t] > 0.0 {
                alpha[t] > 0.0
            } else {
                alpha[t] < c
            };
            if in_up && v > up.0 {
                up = (v, t);
            }
            if in_low && v < low.0 {
                low = (v, t);
            }
        }
        let violation = if up.1 == usize::MAX || low.1 == usize::MAX {
            0.0
        } else {
            (up.0 - low.0).max(0.0)
        };
        if violation <= opts.kkt_tol {
            let bias = bias_from_kkt(&alpha, &grad, &yf, c);
            let gap = duality_gap(&alpha, &grad, &yf, c, bias);
            if gap <= gap_tol || violation <= 1e-12 {
                break (violation, bias, gap);
            }
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence("SMO"));
        }
        iterations += 1;

        let (i, j) = (up.1, low.1);
        let eta = (k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)]).max(1e-12);
        let mut t = (up.0 - low.0) / eta;
        t = t.min(if yf[i] > 0.0 { c - alpha[i] } else { alpha[i] });
        t = t.min(if yf[j] > 0.0 { alpha[j] } else { c - alpha[j] });
        if t <= 0.0 {
            // The pair is pinned; no progress is possible.
            let bias = bias_from_kkt(&alpha, &grad, &yf, c);
            let gap = duality_gap(&alpha, &grad, &yf, c, bias);
            break (violation, bias, gap);
        }
        let di = yf[i] * t;
        let dj = -yf[j] * t;
        alpha[i] = snap(alpha[i] + di, c);
        alpha[j] = snap(alpha[j] + dj, c);
        for s in 0..m {
            grad[s] += yf[s] * (yf[i] * k[(s, i)] * di + yf[j] * k[(s, j)] * dj);
        }
    };

    let dual_coefs: Vec<f64> = alpha.iter().zip(&yf).map(|(a, y)| a * y).collect();
    let support_indices = (0..m).filter(|&i| alpha[i] > 0.0).collect();
    let quad: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * (g + 1.0)).sum();
    let objective = alpha.iter().sum::<f64>() - 0.5 * quad;
    Ok(SvmModel {
        dual_coefs,
        bias,
        support_indices,
        c,
        objective,
        kkt_violation: violation,
        duality_gap: gap,
        iterations,
        spec: None,
    })
}

fn snap(a: f64, c: f64) -> f64 {
    let tiny = 1e-14 * c.max(1.0);
    if a <= tiny {
        0.0
    } else if a >= c - tiny {
        c
    } else {
        a
    }
}

/// Mean of `yᵢ − fᵢ` over unbounded support vectors, or the midpoint of the
/// feasible interval when every multiplier sits at a bound.
fn bias_from_kkt(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    // yᵢ − fᵢ = −yᵢ·gradᵢ since fᵢ = yᵢ(gradᵢ + 1).
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for t in 0..alpha.len() {
        let b = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += b;
            free_n += 1;
        } else if (alpha[t] == 0.0) == (y[t] > 0.0) {
            lo = lo.max(b);
        } else {
            hi = hi.min(b);
        }
    }
    if free_n > 0 {
        free_sum / free_n as f64
    } else if lo.is_finite() && hi.is_finite() {
        0.5 * (lo + hi)
    } else if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    }
}

/// Primal minus dual objective for the given bias.
fn duality_gap(alpha: &[f64], grad: &[f64], y: &[f64], c: f64, bias: f64) -> f64 {
    let mut quad = 0.0;
    let mut sum_alpha = 0.0;
    let mut hinge = 0.0;
    for t in 0..alpha.len() {
        let q = grad[t] + 1.0;
        quad += alpha[t] * q;
        sum_alpha += alpha[t];
        hinge += (1.0 - q - y[t] * bias).max(0.0);
    }
    (quad - sum_alpha + c * hinge).max(0.0)
}

/// Decision values `Σᵢ coefᵢ k(xᵢ, x) + b` for the `m × t` kernel block
/// between training and test points.
pub fn svm_predict(model: &SvmModel, kernel_columns: &Matrix) -> Result<Vec<f64>> {
    check_kernel_columns(model.dual_coefs.len(), kernel_columns)?;
    Ok((0..kernel_columns.ncols())
        .map(|j| {
            model
                .support_indices
                .iter()
                .map(|&i| model.dual_coefs[i] * kernel_columns[(i, j)])
                .sum::<f64>()
                + model.bias
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MulticlassMode {
    OneVsAll,
    OneVsOne,
}

/// One binary machine of a multiclass model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    /// Class treated as `+1`.
    pub positive: i64,
    /// Class treated as `−1`; `None` means all other classes.
    pub negative: Option<i64>,
    /// Training indices used by this machine.
    pub indices: Vec<usize>,
    pub model: SvmModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassSvm {
    pub mode: MulticlassMode,
    pub classes: Vec<i64>,
    pub machines: Vec<BinaryMachine>,
}

fn sub_gram(k: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(idx.len(), idx.len(), |a, b| k[(idx[a], idx[b])])
}

/// Multiclass SVM. With two classes a single binary machine is trained in
/// either mode, the larger class id being `−1`.
pub fn multiclass_svm(
    k: &Matrix,
    y: &[i64],
    c: f64,
    mode: MulticlassMode,
) -> Result<MulticlassSvm> {
    let m = k.nrows();
    if y.len() != m {
        return Err(Error::dims(format!("{m} labels"), y.len()));
    }
    let (classes, _) = encode_labels(y);
    if classes.len() < 2 {
        return Err(Error::OneClass);
    }
    check_gram(k)?;
    let mut jobs: Vec<(i64, Option<i64>)> = Vec::new();
    if classes.len() == 2 {
        jobs.push((classes[0], Some(classes[1])));
    } else {
        match mode {
            MulticlassMode::OneVsAll => jobs.extend(classes.iter().map(|&p| (p, None))),
            MulticlassMode::OneVsOne => {
                for (a, &p) in classes.iter().enumerate() {
                    for &n in &classes[a + 1..] {
                        jobs.push((p, Some(n)));
                    }
                }
            }
        }
    }
    let machines = jobs
        .into_par_iter()
        .map(|(positive, negative)| {
            let indices: Vec<usize> = (0..m)
                .filter(|&i| negative.is_none_or(|n| y[i] == positive || y[i] == n))
                .collect();
            let yb: Vec<i64> = indices
                .iter()
                .map(|&i| if y[i] == positive { 1 } else { -1 })
                .collect();
            let model = svm_train(&sub_gram(k, &indices), &yb, c)?;
            Ok(BinaryMachine {
                positive,
                negative,
                indices,
                model,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MulticlassSvm {
        mode,
        classes,
        machines,
    })
}

impl MulticlassSvm {
    /// Predicted class per test point from the full `m × t` kernel block.
    pub fn predict(&self, kernel_columns: &Matrix) -> Result<Vec<i64>> {
        let t = kernel_columns.ncols();
        let mut decisions = Vec::with_capacity(self.machines.len());
        for mach in &self.machines {
            if let Some(&max) = mach.indices.iter().max() {
                if max >= kernel_columns.nrows() {
                    return Err(Error::dims(
                        format!("> {max} kernel rows"),
                        kernel_columns.nrows(),
                    ));
                }
            }
            let rows = Matrix::from_fn(mach.indices.len(), t, |a, j| {
                kernel_columns[(mach.indices[a], j)]
            });
            decisions.push(svm_predict(&mach.model, &rows)?);
        }
        let nc = self.classes.len();
        let pos = |c: i64| self.classes.binary_search(&c).expect("known class");
        Ok((0..t)
            .map(|j| {
                if self.machines.len() == 1 {
                    let m0 = &self.machines[0];
                    return if decisions[0][j] >= 0.0 {
                        m0.positive
                    } else {
                        m0.negative.expect("binary machine")
                    };
                }
                let mut votes = vec![0usize; nc];
                let mut score = vec![0.0f64; nc];
                for (mach, d) in self.machines.iter().zip(&decisions) {
                    let v = d[j];
                    let p = pos(mach.positive);
                    score[p] += v;
                    match mach.negative {
                        None => {}
                        Some(n) => {
                            let n = pos(n);
                            score[n] -= v;
                            if v >= 0.0 {
                                votes[p] += 1;
                            } else {
                                votes[n] += 1;
                            }
                        }
                    }
                }
                let mut best = 0;
                for c in 1..nc {
                    let better = match self.mode {
                        MulticlassMode::OneVsAll => score[c] > score[best],
                        MulticlassMode::OneVsOne => {
                            votes[c] > votes[best]
                                || (votes[c] == votes[best] && score[c] > score[best])
                        }
                    };
                    if better {
                        best = c;
                    }
                }
                self.classes[best]
            })
            .collect())
    }
}
