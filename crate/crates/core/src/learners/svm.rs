//! RBF support vector machine trained by SMO.
//!
//! The dual `min 1/2 a'Qa - e'a`, `0 <= a <= C`, `y'a = 0` is solved with
//! the second-order working-set rule of Fan, Chen and Lin (2005) on a fully
//! precomputed kernel matrix. Iteration stops when the maximal violating
//! pair gap drops below `svm_tol`.

use serde::{Deserialize, Serialize};

use super::{ClassifierConfig, Gamma, LearnerError};

const TAU: f64 = 1e-12;

/// Solution of one binary problem; `alpha` covers every training row.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmMachine {
    /// Indices into [`SvmModel::support_vectors`].
    pub support: Vec<usize>,
    /// `alpha_i * y_i` for each entry of `support`.
    pub dual_coef: Vec<f64>,
    /// Bias; the decision value is `sum dual_coef * K - rho`.
    pub rho: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub n_classes: usize,
    pub gamma: f64,
    pub c: f64,
    /// Training rows that are support vectors of at least one machine.
    pub support_vectors: Vec<Vec<f64>>,
    /// One machine for two classes (positive side = class 1), else one per class.
    pub machines: Vec<SvmMachine>,
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    (-gamma * d2).exp()
}

/// `1 / (d * Var(X))`, the variance taken over all entries.
pub fn scale_gamma(x: &[Vec<f64>]) -> Result<f64, LearnerError> {
    let d = x.first().map_or(0, Vec::len);
    let n = (x.len() * d) as f64;
    if n == 0.0 {
        return Err(LearnerError::Empty);
    }
    let mean = x.iter().flatten().sum::<f64>() / n;
    let var = x.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(LearnerError::UndefinedGamma);
    }
    Ok(1.0 / (d as f64 * var))
}

pub fn kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        k[i][i] = 1.0;
        for j in 0..i {
            let v = rbf(&x[i], &x[j], gamma);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

/// SMO on a precomputed kernel; `y` holds +1 / -1.
pub fn solve_binary(
    kernel: &[Vec<f64>],
    y: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> BinarySolution {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // i: maximal violator in I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = if y[t] > 0.0 {
                !is_upper(alpha[t])
            } else {
                !is_lower(alpha[t])
            };
            if in_up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            break;
        };
        // j: best second-order gain in I_low.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let in_low = if y[t] > 0.0 {
                !is_lower(alpha[t])
            } else {
                !is_upper(alpha[t])
            };
            if !in_low {
                continue;
            }
            let v = y[t] * grad[t];
            gmax2 = gmax2.max(v);
            let diff = gmax + v;
            if diff > 0.0 {
                let quad = kernel[i][i] + kernel[t][t] - 2.0 * kernel[i][t];
                let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        if gmax + gmax2 < tol {
            converged = true;
            break;
        }
        let Some(j) = j_sel else {
            converged = true;
            break;
        };
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * kernel[i][j];
        if y[i] != y[j] {
            let mut quad = kernel[i][i] + kernel[j][j] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = kernel[i][i] + kernel[j][j] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * kernel[i][t] * di + y[j] * kernel[j][t] * dj);
        }
    }

    // Bias: mean of y*G over free variables, else midpoint of the bounds.
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if is_upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    let rho = if n_free > 0 {
        free_sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    BinarySolution {
        alpha,
        rho,
        iterations,
        converged,
    }
}

/// Decision values `f(x_t)` on the training rows of a binary solution.
pub fn training_decisions(kernel: &[Vec<f64>], y: &[f64], sol: &BinarySolution) -> Vec<f64> {
    (0..y.len())
        .map(|t| {
            (0..y.len())
                .filter(|&s| sol.alpha[s] > 0.0)
                .map(|s| sol.alpha[s] * y[s] * kernel[s][t])
                .sum::<f64>()
                - sol.rho
        })
        .collect()
}

/// Largest KKT violation of a binary solution:
/// `alpha = 0 => y f >= 1`, `0 < alpha < C => y f = 1`, `alpha = C => y f <= 1`.
pub fn max_kkt_violation(kernel: &[Vec<f64>], y: &[f64], c: f64, sol: &BinarySolution) -> f64 {
    let f = training_decisions(kernel, y, sol);
    (0..y.len())
        .map(|t| {
            let m = y[t] * f[t];
            let a = sol.alpha[t];
            if a <= 0.0 {
                (1.0 - m).max(0.0)
            } else if a >= c {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Iteration cap for one binary problem.
pub fn max_iterations(n: usize) -> usize {
    (100 * n).max(10_000_000)
}

pub(super) fn fit(
    cfg: &ClassifierConfig,
    x: &[Vec<f64>],
    y: &[usize],
    k: usize,
) -> Result<SvmModel, LearnerError> {
    let gamma = match cfg.svm_gamma {
        Gamma::Value(g) => g,
        Gamma::Named(_) => scale_gamma(x)?,
    };
    let kernel = kernel_matrix(x, gamma);
    let positives: Vec<usize> = if k == 2 { vec![1] } else { (0..k).collect() };
    let mut used = vec![None; x.len()];
    let mut support_vectors = Vec::new();
    let mut machines = Vec::new();
    for c in positives {
        let ys: Vec<f64> = y.iter().map(|&v| if v == c { 1.0 } else { -1.0 }).collect();
        let sol = solve_binary(
            &kernel,
            &ys,
            cfg.svm_c,
            cfg.svm_tol,
            max_iterations(x.len()),
        );
        if !sol.converged {
            log::info!("SVM machine for class {c} hit the iteration cap");
        }
        let mut support = Vec::new();
        let mut dual_coef = Vec::new();
        for (t, &a) in sol.alpha.iter().enumerate() {
            if a > 0.0 {
                let slot = *used[t].get_or_insert_with(|| {
                    support_vectors.push(x[t].clone());
                    support_vectors.len() - 1
                });
                support.push(slot);
                dual_coef.push(a * ys[t]);
            }
        }
        machines.push(SvmMachine {
            support,
            dual_coef,
            rho: sol.rho,
            converged: sol.converged,
        });
    }
    Ok(SvmModel {
        n_classes: k,
        gamma,
        c: cfg.svm_c,
        support_vectors,
        machines,
    })
}

impl SvmModel {
    pub fn decision_values(&self, row: &[f64]) -> Vec<f64> {
        let kv: Vec<f64> = self
            .support_vectors
            .iter()
            .map(|sv| rbf(sv, row, self.gamma))
            .collect();
        self.machines
            .iter()
            .map(|m| {
                m.support
                    .iter()
                    .zip(&m.dual_coef)
                    .map(|(&s, &a)| a * kv[s])
                    .sum::<f64>()
                    - m.rho
            })
            .collect()
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let f = self.decision_values(row);
        if self.n_classes == 2 {
            vec![-f[0], f[0]]
        } else {
            f
        }
    }
}
