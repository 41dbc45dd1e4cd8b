//! One-vs-rest logistic regression fitted by full-batch gradient descent
//! with Armijo backtracking.
//!
//! Each head minimizes
//! `(1/n) sum_i [softplus(z_i) - t_i z_i] + (l2 / 2n) ||w||^2`, `z = w.x + b`,
//! which is the usual `C = 1 / l2` formulation divided by `n`. The bias is
//! not penalized.

use serde::{Deserialize, Serialize};

use super::ClassifierConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticHead {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub n_classes: usize,
    /// One head for two classes (positive side = class 1), else one per class.
    pub heads: Vec<LogisticHead>,
}

/// A fitted head together with its per-iteration loss.
#[derive(Debug, Clone)]
pub struct HeadFit {
    pub head: LogisticHead,
    /// Loss before the first step and after every accepted step.
    pub loss_history: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Objective value only.
pub fn loss(x: &[Vec<f64>], t: &[f64], w: &[f64], b: f64, l2: f64) -> f64 {
    let n = x.len() as f64;
    let data: f64 = x
        .iter()
        .zip(t)
        .map(|(row, &ti)| {
            let z = dot(w, row) + b;
            softplus(z) - ti * z
        })
        .sum();
    data / n + l2 / (2.0 * n) * dot(w, w)
}

/// Objective, weight gradient and bias gradient.
pub fn loss_and_grad(
    x: &[Vec<f64>],
    t: &[f64],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    let mut data = 0.0;
    for (row, &ti) in x.iter().zip(t) {
        let z = dot(w, row) + b;
        data += softplus(z) - ti * z;
        let r = sigmoid(z) - ti;
        gb += r;
        for (g, v) in gw.iter_mut().zip(row) {
            *g += r * v;
        }
    }
    for (g, wi) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 / n * wi;
    }
    (data / n + l2 / (2.0 * n) * dot(w, w), gw, gb / n)
}

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Gradient descent from zero until `||grad|| < tol` or `max_iter` steps.
///
/// A step is only taken when it passes the sufficient-decrease test, so
/// the loss history is non-increasing. If no step size passes, fitting
/// stops unconverged.
pub fn fit_head(x: &[Vec<f64>], t: &[f64], l2: f64, max_iter: usize, tol: f64) -> HeadFit {
    let d = x.first().map_or(0, Vec::len);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let (mut f, mut gw, mut gb) = loss_and_grad(x, t, &w, b, l2);
    let mut history = vec![f];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let gnorm2 = dot(&gw, &gw) + gb * gb;
        if gnorm2.sqrt() < tol {
            converged = true;
            break;
        }
        let mut accepted = None;
        let mut s = step;
        for _ in 0..MAX_HALVINGS {
            let w_new: Vec<f64> = w.iter().zip(&gw).map(|(wi, gi)| wi - s * gi).collect();
            let b_new = b - s * gb;
            let f_new = loss(x, t, &w_new, b_new, l2);
            if f_new <= f - ARMIJO_C * s * gnorm2 {
                accepted = Some((w_new, b_new, s));
                break;
            }
            s *= 0.5;
        }
        let Some((w_new, b_new, s)) = accepted else {
            break;
        };
        w = w_new;
        b = b_new;
        (f, gw, gb) = loss_and_grad(x, t, &w, b, l2);
        history.push(f);
        iterations += 1;
        step = (s * 2.0).min(1e6);
    }
    if !converged {
        let g = (dot(&gw, &gw) + gb * gb).sqrt();
        converged = g < tol;
    }
    HeadFit {
        head: LogisticHead {
            weights: w,
            bias: b,
            iterations,
            converged,
            final_loss: f,
        },
        loss_history: history,
    }
}

pub(super) fn fit(cfg: &ClassifierConfig, x: &[Vec<f64>], y: &[usize], k: usize) -> LogisticModel {
    let positives: Vec<usize> = if k == 2 { vec![1] } else { (0..k).collect() };
    let heads = positives
        .into_iter()
        .map(|c| {
            let t: Vec<f64> = y.iter().map(|&v| if v == c { 1.0 } else { 0.0 }).collect();
            let fit = fit_head(x, &t, cfg.lr_l2, cfg.lr_max_iter, cfg.lr_tol);
            if !fit.head.converged {
                log::info!(
                    "logistic head for class {c} stopped after {} iterations without reaching tolerance",
                    fit.head.iterations
                );
            }
            fit.head
        })
        .collect();
    LogisticModel {
        n_classes: k,
        heads,
    }
}

impl LogisticModel {
    pub fn converged(&self) -> bool {
        self.heads.iter().all(|h| h.converged)
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let p: Vec<f64> = self
            .heads
            .iter()
            .map(|h| sigmoid(dot(&h.weights, row) + h.bias))
            .collect();
        if self.n_classes == 2 {
            return vec![1.0 - p[0], p[0]];
        }
        let total: f64 = p.iter().sum();
        if total > 0.0 {
            p.iter().map(|v| v / total).collect()
        } else {
            vec![1.0 / p.len() as f64; p.len()]
        }
    }

    pub fn importances(&self) -> Vec<f64> {
        let d = self.heads[0].weights.len();
        (0..d)
            .map(|j| self.heads.iter().map(|h| h.weights[j].abs()).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_score_one_half() {
        let m = LogisticModel {
            n_classes: 2,
            heads: vec![LogisticHead {
                weights: vec![0.0, 0.0],
                bias: 0.0,
                iterations: 0,
                converged: true,
                final_loss: 0.0,
            }],
        };
        assert_eq!(m.scores(&[3.0, -1.0]), vec![0.5, 0.5]);
        assert_eq!(super::super::argmax(&m.scores(&[3.0, -1.0])), 0);
    }

    #[test]
    fn loss_at_zero_is_ln2() {
        let x = vec![vec![1.0], vec![-1.0]];
        assert!((loss(&x, &[1.0, 0.0], &[0.0], 0.0, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn separable_data_converges_with_penalty() {
        let x = vec![vec![-1.0], vec![-0.5], vec![0.5], vec![1.0]];
        let fit = fit_head(&x, &[0.0, 0.0, 1.0, 1.0], 1.0, 750, 1e-4);
        assert!(fit.head.converged);
        assert!(fit.head.weights[0] > 0.0);
        assert!(fit.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        assert!((sigmoid(-800.0)).is_finite());
    }
}
