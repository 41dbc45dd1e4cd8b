//! Gaussian naive Bayes.
//!
//! Class variances get `nb_var_smoothing * max_j Var(X[:, j])` added, the
//! variance floor used by the common scientific-Python implementation.

use serde::{Deserialize, Serialize};

use super::{ClassifierConfig, LearnerError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub priors: Vec<f64>,
    /// `means[c][j]`.
    pub means: Vec<Vec<f64>>,
    /// Smoothed `variances[c][j]`.
    pub variances: Vec<Vec<f64>>,
    pub epsilon: f64,
}

fn column_variance(x: &[Vec<f64>], j: usize) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
    x.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n
}

pub(super) fn fit(
    cfg: &ClassifierConfig,
    x: &[Vec<f64>],
    y: &[usize],
    k: usize,
) -> Result<NaiveBayesModel, LearnerError> {
    let n = x.len();
    let d = x[0].len();
    let max_var = (0..d).map(|j| column_variance(x, j)).fold(0.0, f64::max);
    let epsilon = cfg.nb_var_smoothing * max_var;
    let mut priors = vec![0.0; k];
    let mut means = vec![vec![0.0; d]; k];
    let mut variances = vec![vec![0.0; d]; k];
    for c in 0..k {
        let rows: Vec<&Vec<f64>> = x
            .iter()
            .zip(y)
            .filter(|(_, &v)| v == c)
            .map(|(r, _)| r)
            .collect();
        let nc = rows.len() as f64;
        priors[c] = nc / n as f64;
        for j in 0..d {
            let m = rows.iter().map(|r| r[j]).sum::<f64>() / nc;
            let v = rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / nc;
            means[c][j] = m;
            variances[c][j] = v + epsilon;
            if variances[c][j] <= 0.0 {
                return Err(LearnerError::ZeroVariance);
            }
        }
    }
    Ok(NaiveBayesModel {
        priors,
        means,
        variances,
        epsilon,
    })
}

impl NaiveBayesModel {
    /// Unnormalized log posteriors.
    pub fn joint_log_likelihood(&self, row: &[f64]) -> Vec<f64> {
        self.priors
            .iter()
            .zip(self.means.iter().zip(&self.variances))
            .map(|(p, (mu, var))| {
                p.ln()
                    - 0.5
                        * row
                            .iter()
                            .zip(mu.iter().zip(var))
                            .map(|(x, (m, v))| {
                                (std::f64::consts::TAU * v).ln() + (x - m).powi(2) / v
                            })
                            .sum::<f64>()
            })
            .collect()
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let jll = self.joint_log_likelihood(row);
        let top = jll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = jll.iter().map(|v| (v - top).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.iter().map(|v| v / total).collect()
    }
}
