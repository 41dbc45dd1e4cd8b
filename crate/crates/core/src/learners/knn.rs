//! k-nearest-neighbor majority vote (Euclidean, uniform weights).

use serde::{Deserialize, Serialize};

use super::{ClassifierConfig, LearnerError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub n_classes: usize,
    pub k: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

pub(super) fn fit(
    cfg: &ClassifierConfig,
    x: &[Vec<f64>],
    y: &[usize],
    k: usize,
) -> Result<KnnModel, LearnerError> {
    if x.len() < cfg.knn_k {
        return Err(LearnerError::TooFewRows {
            rows: x.len(),
            k: cfg.knn_k,
        });
    }
    Ok(KnnModel {
        n_classes: k,
        k: cfg.knn_k,
        x: x.to_vec(),
        y: y.to_vec(),
    })
}

impl KnnModel {
    /// Training-row indices of the `k` nearest rows; on equal distance the
    /// lower row index comes first.
    pub fn neighbors(&self, row: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().take(self.k).map(|(_, i)| i).collect()
    }

    /// Vote fractions per class.
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for i in self.neighbors(row) {
            votes[self.y[i]] += 1.0;
        }
        votes.iter().map(|v| v / self.k as f64).collect()
    }
}
