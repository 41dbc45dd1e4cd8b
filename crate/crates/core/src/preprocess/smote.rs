//! Synthetic minority oversampling.

use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::rng::SeededStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingStrategy {
    /// Every class except the majority is grown to the majority count.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub sampling_strategy: SamplingStrategy,
    pub random_state: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            sampling_strategy: SamplingStrategy::Auto,
            random_state: 0,
        }
    }
}

/// Provenance of one synthetic row: `x[base] + u * (x[neighbor] - x[base])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSample {
    pub base: usize,
    pub neighbor: usize,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteOutput {
    /// Original rows first, then synthetic rows in (class, draw) order.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    /// One entry per synthetic row, aligned with `x[n_original..]`.
    pub synthetic: Vec<SyntheticSample>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// `k` nearest same-class rows of each member (self excluded); distance
/// ties go to the lower row index.
fn neighbor_lists(x: &[Vec<f64>], members: &[usize], k: usize) -> Vec<Vec<usize>> {
    members
        .iter()
        .map(|&i| {
            let mut cand: Vec<(f64, usize)> = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (sq_dist(&x[i], &x[j]), j))
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(k);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

/// Oversamples with the `smote` stream keyed by `cfg.random_state`.
///
/// For each class below the majority count (classes in index order), each
/// draw picks a base member uniformly, one of its `k` neighbors uniformly
/// and `u` uniform on `[0, 1)`. The majority is the largest class, the
/// lowest index winning ties.
pub fn smote_resample(
    x: &[Vec<f64>],
    y: &[usize],
    cfg: &SmoteConfig,
) -> Result<SmoteOutput, PreprocessError> {
    if x.len() != y.len() {
        return Err(PreprocessError::LabelMismatch {
            labels: y.len(),
            rows: x.len(),
        });
    }
    if x.is_empty() {
        return Err(PreprocessError::Empty);
    }
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        members[c].push(i);
    }
    if members.iter().filter(|m| !m.is_empty()).count() < 2 {
        return Err(PreprocessError::SingleClass);
    }
    let target = members.iter().map(Vec::len).max().unwrap_or(0);
    let k = cfg.k_neighbors;
    for (class, m) in members.iter().enumerate() {
        if !m.is_empty() && m.len() < target && (k == 0 || k >= m.len()) {
            return Err(PreprocessError::TooFewNeighbors {
                class,
                size: m.len(),
                k,
            });
        }
    }

    let mut rng = SeededStream::new(cfg.random_state, "smote");
    let mut out = SmoteOutput {
        x: x.to_vec(),
        y: y.to_vec(),
        synthetic: Vec::new(),
    };
    for (class, m) in members.iter().enumerate() {
        if m.is_empty() || m.len() >= target {
            continue;
        }
        let nn = neighbor_lists(x, m, k);
        for _ in 0..target - m.len() {
            let b = rng.below(m.len());
            let base = m[b];
            let neighbor = nn[b][rng.below(k)];
            let u = rng.uniform();
            let row = x[base]
                .iter()
                .zip(&x[neighbor])
                .map(|(p, q)| p + u * (q - p))
                .collect();
            out.x.push(row);
            out.y.push(class);
            out.synthetic.push(SyntheticSample { base, neighbor, u });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(y: &[usize]) -> Vec<usize> {
        let mut c = vec![0; y.iter().max().unwrap() + 1];
        for &v in y {
            c[v] += 1;
        }
        c
    }

    #[test]
    fn identical_minority_points_stay_put() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![5.0], vec![5.0]];
        let y = vec![0, 0, 0, 1, 1];
        let cfg = SmoteConfig {
            k_neighbors: 1,
            ..Default::default()
        };
        let out = smote_resample(&x, &y, &cfg).unwrap();
        assert_eq!(counts(&out.y), vec![3, 3]);
        assert_eq!(out.x[5], vec![5.0]);
    }

    #[test]
    fn k_must_be_below_class_size() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let y = vec![0, 0, 0, 0, 0, 1, 1, 1];
        assert_eq!(
            smote_resample(&x, &y, &SmoteConfig::default()).unwrap_err(),
            PreprocessError::TooFewNeighbors {
                class: 1,
                size: 3,
                k: 5
            }
        );
        assert_eq!(
            smote_resample(&x[..2], &[0, 0], &SmoteConfig::default()).unwrap_err(),
            PreprocessError::SingleClass
        );
    }

    #[test]
    fn balanced_input_is_unchanged() {
        let x: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let out = smote_resample(&x, &[0, 1, 0, 1], &SmoteConfig::default()).unwrap();
        assert_eq!(out.x, x);
        assert!(out.synthetic.is_empty());
    }

    #[test]
    fn neighbors_break_ties_by_index() {
        let x = vec![vec![0.0], vec![1.0], vec![-1.0], vec![2.0]];
        let nn = neighbor_lists(&x, &[0, 1, 2, 3], 2);
        assert_eq!(nn[0], vec![1, 2]);
        assert_eq!(nn[3], vec![1, 0]);
    }
}
