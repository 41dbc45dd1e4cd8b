//! Model-ready numeric data: categorical encoding, mean imputation,
//! z-scoring, stratified splitting and SMOTE.
//!
//! Every fitted quantity lives in [`PreprocessParams`], which is fitted on
//! training rows only and stored next to each trained model so held-out
//! rows can be transformed without looking at their statistics.

mod smote;

pub use smote::{smote_resample, SamplingStrategy, SmoteConfig, SmoteOutput, SyntheticSample};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Cell, FeatureKind, FeatureMatrix};
use crate::rng::SeededStream;

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("feature `{0}` has no observed values and cannot be imputed")]
    UnimputableFeature(String),
    #[error("feature `{feature}`: category `{value}` was not seen in training")]
    UnseenCategory { feature: String, value: String },
    #[error("expected {expected} columns, found {found}")]
    ColumnMismatch { expected: usize, found: usize },
    #[error("column {index} is `{found}`, expected `{expected}`")]
    ColumnName {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("test fraction {0} is outside (0, 1)")]
    InvalidFraction(f64),
    #[error("class {class} has {size} member(s); stratified splitting needs at least 2")]
    ClassTooSmall { class: usize, size: usize },
    #[error("SMOTE needs k_neighbors < class size, but class {class} has {size} rows and k = {k}")]
    TooFewNeighbors { class: usize, size: usize, k: usize },
    #[error("input contains a single class")]
    SingleClass,
    #[error("no rows to process")]
    Empty,
    #[error("labels and rows disagree in length ({labels} vs {rows})")]
    LabelMismatch { labels: usize, rows: usize },
}

/// Numeric table with a missing-value mask, the output of encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericMatrix {
    pub names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub missing: Vec<Vec<bool>>,
}

impl NumericMatrix {
    pub fn n_rows(&self) -> usize {
        self.x.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn select_rows(&self, rows: &[usize]) -> NumericMatrix {
        NumericMatrix {
            names: self.names.clone(),
            x: rows.iter().map(|&i| self.x[i].clone()).collect(),
            missing: rows.iter().map(|&i| self.missing[i].clone()).collect(),
        }
    }
}

/// Per-feature z-score parameters (population standard deviation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub sigma: f64,
    /// Set when the column was constant; `sigma` is then 1.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessParams {
    pub feature_names: Vec<String>,
    /// Value-to-code map per categorical feature; codes are 0..k-1 in
    /// ascending lexicographic order of the values.
    pub category_maps: BTreeMap<String, BTreeMap<String, u32>>,
    pub feature_means: Vec<f64>,
    pub standardize_mu_sigma: Option<Vec<Standardization>>,
}

/// Fits lexicographic integer codes for every categorical column.
pub fn fit_category_maps(m: &FeatureMatrix) -> BTreeMap<String, BTreeMap<String, u32>> {
    let mut maps = BTreeMap::new();
    for (j, name) in m.schema.names.iter().enumerate() {
        if m.schema.kinds[j] != FeatureKind::Categorical {
            continue;
        }
        let mut values: Vec<&str> = (0..m.n_rows())
            .filter_map(|i| match m.get(i, j) {
                Some(Cell::Cat(s)) => Some(s.as_str()),
                _ => None,
            })
            .collect();
        values.sort_unstable();
        values.dedup();
        let map = values
            .into_iter()
            .enumerate()
            .map(|(code, v)| (v.to_string(), code as u32))
            .collect();
        maps.insert(name.clone(), map);
    }
    maps
}

/// Applies category maps; missing cells stay masked.
pub fn apply_category_maps(
    m: &FeatureMatrix,
    maps: &BTreeMap<String, BTreeMap<String, u32>>,
) -> Result<NumericMatrix, PreprocessError> {
    let mut out = NumericMatrix {
        names: m.schema.names.clone(),
        x: Vec::with_capacity(m.n_rows()),
        missing: m.missing.clone(),
    };
    for i in 0..m.n_rows() {
        let mut row = Vec::with_capacity(m.n_cols());
        for (j, name) in m.schema.names.iter().enumerate() {
            let v = match m.get(i, j) {
                None => 0.0,
                Some(Cell::Num(v)) => *v,
                Some(Cell::Cat(s)) => {
                    let code = maps.get(name).and_then(|map| map.get(s)).ok_or_else(|| {
                        PreprocessError::UnseenCategory {
                            feature: name.clone(),
                            value: s.clone(),
                        }
                    })?;
                    f64::from(*code)
                }
            };
            row.push(v);
        }
        out.x.push(row);
    }
    Ok(out)
}

/// Encodes categorical columns with maps fitted on `m` itself.
pub fn encode_categorical(
    m: &FeatureMatrix,
) -> Result<(NumericMatrix, BTreeMap<String, BTreeMap<String, u32>>), PreprocessError> {
    let maps = fit_category_maps(m);
    let out = apply_category_maps(m, &maps)?;
    Ok((out, maps))
}

/// Column means over observed cells.
pub fn fit_means(m: &NumericMatrix) -> Result<Vec<f64>, PreprocessError> {
    (0..m.n_cols())
        .map(|j| {
            let observed: Vec<f64> = (0..m.n_rows())
                .filter(|&i| !m.missing[i][j])
                .map(|i| m.x[i][j])
                .collect();
            if observed.is_empty() {
                Err(PreprocessError::UnimputableFeature(m.names[j].clone()))
            } else {
                Ok(observed.iter().sum::<f64>() / observed.len() as f64)
            }
        })
        .collect()
}

/// Fills masked cells with `means`; observed cells are untouched.
pub fn apply_means(m: &NumericMatrix, means: &[f64]) -> Vec<Vec<f64>> {
    m.x.iter()
        .zip(&m.missing)
        .map(|(row, mask)| {
            row.iter()
                .zip(mask)
                .zip(means)
                .map(|((&v, &miss), &mu)| if miss { mu } else { v })
                .collect()
        })
        .collect()
}

/// Mean imputation fitted on `m` itself; returns the filled rows and means.
pub fn impute_mean(m: &NumericMatrix) -> Result<(Vec<Vec<f64>>, Vec<f64>), PreprocessError> {
    let means = fit_means(m)?;
    Ok((apply_means(m, &means), means))
}

/// Z-score parameters per column of `x`.
pub fn fit_standardization(x: &[Vec<f64>]) -> Result<Vec<Standardization>, PreprocessError> {
    let n = x.len();
    if n == 0 {
        return Err(PreprocessError::Empty);
    }
    let d = x[0].len();
    Ok((0..d)
        .map(|j| {
            let mean = x.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let var = x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64;
            let sigma = var.sqrt();
            if sigma > 1e-12 * mean.abs().max(1.0) {
                Standardization {
                    mean,
                    sigma,
                    constant: false,
                }
            } else {
                Standardization {
                    mean,
                    sigma: 1.0,
                    constant: true,
                }
            }
        })
        .collect())
}

pub fn apply_standardization(x: &[Vec<f64>], s: &[Standardization]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|r| {
            r.iter()
                .zip(s)
                .map(|(v, p)| (v - p.mean) / p.sigma)
                .collect()
        })
        .collect()
}

impl PreprocessParams {
    /// Encoding maps and imputation means fitted on `train`.
    pub fn fit(train: &FeatureMatrix) -> Result<Self, PreprocessError> {
        if train.n_rows() == 0 {
            return Err(PreprocessError::Empty);
        }
        let (encoded, category_maps) = encode_categorical(train)?;
        let feature_means = fit_means(&encoded)?;
        Ok(Self {
            feature_names: train.schema.names.clone(),
            category_maps,
            feature_means,
            standardize_mu_sigma: None,
        })
    }

    /// Parameters for rows that are already numeric and complete.
    pub fn identity(d: usize) -> Self {
        Self {
            feature_names: (0..d).map(|j| format!("x{j}")).collect(),
            category_maps: BTreeMap::new(),
            feature_means: vec![0.0; d],
            standardize_mu_sigma: None,
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn with_standardization(mut self, s: Option<Vec<Standardization>>) -> Self {
        self.standardize_mu_sigma = s;
        self
    }

    /// Encodes and imputes `m` (no standardization).
    pub fn transform(&self, m: &FeatureMatrix) -> Result<Vec<Vec<f64>>, PreprocessError> {
        if m.schema.names.len() != self.feature_names.len() {
            return Err(PreprocessError::ColumnMismatch {
                expected: self.feature_names.len(),
                found: m.schema.names.len(),
            });
        }
        for (index, (a, b)) in self.feature_names.iter().zip(&m.schema.names).enumerate() {
            if a != b {
                return Err(PreprocessError::ColumnName {
                    index,
                    expected: a.clone(),
                    found: b.clone(),
                });
            }
        }
        let encoded = apply_category_maps(m, &self.category_maps)?;
        Ok(apply_means(&encoded, &self.feature_means))
    }

    /// Applies the stored z-scores, if any.
    pub fn scale(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        match &self.standardize_mu_sigma {
            Some(s) => apply_standardization(x, s),
            None => x.to_vec(),
        }
    }

    /// Features recorded as constant during standardization.
    pub fn constant_features(&self) -> Vec<&str> {
        match &self.standardize_mu_sigma {
            Some(s) => self
                .feature_names
                .iter()
                .zip(s)
                .filter(|(_, p)| p.constant)
                .map(|(n, _)| n.as_str())
                .collect(),
            None => Vec::new(),
        }
    }

    /// Inverse of the category map for one feature.
    pub fn decode(&self, feature: &str, code: u32) -> Option<&str> {
        self.category_maps
            .get(feature)?
            .iter()
            .find(|(_, &c)| c == code)
            .map(|(v, _)| v.as_str())
    }
}

/// Per-class test counts: round half up of `n_c * fraction`, clamped to
/// `[1, n_c - 1]`.
pub fn stratified_test_counts(class_sizes: &[usize], test_fraction: f64) -> Vec<usize> {
    class_sizes
        .iter()
        .map(|&n| {
            if n == 0 {
                return 0;
            }
            let raw = (n as f64 * test_fraction + 0.5).floor() as usize;
            raw.clamp(1, n.saturating_sub(1).max(1))
        })
        .collect()
}

/// Seeded stratified split of row indices; both index lists are sorted.
///
/// Class members are shuffled with the `split` stream and the first
/// `stratified_test_counts` of each class go to the test side.
pub fn stratified_split(
    labels: &[usize],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), PreprocessError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(PreprocessError::InvalidFraction(test_fraction));
    }
    if labels.is_empty() {
        return Err(PreprocessError::Empty);
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        members[c].push(i);
    }
    for (class, m) in members.iter().enumerate() {
        if m.len() == 1 {
            return Err(PreprocessError::ClassTooSmall { class, size: 1 });
        }
    }
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let counts = stratified_test_counts(&sizes, test_fraction);
    let mut rng = SeededStream::new(seed, "split");
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (m, &k) in members.iter_mut().zip(&counts) {
        rng.shuffle(m);
        test.extend_from_slice(&m[..k]);
        train.extend_from_slice(&m[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Group;
    use crate::features::FeatureSchema;

    fn matrix(sex: &[Option<&str>], age: &[Option<f64>]) -> FeatureMatrix {
        let schema = FeatureSchema::from_names(&["sex", "age_months"]).unwrap();
        let n = sex.len();
        FeatureMatrix {
            schema,
            participant_ids: (0..n).map(|i| format!("P{i}")).collect(),
            labels: vec![Group::TD; n],
            values: sex
                .iter()
                .zip(age)
                .map(|(s, a)| {
                    vec![
                        Cell::Cat(s.unwrap_or("").to_string()),
                        Cell::Num(a.unwrap_or(0.0)),
                    ]
                })
                .collect(),
            missing: sex
                .iter()
                .zip(age)
                .map(|(s, a)| vec![s.is_none(), a.is_none()])
                .collect(),
        }
    }

    #[test]
    fn impute_fills_with_observed_mean() {
        let m = matrix(
            &[Some("M"), Some("F"), Some("M")],
            &[Some(1.0), None, Some(3.0)],
        );
        let (enc, _) = encode_categorical(&m).unwrap();
        let (x, means) = impute_mean(&enc).unwrap();
        assert_eq!(
            x.iter().map(|r| r[1]).collect::<Vec<_>>(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(means[1], 2.0);
    }

    #[test]
    fn impute_without_gaps_is_identity() {
        let m = matrix(&[Some("M"), Some("F")], &[Some(4.0), Some(6.0)]);
        let (enc, _) = encode_categorical(&m).unwrap();
        let (x, means) = impute_mean(&enc).unwrap();
        assert_eq!(x, enc.x);
        assert_eq!(means[1], 5.0);
    }

    #[test]
    fn all_missing_column_is_rejected() {
        let m = matrix(&[Some("M"), Some("F")], &[None, None]);
        let (enc, _) = encode_categorical(&m).unwrap();
        assert_eq!(
            impute_mean(&enc).unwrap_err(),
            PreprocessError::UnimputableFeature("age_months".into())
        );
    }

    #[test]
    fn encoding_is_lexicographic() {
        let m = matrix(&[Some("M"), Some("F"), Some("M")], &[Some(1.0); 3]);
        let (enc, maps) = encode_categorical(&m).unwrap();
        assert_eq!(
            enc.x.iter().map(|r| r[0]).collect::<Vec<_>>(),
            vec![1.0, 0.0, 1.0]
        );
        assert_eq!(maps["sex"]["F"], 0);
        let single = matrix(&[Some("F"), Some("F")], &[Some(1.0); 2]);
        let (enc, _) = encode_categorical(&single).unwrap();
        assert!(enc.x.iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn unseen_category_at_transform() {
        let train = matrix(&[Some("M"), Some("F")], &[Some(1.0), Some(2.0)]);
        let params = PreprocessParams::fit(&train).unwrap();
        let held_out = matrix(&[Some("X")], &[Some(1.0)]);
        assert_eq!(
            params.transform(&held_out).unwrap_err(),
            PreprocessError::UnseenCategory {
                feature: "sex".into(),
                value: "X".into()
            }
        );
        assert_eq!(params.decode("sex", 1), Some("M"));
    }

    #[test]
    fn held_out_uses_train_means() {
        let train = matrix(&[Some("M"), Some("F")], &[Some(10.0), Some(20.0)]);
        let params = PreprocessParams::fit(&train).unwrap();
        let test = matrix(&[Some("M"), None], &[None, Some(99.0)]);
        let x = params.transform(&test).unwrap();
        assert_eq!(x[0][1], 15.0);
        assert_eq!(x[1][0], 0.5);
        assert_eq!(x[1][1], 99.0);
    }

    #[test]
    fn standardization_flags_constants() {
        let x = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = fit_standardization(&x).unwrap();
        assert_eq!(
            s[0],
            Standardization {
                mean: 2.0,
                sigma: 1.0,
                constant: false
            }
        );
        assert!(s[1].constant);
        assert_eq!(
            apply_standardization(&x, &s),
            vec![vec![-1.0, 0.0], vec![1.0, 0.0]]
        );
    }

    #[test]
    fn split_counts_follow_rounding_rule() {
        let labels: Vec<usize> = std::iter::repeat_n(0, 26)
            .chain(std::iter::repeat_n(1, 12))
            .collect();
        let (train, test) = stratified_split(&labels, 0.2, 0).unwrap();
        let test_td = test.iter().filter(|&&i| labels[i] == 0).count();
        let test_asd = test.len() - test_td;
        assert_eq!((test_td, test_asd), (5, 2));
        assert_eq!(train.len() + test.len(), 38);
        assert_eq!(stratified_test_counts(&[4, 4], 0.5), vec![2, 2]);
        assert_eq!(stratified_test_counts(&[5, 3], 0.5), vec![3, 2]);
        assert_eq!(stratified_split(&labels, 0.2, 0).unwrap(), (train, test));
    }

    #[test]
    fn split_errors() {
        assert_eq!(
            stratified_split(&[0, 0, 1], 0.5, 0).unwrap_err(),
            PreprocessError::ClassTooSmall { class: 1, size: 1 }
        );
        assert_eq!(
            stratified_split(&[0, 0], 0.0, 0).unwrap_err(),
            PreprocessError::InvalidFraction(0.0)
        );
        assert_eq!(
            stratified_split(&[0, 0], 1.5, 0).unwrap_err(),
            PreprocessError::InvalidFraction(1.5)
        );
    }
}
