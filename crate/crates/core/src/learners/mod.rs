//! The five classifiers behind one train / predict / score contract.
//!
//! Inputs are dense row-major `f64` matrices that are already encoded and
//! imputed, and class indices into a `class_labels` list. A model applies
//! the z-scores stored in its [`PreprocessParams`] (if any) before fitting
//! and before every prediction.
//!
//! Scores returned by [`TrainedModel::predict_scores`]:
//!
//! | kind                  | score                                        |
//! |-----------------------|----------------------------------------------|
//! | `logistic_regression` | sigmoid per head, normalized across heads    |
//! | `gaussian_nb`         | posterior probabilities                      |
//! | `random_forest`       | mean of leaf class distributions             |
//! | `svm_rbf`             | raw decision value per one-vs-rest machine   |
//! | `knn`                 | fraction of the `k` neighbors in each class  |
//!
//! With two classes the logistic and SVM models fit a single head whose
//! positive side is class index 1; the SVM then reports `[-f, f]`.

pub mod bayes;
pub mod forest;
pub mod knn;
pub mod logistic;
pub mod svm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::preprocess::{PreprocessError, PreprocessParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("training data contains fewer than two classes")]
    SingleClass,
    #[error("class `{0}` has no training rows")]
    MissingClass(String),
    #[error("label index {index} is outside the {n_classes} known classes")]
    LabelOutOfRange { index: usize, n_classes: usize },
    #[error("no training rows")]
    Empty,
    #[error("{rows} rows and {labels} labels")]
    LabelMismatch { rows: usize, labels: usize },
    #[error("expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("kernel width undefined: every feature has zero variance")]
    UndefinedGamma,
    #[error("k = {k} but only {rows} training rows")]
    TooFewRows { rows: usize, k: usize },
    #[error("all features have zero variance")]
    ZeroVariance,
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("{0} does not expose feature importances")]
    NoImportances(ClassifierKind),
    #[error("invalid classifier setting: {0}")]
    InvalidConfig(String),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LogisticRegression,
    SvmRbf,
    RandomForest,
    GaussianNb,
    Knn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::LogisticRegression,
        ClassifierKind::SvmRbf,
        ClassifierKind::RandomForest,
        ClassifierKind::GaussianNb,
        ClassifierKind::Knn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::SvmRbf => "svm_rbf",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::GaussianNb => "gaussian_nb",
            ClassifierKind::Knn => "knn",
        }
    }

    /// Short column heading for report tables.
    pub fn short_name(self) -> &'static str {
        match self {
            ClassifierKind::LogisticRegression => "LR",
            ClassifierKind::SvmRbf => "SVM",
            ClassifierKind::RandomForest => "RF",
            ClassifierKind::GaussianNb => "NB",
            ClassifierKind::Knn => "KNN",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Whether the pipeline feeds this learner z-scored features.
    pub fn wants_standardized(self) -> bool {
        matches!(
            self,
            ClassifierKind::LogisticRegression | ClassifierKind::SvmRbf | ClassifierKind::Knn
        )
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Named(GammaRule),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    /// `1 / (d * Var(X))`, the variance taken over every entry of `X`.
    Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(d))` candidates per node.
    #[default]
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnWeights {
    #[default]
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub lr_max_iter: usize,
    pub lr_l2: f64,
    pub lr_tol: f64,
    pub svm_c: f64,
    pub svm_gamma: Gamma,
    pub svm_tol: f64,
    pub rf_n_estimators: usize,
    pub rf_max_depth: usize,
    pub rf_max_features: MaxFeatures,
    pub nb_var_smoothing: f64,
    pub knn_k: usize,
    pub knn_weights: KnnWeights,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self::new(ClassifierKind::LogisticRegression)
    }
}

impl ClassifierConfig {
    pub fn new(kind: ClassifierKind) -> Self {
        Self {
            kind,
            lr_max_iter: 750,
            lr_l2: 1.0,
            lr_tol: 1e-4,
            svm_c: 1.0,
            svm_gamma: Gamma::Named(GammaRule::Scale),
            svm_tol: 1e-3,
            rf_n_estimators: 200,
            rf_max_depth: 2,
            rf_max_features: MaxFeatures::Sqrt,
            nb_var_smoothing: 1e-9,
            knn_k: 5,
            knn_weights: KnnWeights::Uniform,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |m: &str| Err(LearnerError::InvalidConfig(m.to_string()));
        if !(self.lr_l2 >= 0.0 && self.lr_l2.is_finite()) {
            return bad("lr_l2 must be a finite value >= 0");
        }
        if !(self.lr_tol > 0.0) {
            return bad("lr_tol must be > 0");
        }
        if self.lr_max_iter == 0 {
            return bad("lr_max_iter must be >= 1");
        }
        if !(self.svm_c > 0.0 && self.svm_c.is_finite()) {
            return bad("svm_c must be > 0");
        }
        if !(self.svm_tol > 0.0) {
            return bad("svm_tol must be > 0");
        }
        if let Gamma::Value(g) = self.svm_gamma {
            if !(g > 0.0 && g.is_finite()) {
                return bad("svm_gamma must be > 0 or \"scale\"");
            }
        }
        if self.rf_n_estimators == 0 || self.rf_max_depth == 0 {
            return bad("rf_n_estimators and rf_max_depth must be >= 1");
        }
        if !(self.nb_var_smoothing >= 0.0) {
            return bad("nb_var_smoothing must be >= 0");
        }
        if self.knn_k == 0 {
            return bad("knn_k must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelParameters {
    LogisticRegression(logistic::LogisticModel),
    SvmRbf(svm::SvmModel),
    RandomForest(forest::ForestModel),
    GaussianNb(bayes::NaiveBayesModel),
    Knn(knn::KnnModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub kind: ClassifierKind,
    pub config: ClassifierConfig,
    pub class_labels: Vec<String>,
    pub parameters: ModelParameters,
    pub preprocess: PreprocessParams,
}

fn check_rows(x: &[Vec<f64>], d: usize) -> Result<(), LearnerError> {
    for (row, r) in x.iter().enumerate() {
        if r.len() != d {
            return Err(LearnerError::DimensionMismatch {
                expected: d,
                found: r.len(),
            });
        }
        if let Some(col) = r.iter().position(|v| !v.is_finite()) {
            return Err(LearnerError::NonFinite { row, col });
        }
    }
    Ok(())
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in v.iter().enumerate().skip(1) {
        if s > v[best] {
            best = i;
        }
    }
    best
}

/// Fits `cfg.kind` on `x` (scaled by `preprocess` first, if it carries
/// z-scores). Every class in `class_labels` must occur in `y`.
pub fn train(
    cfg: &ClassifierConfig,
    x: &[Vec<f64>],
    y: &[usize],
    class_labels: &[String],
    preprocess: PreprocessParams,
) -> Result<TrainedModel, LearnerError> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(LearnerError::Empty);
    }
    if x.len() != y.len() {
        return Err(LearnerError::LabelMismatch {
            rows: x.len(),
            labels: y.len(),
        });
    }
    let k = class_labels.len();
    if k < 2 {
        return Err(LearnerError::SingleClass);
    }
    let mut counts = vec![0usize; k];
    for &c in y {
        if c >= k {
            return Err(LearnerError::LabelOutOfRange {
                index: c,
                n_classes: k,
            });
        }
        counts[c] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(LearnerError::SingleClass);
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(LearnerError::MissingClass(class_labels[c].clone()));
    }
    let d = preprocess.n_features();
    check_rows(x, d)?;
    let xs = preprocess.scale(x);

    let parameters = match cfg.kind {
        ClassifierKind::LogisticRegression => {
            ModelParameters::LogisticRegression(logistic::fit(cfg, &xs, y, k))
        }
        ClassifierKind::SvmRbf => ModelParameters::SvmRbf(svm::fit(cfg, &xs, y, k)?),
        ClassifierKind::RandomForest => ModelParameters::RandomForest(forest::fit(cfg, &xs, y, k)),
        ClassifierKind::GaussianNb => ModelParameters::GaussianNb(bayes::fit(cfg, &xs, y, k)?),
        ClassifierKind::Knn => ModelParameters::Knn(knn::fit(cfg, &xs, y, k)?),
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: cfg.kind,
        config: cfg.clone(),
        class_labels: class_labels.to_vec(),
        parameters,
        preprocess,
    })
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        self.preprocess.n_features()
    }

    /// Per-class scores for encoded, imputed (unscaled) rows.
    pub fn predict_scores(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, LearnerError> {
        check_rows(x, self.n_features())?;
        let xs = self.preprocess.scale(x);
        Ok(xs
            .iter()
            .map(|row| match &self.parameters {
                ModelParameters::LogisticRegression(m) => m.scores(row),
                ModelParameters::SvmRbf(m) => m.scores(row),
                ModelParameters::RandomForest(m) => m.scores(row),
                ModelParameters::GaussianNb(m) => m.scores(row),
                ModelParameters::Knn(m) => m.scores(row),
            })
            .collect())
    }

    /// Argmax of the scores, lowest class index on ties.
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<usize>, LearnerError> {
        Ok(self.predict_scores(x)?.iter().map(|s| argmax(s)).collect())
    }

    /// Encodes and imputes a feature matrix with the stored parameters.
    pub fn transform(&self, m: &FeatureMatrix) -> Result<Vec<Vec<f64>>, LearnerError> {
        Ok(self.preprocess.transform(m)?)
    }

    /// LR: summed |coefficient| over heads; RF: mean impurity decrease.
    pub fn feature_importances(&self) -> Result<Vec<f64>, LearnerError> {
        match &self.parameters {
            ModelParameters::LogisticRegression(m) => Ok(m.importances()),
            ModelParameters::RandomForest(m) => Ok(m.importances.clone()),
            _ => Err(LearnerError::NoImportances(self.kind)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LearnerError> {
        let m: TrainedModel =
            serde_json::from_str(text).map_err(|e| LearnerError::Format(e.to_string()))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(LearnerError::Format(format!(
                "unsupported format_version {}",
                m.format_version
            )));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    /// {-1 +/- 0.1} against {+1 +/- 0.1}.
    fn two_clusters() -> (Vec<Vec<f64>>, Vec<usize>) {
        let offsets = [-0.1, -0.05, 0.0, 0.05, 0.1, -0.08, 0.08];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (c, centre) in [(0usize, -1.0), (1, 1.0)] {
            for o in offsets {
                x.push(vec![centre + o]);
                y.push(c);
            }
        }
        (x, y)
    }

    #[test]
    fn every_kind_separates_two_clusters() {
        let (x, y) = two_clusters();
        for kind in ClassifierKind::ALL {
            let m = train(
                &ClassifierConfig::new(kind),
                &x,
                &y,
                &labels(&["a", "b"]),
                PreprocessParams::identity(1),
            )
            .unwrap();
            assert_eq!(m.predict(&x).unwrap(), y, "{kind}");
        }
    }

    #[test]
    fn defaults_follow_the_reported_settings() {
        let c = ClassifierConfig::default();
        assert_eq!(
            (c.lr_max_iter, c.rf_n_estimators, c.rf_max_depth, c.knn_k),
            (750, 200, 2, 5)
        );
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(json["svm_gamma"], "scale");
        let back: ClassifierConfig =
            serde_json::from_str(r#"{"kind":"svm_rbf","svm_gamma":0.5}"#).unwrap();
        assert_eq!(back.svm_gamma, Gamma::Value(0.5));
        assert!(serde_json::from_str::<ClassifierConfig>(r#"{"knn_kk":3}"#).is_err());
    }

    #[test]
    fn training_errors() {
        let (x, y) = two_clusters();
        let cfg = ClassifierConfig::default();
        let p = PreprocessParams::identity(1);
        assert_eq!(
            train(&cfg, &x, &vec![0; x.len()], &labels(&["a", "b"]), p.clone()).unwrap_err(),
            LearnerError::SingleClass
        );
        assert_eq!(
            train(&cfg, &x, &y, &labels(&["a", "b", "c"]), p.clone()).unwrap_err(),
            LearnerError::MissingClass("c".into())
        );
        let model = train(&cfg, &x, &y, &labels(&["a", "b"]), p).unwrap();
        assert_eq!(
            model.predict(&[vec![0.0, 1.0]]).unwrap_err(),
            LearnerError::DimensionMismatch {
                expected: 1,
                found: 2
            }
        );
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }
}
