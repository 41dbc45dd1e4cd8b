//! Evaluation records and their JSON, CSV and text renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::learners::ClassifierKind;
use crate::metrics::{ConfusionMatrix, RocPoint};
use crate::rfe::FeatureRanking;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub participant_id: String,
    pub truth: String,
    pub predicted: String,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub classifier: ClassifierKind,
    /// Set for two-class tasks; multiclass metrics are support-weighted.
    pub positive_class: Option<String>,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1_weighted: f64,
    pub roc_auc: Option<f64>,
    pub roc_points: Vec<RocPoint>,
    /// Metrics that hit a zero denominator (reported as 0) or could not be
    /// computed at all.
    pub undefined: Vec<String>,
    pub confusion: Option<ConfusionMatrix>,
    /// `confusion_table[true][predicted]` in class-label order.
    pub confusion_table: Vec<Vec<usize>>,
    pub n_test: usize,
    /// Solver convergence for iterative learners.
    pub converged: Option<bool>,
    pub predictions: Vec<Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCount {
    pub group: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub source_id: String,
    pub n_participants: usize,
    pub group_counts: Vec<GroupCount>,
    pub class_labels: Vec<String>,
    pub train_counts: Vec<usize>,
    pub test_counts: Vec<usize>,
    /// Training counts per class after oversampling.
    pub resampled_train_counts: Vec<usize>,
    pub n_features: usize,
    pub missing_cells: usize,
    pub constant_features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub pipeline_version: String,
    pub rng_scheme: String,
    pub task: String,
    pub dataset: DatasetSummary,
    pub evaluations: Vec<EvaluationReport>,
    pub ranking: Option<FeatureRanking>,
    pub config: Value,
}

fn cell(v: f64, undefined: bool, floor: Option<f64>) -> String {
    if undefined {
        return "undef".into();
    }
    match floor {
        Some(f) if v < f => format!("<{f:.2}"),
        _ => format!("{v:.2}"),
    }
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Metrics down, classifiers across.
    pub fn table(&self, low_score_floor: Option<f64>) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} ({}; {})",
            self.dataset.source_id,
            self.task,
            self.dataset
                .group_counts
                .iter()
                .map(|g| format!("{} {}", g.group, g.count))
                .collect::<Vec<_>>()
                .join(", ")
        );
        let _ = write!(out, "{:<14}", "Metric");
        for e in &self.evaluations {
            let _ = write!(out, "{:>8}", e.classifier.short_name());
        }
        out.push('\n');
        type Pick = fn(&EvaluationReport) -> (f64, bool);
        let rows: [(&str, Pick); 5] = [
            ("Accuracy", |e| {
                (e.accuracy, e.undefined.iter().any(|u| u == "accuracy"))
            }),
            ("Precision", |e| {
                (e.precision, e.undefined.iter().any(|u| u == "precision"))
            }),
            ("Recall", |e| {
                (e.recall, e.undefined.iter().any(|u| u == "recall"))
            }),
            ("F1 (weighted)", |e| (e.f1_weighted, false)),
            ("ROC-AUC", |e| {
                (e.roc_auc.unwrap_or(0.0), e.roc_auc.is_none())
            }),
        ];
        for (name, pick) in rows {
            let _ = write!(out, "{name:<14}");
            for e in &self.evaluations {
                let (v, undef) = pick(e);
                let _ = write!(out, "{:>8}", cell(v, undef, low_score_floor));
            }
            out.push('\n');
        }
        if let Some(r) = &self.ranking {
            let _ = writeln!(out, "\nTop features ({} elimination):", r.estimator);
            for f in r.order.iter().take(r.n_keep) {
                let _ = writeln!(out, "{:>4}  {}", f.rank, f.name);
            }
        }
        out
    }

    /// One row per classifier.
    pub fn metrics_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "classifier",
            "accuracy",
            "precision",
            "recall",
            "f1_weighted",
            "roc_auc",
            "undefined",
        ])
        .expect("in-memory write");
        for e in &self.evaluations {
            w.write_record([
                e.classifier.as_str().to_string(),
                e.accuracy.to_string(),
                e.precision.to_string(),
                e.recall.to_string(),
                e.f1_weighted.to_string(),
                e.roc_auc.map(|v| v.to_string()).unwrap_or_default(),
                e.undefined.join(";"),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// ROC points of every two-class evaluation.
    pub fn roc_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["classifier", "fpr", "tpr", "threshold"])
            .expect("in-memory write");
        for e in &self.evaluations {
            for p in &e.roc_points {
                w.write_record([
                    e.classifier.as_str().to_string(),
                    p.fpr.to_string(),
                    p.tpr.to_string(),
                    p.threshold.map(|t| t.to_string()).unwrap_or_default(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_annotation() {
        assert_eq!(cell(0.35, false, Some(0.4)), "<0.40");
        assert_eq!(cell(0.75, false, Some(0.4)), "0.75");
        assert_eq!(cell(0.35, false, None), "0.35");
        assert_eq!(cell(0.0, true, Some(0.4)), "undef");
    }
}
