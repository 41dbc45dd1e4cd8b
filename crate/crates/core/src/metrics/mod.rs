//! Confusion counts, precision / recall / accuracy / F1 and ROC-AUC.
//!
//! Labels are class indices. A ratio whose denominator is zero is reported
//! as 0 and named in [`BinaryMetrics::undefined`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{truth} true labels but {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("positive class {positive} is outside the {n_classes} classes")]
    UnknownPositive { positive: usize, n_classes: usize },
    #[error("AUC undefined: only one class present in the true labels")]
    SingleClass,
    #[error("class {0} is absent from the true labels")]
    MissingClass(usize),
    #[error("score rows have {found} entries, expected {expected}")]
    ScoreWidth { expected: usize, found: usize },
    #[error("multiclass AUC needs at least 3 classes, got {0}")]
    TooFewClasses(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn check_lengths<A, B>(t: &[A], p: &[B]) -> Result<(), MetricsError> {
    if t.len() != p.len() {
        return Err(MetricsError::LengthMismatch {
            truth: t.len(),
            pred: p.len(),
        });
    }
    if t.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// Binary counts with `positive` as the positive class and every other
/// class negative. `n_classes` bounds the label universe.
pub fn confusion(
    y_true: &[usize],
    y_pred: &[usize],
    positive: usize,
    n_classes: usize,
) -> Result<ConfusionMatrix, MetricsError> {
    check_lengths(y_true, y_pred)?;
    if positive >= n_classes {
        return Err(MetricsError::UnknownPositive {
            positive,
            n_classes,
        });
    }
    let mut cm = ConfusionMatrix {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == positive, p == positive) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// `table[t][p]` counts of true class `t` predicted as `p`.
pub fn confusion_table(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<Vec<Vec<usize>>, MetricsError> {
    check_lengths(y_true, y_pred)?;
    let mut table = vec![vec![0; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let bad = t.max(p);
        if bad >= n_classes {
            return Err(MetricsError::UnknownPositive {
                positive: bad,
                n_classes,
            });
        }
        table[t][p] += 1;
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    /// Names of the metrics whose denominator was zero.
    pub undefined: Vec<String>,
}

fn ratio(num: f64, den: f64, name: &str, undefined: &mut Vec<String>) -> f64 {
    if den == 0.0 {
        undefined.push(name.to_string());
        0.0
    } else {
        num / den
    }
}

pub fn binary_metrics(cm: &ConfusionMatrix) -> BinaryMetrics {
    let mut undefined = Vec::new();
    let (tp, fp, tn, fn_) = (cm.tp as f64, cm.fp as f64, cm.tn as f64, cm.fn_ as f64);
    let precision = ratio(tp, tp + fp, "precision", &mut undefined);
    let recall = ratio(tp, tp + fn_, "recall", &mut undefined);
    let accuracy = ratio(tp + tn, tp + tn + fp + fn_, "accuracy", &mut undefined);
    let f1 = ratio(
        2.0 * precision * recall,
        precision + recall,
        "f1",
        &mut undefined,
    );
    BinaryMetrics {
        precision,
        recall,
        accuracy,
        f1,
        undefined,
    }
}

/// F1 of each class against the rest (0 when undefined).
pub fn per_class_f1(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<Vec<f64>, MetricsError> {
    (0..n_classes)
        .map(|c| Ok(binary_metrics(&confusion(y_true, y_pred, c, n_classes)?).f1))
        .collect()
}

fn support(y_true: &[usize], n_classes: usize) -> Vec<usize> {
    let mut s = vec![0; n_classes];
    for &t in y_true {
        if t < n_classes {
            s[t] += 1;
        }
    }
    s
}

/// Per-class metric averaged with weights `support / n`.
fn weighted<F>(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
    pick: F,
) -> Result<f64, MetricsError>
where
    F: Fn(&BinaryMetrics) -> f64,
{
    check_lengths(y_true, y_pred)?;
    let s = support(y_true, n_classes);
    let n = y_true.len() as f64;
    let mut acc = 0.0;
    for (c, &sc) in s.iter().enumerate() {
        if sc > 0 {
            acc += sc as f64 / n * pick(&binary_metrics(&confusion(y_true, y_pred, c, n_classes)?));
        }
    }
    Ok(acc)
}

pub fn f1_weighted(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<f64, MetricsError> {
    weighted(y_true, y_pred, n_classes, |m| m.f1)
}

pub fn precision_weighted(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<f64, MetricsError> {
    weighted(y_true, y_pred, n_classes, |m| m.precision)
}

pub fn recall_weighted(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<f64, MetricsError> {
    weighted(y_true, y_pred, n_classes, |m| m.recall)
}

/// Fraction of exact matches.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64, MetricsError> {
    check_lengths(y_true, y_pred)?;
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Score at or above which rows are called positive; `None` at the origin.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub auc: f64,
    pub points: Vec<RocPoint>,
}

/// ROC curve over every distinct score (descending, ties grouped) and its
/// trapezoidal area. `is_positive[i]` marks the positive rows.
pub fn roc_auc(is_positive: &[bool], scores: &[f64]) -> Result<RocCurve, MetricsError> {
    check_lengths(is_positive, scores)?;
    let n_pos = is_positive.iter().filter(|&&p| p).count();
    let n_neg = is_positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: None,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area2 = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if is_positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        // Twice the trapezoid, in count units, so the sum is exact.
        area2 += ((fp - fp0) * (tp + tp0)) as f64;
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            threshold: Some(s),
        });
    }
    Ok(RocCurve {
        auc: area2 / (2.0 * n_pos as f64 * n_neg as f64),
        points,
    })
}

/// Pairwise rank statistic: share of (positive, negative) pairs where the
/// positive scores higher, ties counting one half.
pub fn rank_auc(is_positive: &[bool], scores: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(is_positive, scores)?;
    let pos: Vec<f64> = scores
        .iter()
        .zip(is_positive)
        .filter(|(_, &p)| p)
        .map(|(s, _)| *s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(is_positive)
        .filter(|(_, &p)| !p)
        .map(|(s, _)| *s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(MetricsError::SingleClass);
    }
    let mut twice = 0u64;
    for p in &pos {
        for q in &neg {
            twice += match p.partial_cmp(q) {
                Some(std::cmp::Ordering::Greater) => 2,
                Some(std::cmp::Ordering::Equal) => 1,
                _ => 0,
            };
        }
    }
    Ok(twice as f64 / (2.0 * pos.len() as f64 * neg.len() as f64))
}

/// Support-weighted one-vs-rest AUC; `scores[i][c]` scores row `i` for class `c`.
pub fn roc_auc_multiclass(
    y_true: &[usize],
    scores: &[Vec<f64>],
    n_classes: usize,
) -> Result<f64, MetricsError> {
    check_lengths(y_true, scores)?;
    if n_classes < 3 {
        return Err(MetricsError::TooFewClasses(n_classes));
    }
    if let Some(r) = scores.iter().find(|r| r.len() != n_classes) {
        return Err(MetricsError::ScoreWidth {
            expected: n_classes,
            found: r.len(),
        });
    }
    let s = support(y_true, n_classes);
    if let Some(c) = s.iter().position(|&v| v == 0) {
        return Err(MetricsError::MissingClass(c));
    }
    let n = y_true.len() as f64;
    let mut acc = 0.0;
    for c in 0..n_classes {
        let pos: Vec<bool> = y_true.iter().map(|&t| t == c).collect();
        let col: Vec<f64> = scores.iter().map(|r| r[c]).collect();
        acc += s[c] as f64 / n * roc_auc(&pos, &col)?.auc;
    }
    Ok(acc)
}
