//! Recursive feature elimination.
//!
//! Each round refits the estimator on the surviving columns and drops the
//! `step` least important, the higher column index going first on equal
//! importance. Survivors are ranked `1..=n_keep` by their final importance;
//! features dropped together share the rank `n_keep + 1 + (number dropped
//! in later rounds)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{train, ClassifierConfig, ClassifierKind, LearnerError};
use crate::preprocess::{
    apply_standardization, fit_standardization, PreprocessError, PreprocessParams,
};

#[derive(Debug, Error, PartialEq)]
pub enum RfeError {
    #[error("n_keep = {n_keep} must lie in 1..={d}")]
    NKeepOutOfRange { n_keep: usize, d: usize },
    #[error("step must be >= 1")]
    ZeroStep,
    #[error("{0} has no feature importances; use logistic_regression or random_forest")]
    UnsupportedEstimator(ClassifierKind),
    #[error("{names} names for {d} columns")]
    NameMismatch { names: usize, d: usize },
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub name: String,
    pub rank: usize,
    /// Importance in the fit that eliminated the feature (final fit for survivors).
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub estimator: ClassifierKind,
    pub n_keep: usize,
    pub step: usize,
    /// Sorted by rank; equal ranks by column order.
    pub order: Vec<RankedFeature>,
}

impl FeatureRanking {
    pub fn selected(&self) -> Vec<&str> {
        self.order
            .iter()
            .filter(|f| f.rank <= self.n_keep)
            .map(|f| f.name.as_str())
            .collect()
    }

    pub fn top(&self, k: usize) -> Vec<&str> {
        self.order.iter().take(k).map(|f| f.name.as_str()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "rank", "score"])
            .expect("in-memory write");
        for f in &self.order {
            w.write_record([f.name.clone(), f.rank.to_string(), f.score.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeOptions {
    pub estimator: ClassifierConfig,
    pub n_keep: usize,
    pub step: usize,
}

impl RfeOptions {
    pub fn new(kind: ClassifierKind, n_keep: usize, seed: u64) -> Self {
        let mut estimator = ClassifierConfig::new(kind);
        estimator.seed = seed;
        Self {
            estimator,
            n_keep,
            step: 1,
        }
    }
}

fn importances(
    opts: &RfeOptions,
    x: &[Vec<f64>],
    y: &[usize],
    class_labels: &[String],
    cols: &[usize],
) -> Result<Vec<f64>, RfeError> {
    let sub: Vec<Vec<f64>> = x
        .iter()
        .map(|r| cols.iter().map(|&j| r[j]).collect())
        .collect();
    let model = train(
        &opts.estimator,
        &sub,
        y,
        class_labels,
        PreprocessParams::identity(cols.len()),
    )?;
    Ok(model.feature_importances()?)
}

/// Ranks the columns of `x` (encoded, imputed, unscaled). LR is fitted on
/// z-scored columns; the forest on raw values.
pub fn rfe_rank(
    x: &[Vec<f64>],
    y: &[usize],
    class_labels: &[String],
    names: &[String],
    opts: &RfeOptions,
) -> Result<FeatureRanking, RfeError> {
    let kind = opts.estimator.kind;
    if !matches!(
        kind,
        ClassifierKind::LogisticRegression | ClassifierKind::RandomForest
    ) {
        return Err(RfeError::UnsupportedEstimator(kind));
    }
    let d = names.len();
    if let Some(r) = x.iter().find(|r| r.len() != d) {
        return Err(RfeError::NameMismatch {
            names: d,
            d: r.len(),
        });
    }
    if opts.n_keep == 0 || opts.n_keep > d {
        return Err(RfeError::NKeepOutOfRange {
            n_keep: opts.n_keep,
            d,
        });
    }
    if opts.step == 0 {
        return Err(RfeError::ZeroStep);
    }
    let scaled;
    let x = if kind == ClassifierKind::LogisticRegression {
        scaled = apply_standardization(x, &fit_standardization(x)?);
        &scaled[..]
    } else {
        x
    };

    let mut alive: Vec<usize> = (0..d).collect();
    // (round, column, score) of each elimination.
    let mut dropped: Vec<(usize, usize, f64)> = Vec::new();
    let mut round = 0;
    let final_scores = loop {
        let imp = importances(opts, x, y, class_labels, &alive)?;
        if alive.len() == opts.n_keep {
            break imp;
        }
        let mut order: Vec<usize> = (0..alive.len()).collect();
        order.sort_by(|&a, &b| imp[a].total_cmp(&imp[b]).then(alive[b].cmp(&alive[a])));
        let n_drop = opts.step.min(alive.len() - opts.n_keep);
        let mut gone: Vec<usize> = order[..n_drop].to_vec();
        for &p in &gone {
            dropped.push((round, alive[p], imp[p]));
        }
        gone.sort_unstable();
        for p in gone.into_iter().rev() {
            alive.remove(p);
        }
        round += 1;
    };

    let mut order: Vec<RankedFeature> = Vec::with_capacity(d);
    let mut survivors: Vec<(usize, f64)> = alive.iter().copied().zip(final_scores).collect();
    survivors.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (r, (col, score)) in survivors.into_iter().enumerate() {
        order.push(RankedFeature {
            name: names[col].clone(),
            rank: r + 1,
            score,
        });
    }
    let mut eliminated: Vec<(usize, usize, f64)> = dropped
        .iter()
        .map(|&(rd, col, score)| {
            let later = dropped.iter().filter(|e| e.0 > rd).count();
            (opts.n_keep + 1 + later, col, score)
        })
        .collect();
    eliminated.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    for (rank, col, score) in eliminated {
        order.push(RankedFeature {
            name: names[col].clone(),
            rank,
            score,
        });
    }
    Ok(FeatureRanking {
        estimator: kind,
        n_keep: opts.n_keep,
        step: opts.step,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededStream;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("f{j}")).collect()
    }

    fn labels() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    fn label_copy_instance(n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = SeededStream::new(11, "test");
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let x = y
            .iter()
            .map(|&c| vec![c as f64, rng.normal(), rng.normal()])
            .collect();
        (x, y)
    }

    #[test]
    fn label_copy_survives() {
        let (x, y) = label_copy_instance(40);
        let r = rfe_rank(
            &x,
            &y,
            &labels(),
            &names(3),
            &RfeOptions::new(ClassifierKind::LogisticRegression, 1, 0),
        )
        .unwrap();
        assert_eq!(r.selected(), vec!["f0"]);
        let mut ranks: Vec<usize> = r.order.iter().map(|f| f.rank).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, vec![1, 2, 3]);
    }

    #[test]
    fn keep_all_is_one_fit() {
        let (x, y) = label_copy_instance(40);
        let r = rfe_rank(
            &x,
            &y,
            &labels(),
            &names(3),
            &RfeOptions::new(ClassifierKind::RandomForest, 3, 0),
        )
        .unwrap();
        assert_eq!(r.order[0].name, "f0");
        assert!(r.order.iter().all(|f| f.rank <= 3));
    }

    #[test]
    fn step_two_shares_ranks() {
        let (x, y) = label_copy_instance(40);
        let mut opts = RfeOptions::new(ClassifierKind::LogisticRegression, 1, 0);
        opts.step = 2;
        let r = rfe_rank(&x, &y, &labels(), &names(3), &opts).unwrap();
        let ranks: Vec<usize> = r.order.iter().map(|f| f.rank).collect();
        assert_eq!(ranks, vec![1, 2, 2]);
    }

    #[test]
    fn rejects_bad_requests() {
        let (x, y) = label_copy_instance(10);
        let n = names(3);
        assert_eq!(
            rfe_rank(
                &x,
                &y,
                &labels(),
                &n,
                &RfeOptions::new(ClassifierKind::Knn, 1, 0)
            )
            .unwrap_err(),
            RfeError::UnsupportedEstimator(ClassifierKind::Knn)
        );
        assert_eq!(
            rfe_rank(
                &x,
                &y,
                &labels(),
                &n,
                &RfeOptions::new(ClassifierKind::LogisticRegression, 4, 0)
            )
            .unwrap_err(),
            RfeError::NKeepOutOfRange { n_keep: 4, d: 3 }
        );
    }
}
