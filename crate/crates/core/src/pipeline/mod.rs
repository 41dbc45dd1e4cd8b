//! Experiment orchestration: ingest, parse, features, train, rfe, evaluate.
//!
//! Each stage is a function from the previous stage's artifact to its own,
//! and every artifact round-trips through JSON without loss, so running the
//! stages one at a time from disk gives the same report as [`run_experiment`].
//!
//! Artifacts written under the output directory:
//!
//! | stage    | files                                         |
//! |----------|-----------------------------------------------|
//! | ingest   | `corpus.json`                                 |
//! | parse    | `parsed.json`                                 |
//! | features | `features.json`, `features.csv`               |
//! | train    | `split.json`, `models/<kind>.json`            |
//! | rfe      | `ranking.json`, `ranking.csv`                 |
//! | evaluate | `report.json`, `report.txt`, `metrics.csv`, `roc.csv` |
//!
//! On failure the files written so far are moved to `quarantine/` next to
//! an `error.json` naming the stage.

mod config;
mod report;

pub use config::{
    validate_config, ConfigError, CorpusConfig, CorpusMode, ExperimentConfig, Overrides,
    ParserConfig, ReportConfig, ReportFormat, RfeConfig, SplitConfig, CACHE_DIR_ENV,
};
pub use report::{DatasetSummary, EvaluationReport, ExperimentReport, GroupCount, Prediction};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chat::{ParseOptions, Transcript};
use crate::corpus::RemoteSource;
use crate::corpus::{load_local_corpus, CorpusError, Group, ParticipantRecord, RawCorpus};
use crate::features::{
    build_feature_matrix_for, parse_sessions, FeatureError, FeatureMatrix, FeatureOptions,
    FeatureSchema,
};
use crate::learners::{self, ClassifierKind, LearnerError, ModelParameters, TrainedModel};
use crate::metrics::{self, MetricsError};
use crate::preprocess::{
    fit_standardization, smote_resample, stratified_split, PreprocessError, PreprocessParams,
};
use crate::rfe::{rfe_rank, FeatureRanking, RfeError, RfeOptions};
use crate::rng::RNG_SCHEME;

pub const PIPELINE_VERSION: &str = concat!("chatscreen ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ingest,
    Parse,
    Features,
    Train,
    Rfe,
    Evaluate,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Parse => "parse",
            Stage::Features => "features",
            Stage::Train => "train",
            Stage::Rfe => "rfe",
            Stage::Evaluate => "evaluate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Rfe(#[from] RfeError),
    #[error("{path}: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error("{0}")]
    Data(String),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage} stage failed{}: {source}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    Stage {
        stage: Stage,
        context: Option<String>,
        #[source]
        source: StageError,
    },
}

fn numeric_learner(e: &LearnerError) -> bool {
    matches!(
        e,
        LearnerError::UndefinedGamma | LearnerError::ZeroVariance | LearnerError::NonFinite { .. }
    )
}

impl PipelineError {
    fn at(stage: Stage, context: Option<String>) -> impl FnOnce(StageError) -> PipelineError {
        move |source| PipelineError::Stage {
            stage,
            context,
            source,
        }
    }

    /// 2 for configuration problems, 4 for numeric failures, 3 for data.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Stage { source, .. } => match source {
                StageError::Learner(e) if numeric_learner(e) => 4,
                StageError::Rfe(RfeError::Learner(e)) if numeric_learner(e) => 4,
                StageError::Metrics(_) => 4,
                _ => 3,
            },
        }
    }

    pub fn stage(&self) -> Stage {
        match self {
            PipelineError::Config(_) => Stage::Config,
            PipelineError::Stage { stage, .. } => *stage,
        }
    }
}

fn stage_err<E: Into<StageError>>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        context: None,
        source: e.into(),
    }
}

/// Parsed transcripts with the participant records they belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedCorpus {
    pub source_id: String,
    pub participants: Vec<ParticipantRecord>,
    pub transcripts: BTreeMap<String, Vec<Transcript>>,
}

/// Split membership and class counts shared by training and evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub seed: u64,
    pub test_fraction: f64,
    pub class_labels: Vec<String>,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub train_counts: Vec<usize>,
    pub test_counts: Vec<usize>,
    pub resampled_train_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub split: SplitRecord,
    pub models: Vec<TrainedModel>,
}

pub fn ingest(cfg: &ExperimentConfig) -> Result<RawCorpus, PipelineError> {
    let c = &cfg.corpus;
    let corpus = match c.mode {
        CorpusMode::Local => load_local_corpus(c.location.as_deref().expect("validated")),
        CorpusMode::Remote => RemoteSource::new(c.base_url.as_deref().expect("validated"))
            .with_endpoints(c.endpoints.clone())
            .fetch(c.name.as_deref().expect("validated"), &c.cache_dir),
    }
    .map_err(stage_err(Stage::Ingest))?;
    log::info!(
        "ingested {} participants from {}",
        corpus.participants.len(),
        corpus.source_id
    );
    Ok(corpus)
}

pub fn parse(cfg: &ExperimentConfig, corpus: &RawCorpus) -> Result<ParsedCorpus, PipelineError> {
    let opts = ParseOptions {
        undeclared_speaker: cfg.parser.undeclared_speaker,
    };
    let transcripts = parse_sessions(corpus, &opts).map_err(stage_err(Stage::Parse))?;
    Ok(ParsedCorpus {
        source_id: corpus.source_id.clone(),
        participants: corpus.participants.clone(),
        transcripts,
    })
}

pub fn features(
    cfg: &ExperimentConfig,
    parsed: &ParsedCorpus,
) -> Result<FeatureMatrix, PipelineError> {
    let schema = FeatureSchema::from_names(&cfg.schema).map_err(stage_err(Stage::Features))?;
    let opts = FeatureOptions {
        child_code: cfg.child_speaker.clone(),
        compound_rule: cfg.parser.compound_rule,
    };
    let m = build_feature_matrix_for(&parsed.participants, &parsed.transcripts, &schema, &opts)
        .map_err(stage_err(Stage::Features))?;
    Ok(match &cfg.corpus.groups {
        Some(g) => m.filter_groups(g),
        None => m,
    })
}

/// Groups present in `m`, in group order, and each row's class index.
pub fn class_encoding(m: &FeatureMatrix) -> (Vec<Group>, Vec<usize>) {
    let classes: Vec<Group> = Group::ALL
        .into_iter()
        .filter(|g| m.labels.contains(g))
        .collect();
    let y = m
        .labels
        .iter()
        .map(|g| classes.iter().position(|c| c == g).expect("present"))
        .collect();
    (classes, y)
}

fn counts(y: &[usize], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    for &v in y {
        c[v] += 1;
    }
    c
}

fn rows_by_id(
    m: &FeatureMatrix,
    ids: &[String],
    stage: Stage,
) -> Result<Vec<usize>, PipelineError> {
    ids.iter()
        .map(|id| {
            m.participant_ids
                .iter()
                .position(|p| p == id)
                .ok_or_else(|| {
                    stage_err(stage)(StageError::Data(format!(
                        "participant `{id}` is not in the feature matrix"
                    )))
                })
        })
        .collect()
}

/// Split, fit preprocessing on the training rows, oversample, fit every
/// configured classifier.
pub fn train(cfg: &ExperimentConfig, m: &FeatureMatrix) -> Result<TrainOutput, PipelineError> {
    let st = Stage::Train;
    let (classes, y) = class_encoding(m);
    if classes.len() < 2 {
        return Err(stage_err(st)(StageError::Data(
            "fewer than two groups in the data".into(),
        )));
    }
    let class_labels: Vec<String> = classes.iter().map(|g| g.as_str().to_string()).collect();
    let (train_idx, test_idx) =
        stratified_split(&y, cfg.split.test_fraction, cfg.split.seed).map_err(stage_err(st))?;
    let train_m = m.select_rows(&train_idx);
    let y_train: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
    let params = PreprocessParams::fit(&train_m).map_err(stage_err(st))?;
    let x_train = params.transform(&train_m).map_err(stage_err(st))?;
    let scaler = fit_standardization(&x_train).map_err(stage_err(st))?;
    let resampled = smote_resample(&x_train, &y_train, &cfg.smote).map_err(stage_err(st))?;

    let mut models = Vec::with_capacity(cfg.classifiers.len());
    for c in &cfg.classifiers {
        let p = params
            .clone()
            .with_standardization(c.kind.wants_standardized().then(|| scaler.clone()));
        let model = learners::train(c, &resampled.x, &resampled.y, &class_labels, p)
            .map_err(|e| PipelineError::at(st, Some(c.kind.to_string()))(e.into()))?;
        models.push(model);
    }
    let k = classes.len();
    let split = SplitRecord {
        seed: cfg.split.seed,
        test_fraction: cfg.split.test_fraction,
        class_labels,
        train_ids: train_idx
            .iter()
            .map(|&i| m.participant_ids[i].clone())
            .collect(),
        test_ids: test_idx
            .iter()
            .map(|&i| m.participant_ids[i].clone())
            .collect(),
        train_counts: counts(&y_train, k),
        test_counts: counts(&test_idx.iter().map(|&i| y[i]).collect::<Vec<_>>(), k),
        resampled_train_counts: counts(&resampled.y, k),
    };
    Ok(TrainOutput { split, models })
}

/// RFE over all rows, encoded and imputed with parameters fitted on them.
pub fn rank(cfg: &ExperimentConfig, m: &FeatureMatrix) -> Result<FeatureRanking, PipelineError> {
    let st = Stage::Rfe;
    let (classes, y) = class_encoding(m);
    let labels: Vec<String> = classes.iter().map(|g| g.as_str().to_string()).collect();
    let params = PreprocessParams::fit(m).map_err(stage_err(st))?;
    let x = params.transform(m).map_err(stage_err(st))?;
    let mut opts = RfeOptions::new(cfg.rfe.estimator, cfg.rfe.n_keep, cfg.seed);
    opts.step = cfg.rfe.step;
    rfe_rank(&x, &y, &labels, &m.schema.names, &opts).map_err(stage_err(st))
}

fn evaluate_model(
    model: &TrainedModel,
    test: &FeatureMatrix,
    y: &[usize],
    binary: bool,
) -> Result<EvaluationReport, StageError> {
    let k = model.class_labels.len();
    let x = model.transform(test)?;
    let scores = model.predict_scores(&x)?;
    let pred: Vec<usize> = scores.iter().map(|s| learners::argmax(s)).collect();
    let mut undefined = Vec::new();
    let accuracy = metrics::accuracy(y, &pred)?;
    let f1_weighted = metrics::f1_weighted(y, &pred, k)?;
    let (precision, recall, confusion, roc_auc, roc_points, positive_class);
    if binary {
        let pos = 1;
        let cm = metrics::confusion(y, &pred, pos, k)?;
        let bm = metrics::binary_metrics(&cm);
        undefined.extend(bm.undefined.iter().filter(|u| *u != "f1").cloned());
        precision = bm.precision;
        recall = bm.recall;
        confusion = Some(cm);
        positive_class = Some(model.class_labels[pos].clone());
        let is_pos: Vec<bool> = y.iter().map(|&c| c == pos).collect();
        let col: Vec<f64> = scores.iter().map(|s| s[pos]).collect();
        match metrics::roc_auc(&is_pos, &col) {
            Ok(curve) => {
                roc_auc = Some(curve.auc);
                roc_points = curve.points;
            }
            Err(MetricsError::SingleClass) => {
                undefined.push("roc_auc".into());
                roc_auc = None;
                roc_points = Vec::new();
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        precision = metrics::precision_weighted(y, &pred, k)?;
        recall = metrics::recall_weighted(y, &pred, k)?;
        confusion = None;
        positive_class = None;
        roc_points = Vec::new();
        roc_auc = match metrics::roc_auc_multiclass(y, &scores, k) {
            Ok(v) => Some(v),
            Err(MetricsError::MissingClass(_)) => {
                undefined.push("roc_auc".into());
                None
            }
            Err(e) => return Err(e.into()),
        };
    }
    let converged = match &model.parameters {
        ModelParameters::LogisticRegression(m) => Some(m.converged()),
        ModelParameters::SvmRbf(m) => Some(m.machines.iter().all(|s| s.converged)),
        _ => None,
    };
    let predictions = (0..y.len())
        .map(|i| Prediction {
            participant_id: test.participant_ids[i].clone(),
            truth: model.class_labels[y[i]].clone(),
            predicted: model.class_labels[pred[i]].clone(),
            scores: scores[i].clone(),
        })
        .collect();
    Ok(EvaluationReport {
        classifier: model.kind,
        positive_class,
        accuracy,
        precision,
        recall,
        f1_weighted,
        roc_auc,
        roc_points,
        undefined,
        confusion,
        confusion_table: metrics::confusion_table(y, &pred, k)?,
        n_test: y.len(),
        converged,
        predictions,
    })
}

/// Scores every model on the held-out rows and assembles the report.
pub fn evaluate(
    cfg: &ExperimentConfig,
    m: &FeatureMatrix,
    split: &SplitRecord,
    models: &[TrainedModel],
    ranking: Option<FeatureRanking>,
    source_id: &str,
) -> Result<ExperimentReport, PipelineError> {
    let st = Stage::Evaluate;
    let (classes, y_all) = class_encoding(m);
    let labels: Vec<String> = classes.iter().map(|g| g.as_str().to_string()).collect();
    if labels != split.class_labels {
        return Err(stage_err(st)(StageError::Data(format!(
            "split classes {:?} differ from the feature matrix classes {:?}",
            split.class_labels, labels
        ))));
    }
    let test_rows = rows_by_id(m, &split.test_ids, st)?;
    let test = m.select_rows(&test_rows);
    let y: Vec<usize> = test_rows.iter().map(|&i| y_all[i]).collect();
    let binary = labels.len() == 2;
    let mut evaluations = Vec::with_capacity(models.len());
    for model in models {
        if model.class_labels != labels {
            return Err(PipelineError::at(st, Some(model.kind.to_string()))(
                StageError::Data("model classes differ from the data".into()),
            ));
        }
        evaluations.push(
            evaluate_model(model, &test, &y, binary)
                .map_err(|e| PipelineError::at(st, Some(model.kind.to_string()))(e))?,
        );
    }
    let constant_features = models
        .iter()
        .find(|md| md.preprocess.standardize_mu_sigma.is_some())
        .map(|md| {
            md.preprocess
                .constant_features()
                .into_iter()
                .map(String::from)
                .collect()
        })
        .unwrap_or_default();
    let dataset = DatasetSummary {
        source_id: source_id.to_string(),
        n_participants: m.n_rows(),
        group_counts: classes
            .iter()
            .map(|g| GroupCount {
                group: g.as_str().into(),
                count: m.labels.iter().filter(|l| *l == g).count(),
            })
            .collect(),
        class_labels: labels,
        train_counts: split.train_counts.clone(),
        test_counts: split.test_counts.clone(),
        resampled_train_counts: split.resampled_train_counts.clone(),
        n_features: m.n_cols(),
        missing_cells: m.missing.iter().flatten().filter(|b| **b).count(),
        constant_features,
    };
    Ok(ExperimentReport {
        pipeline_version: PIPELINE_VERSION.into(),
        rng_scheme: RNG_SCHEME.into(),
        task: if binary { "binary" } else { "multiclass" }.into(),
        dataset,
        evaluations,
        ranking,
        config: cfg.echo(),
    })
}

/// Tracks written files so a failed run can be quarantined.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(
        &mut self,
        stage: Stage,
        rel: &str,
        contents: &str,
    ) -> Result<PathBuf, PipelineError> {
        let path = self.dir.join(rel);
        let io = |e: std::io::Error, p: &Path| {
            stage_err(stage)(StageError::Artifact {
                path: p.to_path_buf(),
                message: e.to_string(),
            })
        };
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io(e, parent))?;
        }
        std::fs::write(&path, contents).map_err(|e| io(e, &path))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Moves everything written so far under `quarantine/` and records the error.
    pub fn quarantine(&self, err: &PipelineError) -> std::io::Result<PathBuf> {
        let q = self.dir.join("quarantine");
        std::fs::create_dir_all(&q)?;
        for p in &self.written {
            if let Ok(rel) = p.strip_prefix(&self.dir) {
                let target = q.join(rel);
                if let Some(parent) = target.parent() {
                    std::fs::create_dir_all(parent)?;
                }
                if p.exists() {
                    std::fs::rename(p, &target)?;
                }
            }
        }
        let record = serde_json::json!({
            "stage": err.stage(),
            "exit_code": err.exit_code(),
            "error": err.to_string(),
        });
        std::fs::write(
            q.join("error.json"),
            serde_json::to_string_pretty(&record).expect("json"),
        )?;
        Ok(q)
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serializes");
    s.push('\n');
    s
}

/// Reads a JSON artifact written by an earlier stage.
pub fn read_artifact<T: for<'de> Deserialize<'de>>(
    stage: Stage,
    path: &Path,
) -> Result<T, PipelineError> {
    let err = |message: String| {
        stage_err(stage)(StageError::Artifact {
            path: path.to_path_buf(),
            message,
        })
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| err(e.to_string()))
}

pub fn read_corpus(path: &Path) -> Result<RawCorpus, PipelineError> {
    let c: RawCorpus = read_artifact(Stage::Parse, path)?;
    c.validate().map_err(stage_err(Stage::Parse))?;
    Ok(c)
}

pub fn read_features(stage: Stage, path: &Path) -> Result<FeatureMatrix, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        stage_err(stage)(StageError::Artifact {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    })?;
    FeatureMatrix::from_json(&text).map_err(stage_err(stage))
}

pub fn model_path(kind: ClassifierKind) -> String {
    format!("models/{}.json", kind.as_str())
}

pub fn read_models(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<TrainedModel>, PipelineError> {
    cfg.classifiers
        .iter()
        .map(|c| {
            let path = dir.join(model_path(c.kind));
            let text = std::fs::read_to_string(&path).map_err(|e| {
                stage_err(Stage::Evaluate)(StageError::Artifact {
                    path: path.clone(),
                    message: e.to_string(),
                })
            })?;
            TrainedModel::from_json(&text)
                .map_err(|e| PipelineError::at(Stage::Evaluate, Some(c.kind.to_string()))(e.into()))
        })
        .collect()
}

pub fn write_corpus(out: &mut Outputs, c: &RawCorpus) -> Result<(), PipelineError> {
    out.write(Stage::Ingest, "corpus.json", &to_json(c))
        .map(drop)
}

pub fn write_parsed(out: &mut Outputs, p: &ParsedCorpus) -> Result<(), PipelineError> {
    out.write(Stage::Parse, "parsed.json", &to_json(p))
        .map(drop)
}

pub fn write_features(out: &mut Outputs, m: &FeatureMatrix) -> Result<(), PipelineError> {
    out.write(Stage::Features, "features.json", &to_json(m))?;
    out.write(Stage::Features, "features.csv", &m.to_csv())
        .map(drop)
}

pub fn write_training(out: &mut Outputs, t: &TrainOutput) -> Result<(), PipelineError> {
    out.write(Stage::Train, "split.json", &to_json(&t.split))?;
    for m in &t.models {
        out.write(Stage::Train, &model_path(m.kind), &to_json(m))?;
    }
    Ok(())
}

pub fn write_ranking(out: &mut Outputs, r: &FeatureRanking) -> Result<(), PipelineError> {
    out.write(Stage::Rfe, "ranking.json", &to_json(r))?;
    out.write(Stage::Rfe, "ranking.csv", &r.to_csv()).map(drop)
}

pub fn write_report(
    out: &mut Outputs,
    cfg: &ExperimentConfig,
    r: &ExperimentReport,
) -> Result<(), PipelineError> {
    if cfg.wants(ReportFormat::Json) {
        out.write(Stage::Evaluate, "report.json", &r.to_json())?;
    }
    if cfg.wants(ReportFormat::Table) {
        out.write(
            Stage::Evaluate,
            "report.txt",
            &r.table(cfg.report.low_score_floor),
        )?;
    }
    if cfg.wants(ReportFormat::Csv) {
        out.write(Stage::Evaluate, "metrics.csv", &r.metrics_csv())?;
        out.write(Stage::Evaluate, "roc.csv", &r.roc_csv())?;
    }
    Ok(())
}

fn run_stages(
    cfg: &ExperimentConfig,
    out: &mut Outputs,
) -> Result<ExperimentReport, PipelineError> {
    let corpus = ingest(cfg)?;
    write_corpus(out, &corpus)?;
    let parsed = parse(cfg, &corpus)?;
    write_parsed(out, &parsed)?;
    let m = features(cfg, &parsed)?;
    write_features(out, &m)?;
    let trained = train(cfg, &m)?;
    write_training(out, &trained)?;
    let ranking = rank(cfg, &m)?;
    write_ranking(out, &ranking)?;
    let report = evaluate(
        cfg,
        &m,
        &trained.split,
        &trained.models,
        Some(ranking),
        &corpus.source_id,
    )?;
    write_report(out, cfg, &report)?;
    Ok(report)
}

/// Every stage in order, writing all artifacts to the configured output
/// directory; on failure partial outputs are quarantined.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, PipelineError> {
    let mut out = Outputs::new(cfg.output_dir());
    run_stages(cfg, &mut out).inspect_err(|e| {
        if let Err(q) = out.quarantine(e) {
            log::error!("could not quarantine partial outputs: {q}");
        }
    })
}
