//! Experiment configuration: strict JSON with recorded defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::chat::{CompoundRule, SpeakerPolicy};
use crate::corpus::EndpointMap;
use crate::corpus::Group;
use crate::features::FeatureSchema;
use crate::learners::{ClassifierConfig, ClassifierKind};
use crate::preprocess::SmoteConfig;

pub const CACHE_DIR_ENV: &str = "CHATSCREEN_CACHE_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Syntax(String),
    #[error("`{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusMode {
    Local,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub mode: CorpusMode,
    /// Fixture directory (local mode).
    pub location: Option<PathBuf>,
    /// Corpus name substituted into endpoint paths (remote mode).
    pub name: Option<String>,
    pub base_url: Option<String>,
    pub endpoints: EndpointMap,
    pub cache_dir: PathBuf,
    /// Groups kept for modelling; `None` keeps all.
    pub groups: Option<Vec<Group>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParserConfig {
    pub undeclared_speaker: SpeakerPolicy,
    pub compound_rule: CompoundRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeConfig {
    pub estimator: ClassifierKind,
    pub n_keep: usize,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub output_dir: PathBuf,
    pub formats: Vec<ReportFormat>,
    /// Table cells below this value print as `<floor`.
    pub low_score_floor: Option<f64>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub corpus: CorpusConfig,
    pub child_speaker: String,
    pub schema: Vec<String>,
    pub parser: ParserConfig,
    pub seed: u64,
    pub split: SplitConfig,
    pub smote: SmoteConfig,
    pub classifiers: Vec<ClassifierConfig>,
    pub rfe: RfeConfig,
    pub report: ReportConfig,
    /// `path=value` for every setting filled from a default.
    pub defaults_applied: Vec<String>,
    /// Settings replaced from the command line or environment.
    pub overrides: Vec<String>,
}

/// Command-line and environment overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

impl Overrides {
    /// Picks up the cache directory from the environment.
    pub fn from_env(mut self) -> Self {
        if self.cache_dir.is_none() {
            self.cache_dir = std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from);
        }
        self
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorpus {
    mode: Option<CorpusMode>,
    location: Option<PathBuf>,
    name: Option<String>,
    base_url: Option<String>,
    endpoints: Option<EndpointMap>,
    cache_dir: Option<PathBuf>,
    groups: Option<Vec<Group>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParser {
    undeclared_speaker: Option<SpeakerPolicy>,
    compound_rule: Option<CompoundRule>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSplit {
    test_fraction: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSmote {
    k_neighbors: Option<usize>,
    sampling_strategy: Option<crate::preprocess::SamplingStrategy>,
    random_state: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRfe {
    estimator: Option<ClassifierKind>,
    n_keep: Option<usize>,
    step: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReport {
    output_dir: Option<PathBuf>,
    formats: Option<Vec<ReportFormat>>,
    low_score_floor: Option<Option<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    corpus: Option<RawCorpus>,
    child_speaker: Option<String>,
    schema: Option<Vec<String>>,
    parser: Option<RawParser>,
    seed: Option<u64>,
    split: Option<RawSplit>,
    smote: Option<RawSmote>,
    classifiers: Option<Vec<Value>>,
    rfe: Option<RawRfe>,
    report: Option<RawReport>,
}

struct Defaults(Vec<String>);

impl Defaults {
    fn take<T: Serialize>(&mut self, v: Option<T>, path: &str, default: T) -> T {
        v.unwrap_or_else(|| {
            let shown = serde_json::to_string(&default).unwrap_or_default();
            self.0.push(format!("{path}={shown}"));
            default
        })
    }
}

fn resolve_path(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn classifier_entry(
    i: usize,
    v: Value,
    seed: u64,
    defaults: &mut Defaults,
) -> Result<ClassifierConfig, ConfigError> {
    let path = format!("classifiers[{i}]");
    let Value::Object(obj) = v else {
        return Err(invalid(path, "expected an object"));
    };
    if !obj.contains_key("kind") {
        return Err(invalid(format!("{path}.kind"), "missing"));
    }
    let mut cfg: ClassifierConfig = serde_json::from_value(Value::Object(obj.clone()))
        .map_err(|e| invalid(&path, e.to_string()))?;
    if !obj.contains_key("seed") {
        cfg.seed = seed;
    }
    let resolved = serde_json::to_value(&cfg).expect("config serializes");
    if let Value::Object(all) = resolved {
        for (k, val) in all {
            if !obj.contains_key(&k) {
                defaults.0.push(format!("{path}.{k}={val}"));
            }
        }
    }
    Ok(cfg)
}

impl ExperimentConfig {
    /// Parses and resolves a config read from `text`; relative paths are
    /// taken relative to `base_dir`.
    pub fn from_json_str(
        text: &str,
        base_dir: &Path,
        overrides: &Overrides,
    ) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let mut d = Defaults(Vec::new());

        let rc = raw.corpus.ok_or_else(|| invalid("corpus", "missing"))?;
        let mode = d.take(rc.mode, "corpus.mode", CorpusMode::Local);
        let corpus = CorpusConfig {
            mode,
            location: rc.location.map(|p| resolve_path(base_dir, p)),
            name: rc.name,
            base_url: rc.base_url,
            endpoints: match (mode, rc.endpoints) {
                (CorpusMode::Remote, e) => d.take(e, "corpus.endpoints", EndpointMap::default()),
                (CorpusMode::Local, e) => e.unwrap_or_default(),
            },
            cache_dir: resolve_path(
                base_dir,
                d.take(rc.cache_dir, "corpus.cache_dir", PathBuf::from("cache")),
            ),
            groups: rc.groups,
        };

        let child_speaker = d.take(raw.child_speaker, "child_speaker", "CHI".to_string());
        let schema = d.take(raw.schema, "schema", FeatureSchema::canonical().names);
        let rp = raw.parser.unwrap_or_default();
        let parser = ParserConfig {
            undeclared_speaker: d.take(
                rp.undeclared_speaker,
                "parser.undeclared_speaker",
                SpeakerPolicy::Warn,
            ),
            compound_rule: d.take(rp.compound_rule, "parser.compound_rule", CompoundRule::One),
        };
        let seed = d.take(raw.seed, "seed", 0);
        let rs = raw.split.unwrap_or_default();
        let split = SplitConfig {
            test_fraction: d.take(rs.test_fraction, "split.test_fraction", 0.2),
            seed: d.take(rs.seed, "split.seed", seed),
        };
        let rm = raw.smote.unwrap_or_default();
        let smote = SmoteConfig {
            k_neighbors: d.take(rm.k_neighbors, "smote.k_neighbors", 5),
            sampling_strategy: d.take(
                rm.sampling_strategy,
                "smote.sampling_strategy",
                Default::default(),
            ),
            random_state: d.take(rm.random_state, "smote.random_state", seed),
        };
        let classifiers = match raw.classifiers {
            Some(list) => list
                .into_iter()
                .enumerate()
                .map(|(i, v)| classifier_entry(i, v, seed, &mut d))
                .collect::<Result<Vec<_>, _>>()?,
            None => ClassifierKind::ALL
                .iter()
                .enumerate()
                .map(|(i, k)| {
                    let mut obj = Map::new();
                    obj.insert("kind".into(), Value::String(k.as_str().into()));
                    d.0.push(format!("classifiers[{i}].kind=\"{k}\""));
                    classifier_entry(i, Value::Object(obj), seed, &mut d)
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        let rr = raw.rfe.unwrap_or_default();
        let rfe = RfeConfig {
            estimator: d.take(
                rr.estimator,
                "rfe.estimator",
                ClassifierKind::LogisticRegression,
            ),
            n_keep: d.take(rr.n_keep, "rfe.n_keep", 4),
            step: d.take(rr.step, "rfe.step", 1),
        };
        let rp = raw.report.unwrap_or_default();
        let report = ReportConfig {
            output_dir: resolve_path(
                base_dir,
                d.take(rp.output_dir, "report.output_dir", PathBuf::from("out")),
            ),
            formats: d.take(
                rp.formats,
                "report.formats",
                vec![ReportFormat::Json, ReportFormat::Csv, ReportFormat::Table],
            ),
            low_score_floor: d.take(rp.low_score_floor, "report.low_score_floor", Some(0.40)),
        };

        let mut cfg = ExperimentConfig {
            corpus,
            child_speaker,
            schema,
            parser,
            seed,
            split,
            smote,
            classifiers,
            rfe,
            report,
            defaults_applied: d.0,
            overrides: Vec::new(),
        };
        cfg.apply_overrides(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
            self.split.seed = seed;
            self.smote.random_state = seed;
            for c in &mut self.classifiers {
                c.seed = seed;
            }
            self.overrides.push(format!("seed={seed}"));
        }
        if let Some(dir) = &o.output_dir {
            self.report.output_dir = dir.clone();
            self.overrides.push("report.output_dir".into());
        }
        if let Some(dir) = &o.cache_dir {
            self.corpus.cache_dir = dir.clone();
            self.overrides.push("corpus.cache_dir".into());
        }
    }

    /// Range and consistency checks; referenced local paths must exist.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.corpus.mode {
            CorpusMode::Local => {
                let loc = self
                    .corpus
                    .location
                    .as_ref()
                    .ok_or_else(|| invalid("corpus.location", "missing"))?;
                if !loc.is_dir() {
                    return Err(invalid(
                        "corpus.location",
                        format!("{} is not a directory", loc.display()),
                    ));
                }
            }
            CorpusMode::Remote => {
                if self.corpus.base_url.as_deref().is_none_or(str::is_empty) {
                    return Err(invalid("corpus.base_url", "required in remote mode"));
                }
                if self.corpus.name.as_deref().is_none_or(str::is_empty) {
                    return Err(invalid("corpus.name", "required in remote mode"));
                }
            }
        }
        if let Some(g) = &self.corpus.groups {
            if g.len() < 2 {
                return Err(invalid("corpus.groups", "at least two groups are needed"));
            }
        }
        if self.child_speaker.is_empty() {
            return Err(invalid("child_speaker", "empty"));
        }
        FeatureSchema::from_names(&self.schema).map_err(|e| invalid("schema", e.to_string()))?;
        let f = self.split.test_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(invalid(
                "split.test_fraction",
                format!("{f} is outside (0, 1)"),
            ));
        }
        if self.smote.k_neighbors == 0 {
            return Err(invalid("smote.k_neighbors", "must be >= 1"));
        }
        if self.classifiers.is_empty() {
            return Err(invalid("classifiers", "empty"));
        }
        for (i, c) in self.classifiers.iter().enumerate() {
            c.validate()
                .map_err(|e| invalid(format!("classifiers[{i}]"), e.to_string()))?;
            if self.classifiers[..i].iter().any(|o| o.kind == c.kind) {
                return Err(invalid(
                    format!("classifiers[{i}].kind"),
                    format!("{} listed twice", c.kind),
                ));
            }
        }
        if !matches!(
            self.rfe.estimator,
            ClassifierKind::LogisticRegression | ClassifierKind::RandomForest
        ) {
            return Err(invalid(
                "rfe.estimator",
                "must be logistic_regression or random_forest",
            ));
        }
        if self.rfe.n_keep == 0 || self.rfe.n_keep > self.schema.len() {
            return Err(invalid(
                "rfe.n_keep",
                format!("must lie in 1..={}", self.schema.len()),
            ));
        }
        if self.rfe.step == 0 {
            return Err(invalid("rfe.step", "must be >= 1"));
        }
        if let Some(floor) = self.report.low_score_floor {
            if !(0.0..=1.0).contains(&floor) {
                return Err(invalid("report.low_score_floor", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// The echo stored in reports: everything except where outputs go.
    pub fn echo(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(report) = v.get_mut("report").and_then(Value::as_object_mut) {
            report.remove("output_dir");
        }
        if let Some(o) = v.get_mut("overrides").and_then(Value::as_array_mut) {
            o.retain(|s| s != "report.output_dir");
        }
        v
    }

    pub fn output_dir(&self) -> &Path {
        &self.report.output_dir
    }

    pub fn wants(&self, f: ReportFormat) -> bool {
        self.report.formats.contains(&f)
    }
}

/// Reads and resolves a config file.
pub fn validate_config(
    path: &Path,
    overrides: &Overrides,
) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    ExperimentConfig::from_json_str(&text, base, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    fn minimal(d: &Path) -> String {
        std::fs::create_dir_all(d.join("fx")).unwrap();
        r#"{"corpus": {"mode": "local", "location": "fx"}}"#.to_string()
    }

    #[test]
    fn minimal_config_lists_defaults() {
        let d = dir();
        let cfg =
            ExperimentConfig::from_json_str(&minimal(d.path()), d.path(), &Overrides::default())
                .unwrap();
        for needle in [
            "smote.random_state=0",
            "classifiers[4].knn_k=5",
            "classifiers[2].rf_n_estimators=200",
            "classifiers[0].lr_max_iter=750",
            "split.test_fraction=0.2",
        ] {
            assert!(cfg.defaults_applied.iter().any(|s| s == needle), "{needle}");
        }
        assert_eq!(cfg.classifiers.len(), 5);
        assert_eq!(cfg.corpus.location, Some(d.path().join("fx")));
    }

    #[test]
    fn unknown_key_is_named() {
        let d = dir();
        minimal(d.path());
        let text = r#"{"corpus": {"mode": "local", "location": "fx"}, "smotee": {}}"#;
        let err =
            ExperimentConfig::from_json_str(text, d.path(), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("smotee"), "{err}");
    }

    #[test]
    fn fraction_out_of_range() {
        let d = dir();
        minimal(d.path());
        for f in ["1.5", "0.0"] {
            let text =
                format!(r#"{{"corpus": {{"location": "fx"}}, "split": {{"test_fraction": {f}}}}}"#);
            let err = ExperimentConfig::from_json_str(&text, d.path(), &Overrides::default())
                .unwrap_err();
            assert!(err.to_string().contains("split.test_fraction"), "{err}");
        }
    }

    #[test]
    fn missing_location_and_seed_override() {
        let d = dir();
        let err = ExperimentConfig::from_json_str(
            r#"{"corpus": {"location": "nope"}}"#,
            d.path(),
            &Overrides::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("corpus.location"));
        let o = Overrides {
            seed: Some(9),
            ..Default::default()
        };
        let cfg = ExperimentConfig::from_json_str(&minimal(d.path()), d.path(), &o).unwrap();
        assert_eq!(
            (
                cfg.split.seed,
                cfg.smote.random_state,
                cfg.classifiers[2].seed
            ),
            (9, 9, 9)
        );
    }

    #[test]
    fn classifier_entries_need_kind_and_unique_kinds() {
        let d = dir();
        minimal(d.path());
        let t = r#"{"corpus": {"location": "fx"}, "classifiers": [{"knn_k": 3}]}"#;
        assert!(ExperimentConfig::from_json_str(t, d.path(), &Overrides::default()).is_err());
        let t =
            r#"{"corpus": {"location": "fx"}, "classifiers": [{"kind": "knn"}, {"kind": "knn"}]}"#;
        assert!(ExperimentConfig::from_json_str(t, d.path(), &Overrides::default()).is_err());
        let t = r#"{"corpus": {"location": "fx"}, "classifiers": [{"kind": "knn", "knn_k": 3}]}"#;
        let cfg = ExperimentConfig::from_json_str(t, d.path(), &Overrides::default()).unwrap();
        assert_eq!(cfg.classifiers[0].knn_k, 3);
        assert!(!cfg
            .defaults_applied
            .iter()
            .any(|s| s.starts_with("classifiers[0].knn_k")));
    }
}
