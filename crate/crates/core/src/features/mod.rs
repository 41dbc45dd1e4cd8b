//! Per-participant language features and the feature matrix.

mod pos;
mod schema;
mod stats;

pub use pos::{PosCategory, PosMap};
pub use schema::{known_features, FeatureKind, FeatureSchema, STEM_RANK_SLOTS};
pub use stats::{
    compute_mlt_ratio, compute_mlt_ratio_pooled, compute_mlu, compute_mlu_pooled,
    compute_pos_percentages, compute_pos_percentages_pooled, median, primary_adult, speaker_stats,
    speaker_stats_pooled, stem_rank_frequencies, turn_lengths, type_token_ratio, PosPercentages,
    SpeakerStats,
};

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chat::{parse_transcript_with, CompoundRule, ParseError, ParseOptions, Transcript};
use crate::corpus::{Group, ParticipantRecord, RawCorpus, Sex};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("speaker `{0}` does not occur in the transcript")]
    UnknownSpeaker(String),
    #[error("MLU undefined: speaker `{0}` has no utterances")]
    UndefinedMlu(String),
    #[error("speaker `{speaker}` has no %mor tier for the utterance at line {line_no}")]
    MissingMorphology { speaker: String, line_no: usize },
    #[error("turn ratio undefined: speaker `{0}` has no turns")]
    UndefinedRatio(String),
    #[error("participant `{0}` has no sessions")]
    NoSessions(String),
    #[error("no producer for feature `{0}`")]
    UnknownFeature(String),
    #[error("feature `{0}` listed twice")]
    DuplicateFeature(String),
    #[error("feature `{0}` declared with the wrong kind")]
    KindMismatch(String),
    #[error("participant `{id}`, session {session}: {source}")]
    Parse {
        id: String,
        session: usize,
        #[source]
        source: ParseError,
    },
    #[error("participant `{id}`: {source}")]
    Participant {
        id: String,
        #[source]
        source: Box<FeatureError>,
    },
    #[error("malformed feature file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Cat(String),
}

impl Cell {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Cat(_) => None,
        }
    }
}

/// Rows are participants, columns follow `schema`. Where `missing[i][j]` is
/// set the stored value is a placeholder and must be ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub schema: FeatureSchema,
    pub participant_ids: Vec<String>,
    pub labels: Vec<Group>,
    pub values: Vec<Vec<Cell>>,
    pub missing: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureOptions {
    pub child_code: String,
    pub compound_rule: CompoundRule,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            child_code: "CHI".into(),
            compound_rule: CompoundRule::One,
        }
    }
}

/// Parses every session, grouped by participant in corpus order.
pub fn parse_sessions(
    corpus: &RawCorpus,
    opts: &ParseOptions,
) -> Result<BTreeMap<String, Vec<Transcript>>, FeatureError> {
    let mut out: BTreeMap<String, Vec<Transcript>> = BTreeMap::new();
    for (i, s) in corpus.sessions.iter().enumerate() {
        let (t, warnings) =
            parse_transcript_with(&s.chat_text, opts).map_err(|source| FeatureError::Parse {
                id: s.participant_id.clone(),
                session: i,
                source,
            })?;
        for w in warnings {
            log::warn!(
                "{} session {i} line {}: {}",
                s.participant_id,
                w.line,
                w.message
            );
        }
        out.entry(s.participant_id.clone()).or_default().push(t);
    }
    Ok(out)
}

fn num(v: f64) -> Option<Cell> {
    Some(Cell::Num(v))
}

/// Every canonical feature for one participant; `None` marks a missing value.
fn participant_row(
    record: &ParticipantRecord,
    sessions: &[Transcript],
    opts: &FeatureOptions,
) -> Result<HashMap<String, Option<Cell>>, FeatureError> {
    let child = opts.child_code.as_str();
    let pos_map = PosMap::bundled();
    let mut row: HashMap<String, Option<Cell>> = HashMap::new();

    row.insert(
        "age_months".into(),
        record.age_months.map(|a| Cell::Num(a as f64)),
    );
    row.insert("sex".into(), Some(Cell::Cat(record.sex.as_str().into())));
    row.insert("ethnicity".into(), record.ethnicity.clone().map(Cell::Cat));
    row.insert(
        "parent_education".into(),
        record.parent_education.clone().map(Cell::Cat),
    );
    row.insert("n_sessions".into(), num(sessions.len() as f64));

    let adult = primary_adult(sessions, child);
    row.insert("adult_role".into(), adult.clone().map(Cell::Cat));

    let stats = speaker_stats_pooled(sessions, child, opts.compound_rule)?;
    row.insert("chi_total_words".into(), num(stats.total_words as f64));
    row.insert("chi_n_utterances".into(), num(stats.n_utterances as f64));
    row.insert(
        "chi_mean_words_per_utt".into(),
        num(stats.mean_words_per_utterance),
    );
    row.insert(
        "chi_median_words_per_utt".into(),
        num(stats.median_words_per_utterance),
    );
    row.insert("chi_mlu".into(), stats.mlu.map(Cell::Num));
    row.insert(
        "chi_mean_turn_len".into(),
        (stats.n_turns > 0).then_some(Cell::Num(stats.mean_turn_len_utterances)),
    );
    row.insert(
        "mlt_ratio".into(),
        adult
            .as_deref()
            .and_then(|a| compute_mlt_ratio_pooled(sessions, child, a).ok())
            .map(Cell::Num),
    );

    let chi_pos = compute_pos_percentages_pooled(sessions, child, pos_map)
        .ok()
        .filter(|p| !p.empty);
    let adult_pos = adult
        .as_deref()
        .and_then(|a| compute_pos_percentages_pooled(sessions, a, pos_map).ok())
        .filter(|p| !p.empty);
    for c in PosCategory::ALL {
        row.insert(
            format!("chi_pos_{}", c.name()),
            chi_pos.as_ref().map(|p| Cell::Num(p.get(c))),
        );
        row.insert(
            format!("adult_pos_{}", c.name()),
            adult_pos.as_ref().map(|p| Cell::Num(p.get(c))),
        );
    }

    row.insert(
        "chi_type_token_ratio".into(),
        type_token_ratio(sessions, child)
            .ok()
            .flatten()
            .map(Cell::Num),
    );
    let ranks = stem_rank_frequencies(sessions, child, STEM_RANK_SLOTS).unwrap_or_default();
    for k in 0..STEM_RANK_SLOTS {
        row.insert(
            format!("chi_stem_rank_freq_{:02}", k + 1),
            ranks.get(k).copied().map(Cell::Num),
        );
    }
    Ok(row)
}

/// Assembles the feature matrix, one row per participant in corpus order.
pub fn build_feature_matrix(
    corpus: &RawCorpus,
    parsed: &BTreeMap<String, Vec<Transcript>>,
    schema: &FeatureSchema,
    opts: &FeatureOptions,
) -> Result<FeatureMatrix, FeatureError> {
    build_feature_matrix_for(&corpus.participants, parsed, schema, opts)
}

/// As [`build_feature_matrix`], from participant records alone.
pub fn build_feature_matrix_for(
    participants: &[ParticipantRecord],
    parsed: &BTreeMap<String, Vec<Transcript>>,
    schema: &FeatureSchema,
    opts: &FeatureOptions,
) -> Result<FeatureMatrix, FeatureError> {
    schema.validate()?;
    let mut m = FeatureMatrix {
        schema: schema.clone(),
        participant_ids: Vec::new(),
        labels: Vec::new(),
        values: Vec::new(),
        missing: Vec::new(),
    };
    for p in participants {
        let id = &p.participant_id;
        let sessions = parsed
            .get(id)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| FeatureError::NoSessions(id.clone()))?;
        let mut row =
            participant_row(p, sessions, opts).map_err(|e| FeatureError::Participant {
                id: id.clone(),
                source: Box::new(e),
            })?;
        let mut values = Vec::with_capacity(schema.len());
        let mut missing = Vec::with_capacity(schema.len());
        for name in &schema.names {
            let cell = row
                .remove(name)
                .ok_or_else(|| FeatureError::UnknownFeature(name.clone()))?;
            missing.push(cell.is_none());
            values.push(cell.unwrap_or(Cell::Num(0.0)));
        }
        m.participant_ids.push(id.clone());
        m.labels.push(p.group);
        m.values.push(values);
        m.missing.push(missing);
    }
    Ok(m)
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&Cell> {
        (!self.missing[row][col]).then(|| &self.values[row][col])
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            schema: self.schema.clone(),
            participant_ids: rows
                .iter()
                .map(|&i| self.participant_ids[i].clone())
                .collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            values: rows.iter().map(|&i| self.values[i].clone()).collect(),
            missing: rows.iter().map(|&i| self.missing[i].clone()).collect(),
        }
    }

    /// Keeps only rows whose label is in `groups`.
    pub fn filter_groups(&self, groups: &[Group]) -> FeatureMatrix {
        let rows: Vec<usize> = (0..self.n_rows())
            .filter(|&i| groups.contains(&self.labels[i]))
            .collect();
        self.select_rows(&rows)
    }

    /// Shape and type consistency of a matrix read from disk.
    pub fn validate(&self) -> Result<(), FeatureError> {
        self.schema.validate()?;
        let n = self.participant_ids.len();
        let d = self.schema.len();
        if self.labels.len() != n || self.values.len() != n || self.missing.len() != n {
            return Err(FeatureError::Format("row counts disagree".into()));
        }
        for (i, (row, mask)) in self.values.iter().zip(&self.missing).enumerate() {
            if row.len() != d || mask.len() != d {
                return Err(FeatureError::Format(format!(
                    "row {i} has the wrong length"
                )));
            }
            for (j, cell) in row.iter().enumerate() {
                let ok = mask[j]
                    || matches!(
                        (self.schema.kinds[j], cell),
                        (FeatureKind::Numeric, Cell::Num(_))
                            | (FeatureKind::Categorical, Cell::Cat(_))
                    );
                if !ok {
                    return Err(FeatureError::Format(format!(
                        "row {i}, column `{}` has the wrong cell type",
                        self.schema.names[j]
                    )));
                }
            }
        }
        Ok(())
    }

    /// JSON sidecar: schema, participant ids, labels, values and mask.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, FeatureError> {
        let m: FeatureMatrix =
            serde_json::from_str(text).map_err(|e| FeatureError::Format(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    /// CSV with a `participant_id` column followed by the schema columns;
    /// missing cells are empty.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["participant_id".to_string()];
        header.extend(self.schema.names.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for i in 0..self.n_rows() {
            let mut rec = vec![self.participant_ids[i].clone()];
            for j in 0..self.n_cols() {
                rec.push(match self.get(i, j) {
                    None => String::new(),
                    Some(Cell::Num(v)) => v.to_string(),
                    Some(Cell::Cat(s)) => s.clone(),
                });
            }
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Demographic and speech profile of one (group, sex) cell of a cohort. Word
/// statistics are averages of per-child values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortCell {
    pub group: Group,
    pub sex: Sex,
    pub participants: usize,
    pub mean_age_months: Option<f64>,
    pub mean_total_words: f64,
    pub mean_words_per_utt: f64,
    pub median_words_per_utt: f64,
}

pub fn cohort_profile(
    corpus: &RawCorpus,
    parsed: &BTreeMap<String, Vec<Transcript>>,
    opts: &FeatureOptions,
) -> Result<Vec<CohortCell>, FeatureError> {
    let mut cells = Vec::new();
    for group in Group::ALL {
        for sex in [Sex::M, Sex::F] {
            let members: Vec<&ParticipantRecord> = corpus
                .participants
                .iter()
                .filter(|p| p.group == group && p.sex == sex)
                .collect();
            if members.is_empty() {
                continue;
            }
            let mut ages = Vec::new();
            let (mut total, mut mean, mut med) = (0.0, 0.0, 0.0);
            for p in &members {
                let sessions = parsed
                    .get(&p.participant_id)
                    .ok_or_else(|| FeatureError::NoSessions(p.participant_id.clone()))?;
                let s = speaker_stats_pooled(sessions, &opts.child_code, opts.compound_rule)?;
                total += s.total_words as f64;
                mean += s.mean_words_per_utterance;
                med += s.median_words_per_utterance;
                ages.extend(p.age_months.map(f64::from));
            }
            let n = members.len() as f64;
            cells.push(CohortCell {
                group,
                sex,
                participants: members.len(),
                mean_age_months: (!ages.is_empty())
                    .then(|| ages.iter().sum::<f64>() / ages.len() as f64),
                mean_total_words: total / n,
                mean_words_per_utt: mean / n,
                median_words_per_utt: med / n,
            });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_local_corpus;
    use std::path::Path;

    fn golden() -> (RawCorpus, BTreeMap<String, Vec<Transcript>>) {
        let c = load_local_corpus(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/golden"))
            .unwrap();
        let parsed = parse_sessions(&c, &ParseOptions::default()).unwrap();
        (c, parsed)
    }

    #[test]
    fn golden_matrix_shape() {
        let (c, parsed) = golden();
        let m = build_feature_matrix(
            &c,
            &parsed,
            &FeatureSchema::canonical(),
            &FeatureOptions::default(),
        )
        .unwrap();
        assert_eq!(m.n_rows(), 3);
        assert_eq!(m.n_cols(), 52);
        let age = m.schema.index_of("age_months").unwrap();
        assert!(m.missing[2][age]);
        let eth = m.schema.index_of("ethnicity").unwrap();
        assert!(m.missing[1][eth]);
        let mlu = m.schema.index_of("chi_mlu").unwrap();
        assert!(!m.missing[0][mlu]);
        m.validate().unwrap();
        assert_eq!(FeatureMatrix::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn participant_without_mor_is_masked() {
        let (mut c, _) = golden();
        c.sessions[0].chat_text = c.sessions[0]
            .chat_text
            .lines()
            .filter(|l| !l.starts_with("%mor"))
            .collect::<Vec<_>>()
            .join("\n");
        let parsed = parse_sessions(&c, &ParseOptions::default()).unwrap();
        let m = build_feature_matrix(
            &c,
            &parsed,
            &FeatureSchema::canonical(),
            &FeatureOptions::default(),
        )
        .unwrap();
        for name in [
            "chi_mlu",
            "chi_pos_pronoun",
            "adult_pos_verb",
            "chi_type_token_ratio",
        ] {
            assert!(m.missing[0][m.schema.index_of(name).unwrap()], "{name}");
        }
        assert!(!m.missing[0][m.schema.index_of("chi_total_words").unwrap()]);
    }

    #[test]
    fn participant_without_sessions_errors() {
        let (mut c, _) = golden();
        c.sessions.pop();
        let parsed = parse_sessions(&c, &ParseOptions::default()).unwrap();
        assert!(matches!(
            build_feature_matrix(&c, &parsed, &FeatureSchema::canonical(), &FeatureOptions::default()),
            Err(FeatureError::NoSessions(id)) if id == "GC01"
        ));
    }

    #[test]
    fn csv_has_empty_cells_for_missing() {
        let (c, parsed) = golden();
        let schema = FeatureSchema::from_names(&["age_months", "sex", "chi_mlu"]).unwrap();
        let m = build_feature_matrix(&c, &parsed, &schema, &FeatureOptions::default()).unwrap();
        let csv = m.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "participant_id,age_months,sex,chi_mlu");
        assert_eq!(lines[3], "GC01,,M,2.6");
    }
}
