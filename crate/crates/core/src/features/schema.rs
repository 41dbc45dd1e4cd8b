//! Feature schema: ordered, named, typed columns.
//!
//! The canonical schema has 52 columns:
//!
//! | block                        | columns |
//! |------------------------------|---------|
//! | participant/session metadata | `age_months`, `sex`, `ethnicity`, `parent_education`, `n_sessions`, `adult_role` |
//! | child speech                 | `chi_total_words`, `chi_n_utterances`, `chi_mean_words_per_utt`, `chi_median_words_per_utt`, `chi_mlu`, `chi_mean_turn_len`, `mlt_ratio` |
//! | child POS shares (percent)   | `chi_pos_<category>` for the ten categories |
//! | adult POS shares (percent)   | `adult_pos_<category>` for the ten categories |
//! | lexical diversity            | `chi_type_token_ratio` |
//! | lexical frequency profile    | `chi_stem_rank_freq_01` .. `chi_stem_rank_freq_18`: share of the child's k-th most frequent lemma |
//!
//! "adult" is the non-child speaker with the most utterances. Any subset or
//! reordering of these names is a valid schema.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::pos::PosCategory;
use super::FeatureError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

pub const STEM_RANK_SLOTS: usize = 18;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub names: Vec<String>,
    pub kinds: Vec<FeatureKind>,
}

/// Every column name this crate knows how to compute, with its kind.
pub fn known_features() -> Vec<(String, FeatureKind)> {
    use FeatureKind::*;
    let mut out: Vec<(String, FeatureKind)> = vec![
        ("age_months".into(), Numeric),
        ("sex".into(), Categorical),
        ("ethnicity".into(), Categorical),
        ("parent_education".into(), Categorical),
        ("n_sessions".into(), Numeric),
        ("adult_role".into(), Categorical),
        ("chi_total_words".into(), Numeric),
        ("chi_n_utterances".into(), Numeric),
        ("chi_mean_words_per_utt".into(), Numeric),
        ("chi_median_words_per_utt".into(), Numeric),
        ("chi_mlu".into(), Numeric),
        ("chi_mean_turn_len".into(), Numeric),
        ("mlt_ratio".into(), Numeric),
    ];
    for c in PosCategory::ALL {
        out.push((format!("chi_pos_{}", c.name()), Numeric));
    }
    for c in PosCategory::ALL {
        out.push((format!("adult_pos_{}", c.name()), Numeric));
    }
    out.push(("chi_type_token_ratio".into(), Numeric));
    for k in 1..=STEM_RANK_SLOTS {
        out.push((format!("chi_stem_rank_freq_{k:02}"), Numeric));
    }
    out
}

impl FeatureSchema {
    pub fn canonical() -> Self {
        let (names, kinds) = known_features().into_iter().unzip();
        Self { names, kinds }
    }

    /// Builds a schema from column names, taking kinds from the producers.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, FeatureError> {
        let known = known_features();
        let mut seen = HashSet::new();
        let mut schema = Self {
            names: Vec::with_capacity(names.len()),
            kinds: Vec::with_capacity(names.len()),
        };
        for n in names {
            let n = n.as_ref();
            let kind = known
                .iter()
                .find(|(k, _)| k == n)
                .map(|(_, kind)| *kind)
                .ok_or_else(|| FeatureError::UnknownFeature(n.to_string()))?;
            if !seen.insert(n.to_string()) {
                return Err(FeatureError::DuplicateFeature(n.to_string()));
            }
            schema.names.push(n.to_string());
            schema.kinds.push(kind);
        }
        Ok(schema)
    }

    /// Checks name uniqueness and that every name/kind pair has a producer.
    pub fn validate(&self) -> Result<(), FeatureError> {
        let rebuilt = Self::from_names(&self.names)?;
        if rebuilt.kinds != self.kinds {
            let bad = self
                .names
                .iter()
                .zip(self.kinds.iter().zip(&rebuilt.kinds))
                .find(|(_, (a, b))| a != b)
                .map(|(n, _)| n.clone())
                .unwrap_or_default();
            return Err(FeatureError::KindMismatch(bad));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_has_52_unique_columns() {
        let s = FeatureSchema::canonical();
        assert_eq!(s.len(), 52);
        s.validate().unwrap();
        assert_eq!(s.index_of("chi_mlu"), Some(10));
        assert_eq!(s.kinds[1], FeatureKind::Categorical);
    }

    #[test]
    fn unknown_and_duplicate_names() {
        assert!(matches!(
            FeatureSchema::from_names(&["chi_mlu", "favourite_colour"]),
            Err(FeatureError::UnknownFeature(n)) if n == "favourite_colour"
        ));
        assert!(matches!(
            FeatureSchema::from_names(&["chi_mlu", "chi_mlu"]),
            Err(FeatureError::DuplicateFeature(_))
        ));
    }

    #[test]
    fn kind_mismatch_detected() {
        let s = FeatureSchema {
            names: vec!["sex".into()],
            kinds: vec![FeatureKind::Numeric],
        };
        assert!(matches!(s.validate(), Err(FeatureError::KindMismatch(_))));
    }
}
