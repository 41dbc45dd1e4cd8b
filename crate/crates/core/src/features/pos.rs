//! Part-of-speech reporting categories and the `%mor` code mapping.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosCategory {
    Pronoun,
    Noun,
    Verb,
    Adjective,
    Adverb,
    Conjunction,
    Determiner,
    Preposition,
    Negation,
    Other,
}

impl PosCategory {
    pub const ALL: [PosCategory; 10] = [
        PosCategory::Pronoun,
        PosCategory::Noun,
        PosCategory::Verb,
        PosCategory::Adjective,
        PosCategory::Adverb,
        PosCategory::Conjunction,
        PosCategory::Determiner,
        PosCategory::Preposition,
        PosCategory::Negation,
        PosCategory::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PosCategory::Pronoun => "pronoun",
            PosCategory::Noun => "noun",
            PosCategory::Verb => "verb",
            PosCategory::Adjective => "adjective",
            PosCategory::Adverb => "adverb",
            PosCategory::Conjunction => "conjunction",
            PosCategory::Determiner => "determiner",
            PosCategory::Preposition => "preposition",
            PosCategory::Negation => "negation",
            PosCategory::Other => "other",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Deserialize)]
struct PosMapFile {
    codes: HashMap<String, PosCategory>,
}

/// Code-to-category table.
#[derive(Debug, Clone)]
pub struct PosMap {
    codes: HashMap<String, PosCategory>,
}

const BUNDLED: &str = include_str!("../../data/pos_map.json");

impl PosMap {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let file: PosMapFile = serde_json::from_str(text)?;
        Ok(Self { codes: file.codes })
    }

    /// The table shipped in `data/pos_map.json`.
    pub fn bundled() -> &'static PosMap {
        static MAP: OnceLock<PosMap> = OnceLock::new();
        MAP.get_or_init(|| PosMap::from_json(BUNDLED).expect("bundled POS map is valid"))
    }

    pub fn category(&self, code: &str) -> PosCategory {
        if let Some(c) = self.codes.get(code) {
            return *c;
        }
        let head = code.split(':').next().unwrap_or(code);
        self.codes.get(head).copied().unwrap_or(PosCategory::Other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookups() {
        let m = PosMap::bundled();
        assert_eq!(m.category("pro"), PosCategory::Pronoun);
        assert_eq!(m.category("pro:dem"), PosCategory::Pronoun);
        assert_eq!(m.category("pro:unknownsub"), PosCategory::Pronoun);
        assert_eq!(m.category("neg"), PosCategory::Negation);
        assert_eq!(m.category("coord"), PosCategory::Conjunction);
        assert_eq!(m.category("co"), PosCategory::Other);
        assert_eq!(m.category("cop"), PosCategory::Verb);
    }

    #[test]
    fn category_order_matches_index() {
        for (i, c) in PosCategory::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
        }
    }
}
