//! `%mor` tier items: `pos|lemma-SUFFIX~pos|lemma` and friends.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One morphological word from a `%mor` tier.
///
/// `pro|it~v|be-3S` becomes a token for `it` carrying one clitic `be` with
/// suffix `3S`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorToken {
    pub pos: String,
    pub lemma: String,
    pub suffixes: Vec<String>,
    pub clitics: Vec<MorToken>,
}

/// How a `+`-joined compound lemma such as `in+come` contributes to the
/// morpheme count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompoundRule {
    /// The whole compound is one morpheme.
    #[default]
    One,
    /// Each `+`-separated part is a morpheme.
    Parts,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed %mor item {index} `{item}`: {reason}")]
pub struct MorError {
    pub index: usize,
    pub item: String,
    pub reason: &'static str,
}

const DROPPED_ITEMS: [&str; 4] = [".", "?", "!", ","];

impl MorToken {
    pub fn new(pos: &str, lemma: &str) -> Self {
        Self {
            pos: pos.to_string(),
            lemma: lemma.to_string(),
            suffixes: Vec::new(),
            clitics: Vec::new(),
        }
    }

    /// Morphemes in this token: the stem, one per suffix, plus every clitic.
    pub fn morpheme_count(&self) -> usize {
        self.morpheme_count_with(CompoundRule::One)
    }

    pub fn morpheme_count_with(&self, rule: CompoundRule) -> usize {
        let stem = match rule {
            CompoundRule::One => 1,
            CompoundRule::Parts => self
                .lemma
                .split('+')
                .filter(|p| !p.is_empty())
                .count()
                .max(1),
        };
        stem + self.suffixes.len()
            + self
                .clitics
                .iter()
                .map(|c| c.morpheme_count_with(rule))
                .sum::<usize>()
    }

    /// This token followed by its clitics, depth first.
    pub fn flatten(&self) -> Vec<&MorToken> {
        let mut out = vec![self];
        for c in &self.clitics {
            out.extend(c.flatten());
        }
        out
    }

    /// Head category of the part-of-speech code (`pro:dem` -> `pro`).
    pub fn pos_head(&self) -> &str {
        self.pos.split(':').next().unwrap_or(&self.pos)
    }
}

impl std::fmt::Display for MorToken {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}|{}", self.pos, self.lemma)?;
        for s in &self.suffixes {
            write!(f, "-{s}")?;
        }
        for c in &self.clitics {
            write!(f, "~{c}")?;
        }
        Ok(())
    }
}

fn parse_word(part: &str) -> Result<MorToken, &'static str> {
    let (pos, rest) = part.split_once('|').ok_or("missing `|` separator")?;
    if pos.is_empty() {
        return Err("empty part of speech");
    }
    let mut pieces = rest.split('-');
    let lemma = pieces.next().unwrap_or_default();
    if lemma.is_empty() {
        return Err("empty lemma");
    }
    let mut suffixes = Vec::new();
    for s in pieces {
        if s.is_empty() {
            return Err("empty suffix");
        }
        suffixes.push(s.to_string());
    }
    Ok(MorToken {
        pos: pos.to_string(),
        lemma: lemma.to_string(),
        suffixes,
        clitics: Vec::new(),
    })
}

/// Parses one whitespace-free `%mor` item such as `pro|it~v|be-3S`.
pub fn parse_mor_item(item: &str) -> Result<MorToken, &'static str> {
    let mut parts = item.split('~');
    let mut head = parse_word(parts.next().unwrap_or_default())?;
    for p in parts {
        head.clitics.push(parse_word(p)?);
    }
    Ok(head)
}

/// Parses the text of a `%mor` tier (after `%mor:\t`).
///
/// Standalone terminators and commas are dropped; every other item must
/// carry a `pos|lemma` pair.
pub fn parse_mor_tier(raw: &str) -> Result<Vec<MorToken>, MorError> {
    raw.split_whitespace()
        .enumerate()
        .filter(|(_, item)| !DROPPED_ITEMS.contains(item))
        .map(|(index, item)| {
            parse_mor_item(item).map_err(|reason| MorError {
                index,
                item: item.to_string(),
                reason,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_tier_one_morpheme_each() {
        let toks = parse_mor_tier("pro|I v|want det|the n|ball .").unwrap();
        assert_eq!(toks.len(), 4);
        let total: usize = toks.iter().map(MorToken::morpheme_count).sum();
        assert_eq!(total, 4);
        assert_eq!(toks[0].pos, "pro");
        assert_eq!(toks[0].lemma, "I");
    }

    #[test]
    fn compound_with_suffix() {
        let toks = parse_mor_tier("n|in+come-PROG").unwrap();
        assert_eq!(toks[0].lemma, "in+come");
        assert_eq!(toks[0].suffixes, vec!["PROG"]);
        assert_eq!(toks[0].morpheme_count(), 2);
        assert_eq!(toks[0].morpheme_count_with(CompoundRule::Parts), 3);
    }

    #[test]
    fn clitic_attaches_to_host() {
        let toks = parse_mor_tier("pro|it~v|be").unwrap();
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].clitics.len(), 1);
        assert_eq!(toks[0].morpheme_count(), 2);
    }

    #[test]
    fn morpheme_count_examples() {
        let count = |s: &str| parse_mor_item(s).unwrap().morpheme_count();
        assert_eq!(count("n|ball"), 1);
        assert_eq!(count("v|go-PAST"), 2);
        assert_eq!(count("pro|it~v|be-3S"), 3);
    }

    #[test]
    fn missing_bar_reports_index() {
        let err = parse_mor_tier("pro|I want n|ball .").unwrap_err();
        assert_eq!(err.index, 1);
        assert_eq!(err.item, "want");
    }

    #[test]
    fn terminator_only_tier_is_empty() {
        assert!(parse_mor_tier(".").unwrap().is_empty());
        assert!(parse_mor_tier("").unwrap().is_empty());
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "pro|it~v|be-3S",
            "n|in+come-PROG",
            "v|do~neg|not",
            "pro:dem|that",
        ] {
            assert_eq!(parse_mor_item(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn empty_pieces_rejected() {
        assert!(parse_mor_item("|ball").is_err());
        assert!(parse_mor_item("n|").is_err());
        assert!(parse_mor_item("v|go-").is_err());
        assert!(parse_mor_item("pro|it~").is_err());
    }
}
