//! Main-tier word segmentation.
//!
//! Exclusions applied to the surface text of an utterance:
//!
//! * untranscribed material `xxx`, `yyy`, `www`;
//! * anything prefixed with `&` (`&=laughs`, `&-um`, `&+fr`);
//! * omitted words prefixed with `0`;
//! * bracketed codes `[...]`, which may span several whitespace tokens;
//! * commas and the utterance terminator.
//!
//! Retracing codes (`[/]`, `[//]`, `[///]`, `[/-]`, `[/?]`) drop the unit
//! immediately before them: either the previous word or the whole preceding
//! `<...>` group. Parenthesised shortenings are expanded (`goin(g)` ->
//! `going`) and `@` form markers are stripped (`gonna@f` -> `gonna`).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminator {
    Period,
    Question,
    Exclamation,
    None,
}

impl Terminator {
    fn from_token(tok: &str) -> Option<Self> {
        match tok {
            "." => Some(Self::Period),
            "?" => Some(Self::Question),
            "!" => Some(Self::Exclamation),
            _ => None,
        }
    }
}

const RETRACE_CODES: [&str; 5] = ["[/]", "[//]", "[///]", "[/-]", "[/?]"];
const UNTRANSCRIBED: [&str; 3] = ["xxx", "yyy", "www"];

fn is_excluded(word: &str) -> bool {
    word.is_empty()
        || UNTRANSCRIBED.contains(&word)
        || word.starts_with('&')
        || word.starts_with('0')
}

fn clean_word(word: &str) -> String {
    let base = word.split('@').next().unwrap_or_default();
    base.chars().filter(|c| *c != '(' && *c != ')').collect()
}

/// Splits the text after `*XXX:\t` into counted words and a terminator.
pub fn tokenize_utterance(raw: &str) -> (Vec<String>, Terminator) {
    let mut words: Vec<String> = Vec::new();
    let mut terminator = Terminator::None;
    // Range of `words` produced by the most recent word token or closed group.
    let mut last_unit: Option<(usize, usize)> = None;
    let mut group_starts: Vec<usize> = Vec::new();
    let mut annotation: Option<String> = None;

    for tok in raw.split_whitespace() {
        if let Some(mut acc) = annotation.take() {
            acc.push(' ');
            acc.push_str(tok);
            if tok.ends_with(']') {
                apply_annotation(&acc, &mut words, &mut last_unit);
            } else {
                annotation = Some(acc);
            }
            continue;
        }
        if tok.starts_with('[') {
            if tok.ends_with(']') {
                apply_annotation(tok, &mut words, &mut last_unit);
            } else {
                annotation = Some(tok.to_string());
            }
            continue;
        }
        if let Some(t) = Terminator::from_token(tok) {
            terminator = t;
            continue;
        }
        if tok == "," || tok == "„" || tok == "‡" {
            continue;
        }

        let before = words.len();
        let mut body = tok;
        while let Some(rest) = body.strip_prefix('<') {
            group_starts.push(words.len());
            body = rest;
        }
        let mut closes = 0;
        while let Some(rest) = body.strip_suffix('>') {
            closes += 1;
            body = rest;
        }
        if !is_excluded(body) {
            let w = clean_word(body);
            if !w.is_empty() {
                words.push(w);
            }
        }
        let mut start = before;
        for _ in 0..closes {
            if let Some(s) = group_starts.pop() {
                start = s;
            }
        }
        last_unit = Some((start, words.len()));
    }

    (words, terminator)
}

fn apply_annotation(code: &str, words: &mut Vec<String>, last_unit: &mut Option<(usize, usize)>) {
    if RETRACE_CODES.contains(&code) {
        if let Some((start, end)) = last_unit.take() {
            // Only remove if the unit is still the tail of `words`.
            if end == words.len() && start <= end {
                words.truncate(start);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(raw: &str) -> Vec<String> {
        tokenize_utterance(raw).0
    }

    #[test]
    fn retracing_keeps_final_occurrence() {
        let (w, t) = tokenize_utterance("I want [/] want the ball .");
        assert_eq!(w, vec!["I", "want", "the", "ball"]);
        assert_eq!(t, Terminator::Period);
    }

    #[test]
    fn exclusions_leave_nothing() {
        let (w, t) = tokenize_utterance("xxx &=laughs ?");
        assert!(w.is_empty());
        assert_eq!(t, Terminator::Question);
    }

    #[test]
    fn no_terminator() {
        let (w, t) = tokenize_utterance("go");
        assert_eq!(w, vec!["go"]);
        assert_eq!(t, Terminator::None);
    }

    #[test]
    fn angle_group_retrace() {
        assert_eq!(
            words("<he is> [//] he's coming in ."),
            vec!["he's", "coming", "in"]
        );
    }

    #[test]
    fn multi_token_annotation_dropped() {
        let (w, t) = tokenize_utterance("incoming [= the train] !");
        assert_eq!(w, vec!["incoming"]);
        assert_eq!(t, Terminator::Exclamation);
    }

    #[test]
    fn retrace_after_excluded_word_removes_nothing_else() {
        assert_eq!(words("ball xxx [/] ball ."), vec!["ball", "ball"]);
    }

    #[test]
    fn shortening_and_form_markers() {
        assert_eq!(words("goin(g) gonna@f ."), vec!["going", "gonna"]);
    }

    #[test]
    fn commas_and_fillers() {
        assert_eq!(
            words("well , &-um dog 0is here ."),
            vec!["well", "dog", "here"]
        );
    }

    #[test]
    fn unterminated_annotation_swallows_rest() {
        assert_eq!(words("dog [= a big"), vec!["dog"]);
    }

    #[test]
    fn empty_input() {
        let (w, t) = tokenize_utterance("");
        assert!(w.is_empty());
        assert_eq!(t, Terminator::None);
    }
}
