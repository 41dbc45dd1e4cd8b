//! CHAT transcript parsing ("CHAT-subset v1").
//!
//! Supported line kinds:
//!
//! * `@Key:\tvalue` and bare `@Key` headers (`@Participants` is interpreted,
//!   everything else is kept verbatim);
//! * `*SPK:\ttext` main tiers;
//! * `%tier:\ttext` dependent tiers, attached to the preceding main tier;
//!   `%mor` is parsed, all other tiers are kept as opaque text;
//! * continuation lines starting with a tab, joined to the previous line
//!   with a single space.
//!
//! Blank lines are ignored. Anything else is a malformed-line error.

mod mor;
mod tokenize;

pub use mor::{parse_mor_item, parse_mor_tier, CompoundRule, MorError, MorToken};
pub use tokenize::{tokenize_utterance, Terminator};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty transcript")]
    Empty,
    #[error("invalid UTF-8 at byte {offset}")]
    InvalidUtf8 { offset: usize },
    #[error("line {line}: dependent tier before main tier")]
    DependentBeforeMain { line: usize },
    #[error("line {line}: utterance before any @Participants declaration")]
    MissingParticipants { line: usize },
    #[error("line {line}: speaker `{speaker}` is not declared in @Participants")]
    UndeclaredSpeaker { line: usize, speaker: String },
    #[error("line {line}: malformed tier marker: {reason}")]
    MalformedTier { line: usize, reason: &'static str },
    #[error("line {line}: {source}")]
    MalformedMor { line: usize, source: MorError },
}

/// What to do with a main tier whose speaker is missing from `@Participants`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeakerPolicy {
    #[default]
    Warn,
    Error,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOptions {
    pub undeclared_speaker: SpeakerPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    /// Keyword without the leading `@`, e.g. `Participants`.
    pub key: String,
    /// `None` for bare headers such as `@Begin`.
    pub value: Option<String>,
    /// Number of utterances that precede this header in the source.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub code: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependentTier {
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: String,
    /// Main-tier text as written, without the `*SPK:` marker.
    pub text: String,
    pub words: Vec<String>,
    pub terminator: Terminator,
    pub mor: Option<Vec<MorToken>>,
    /// All dependent tiers in source order, `%mor` included.
    pub dependents: Vec<DependentTier>,
    pub line_no: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub headers: Vec<Header>,
    pub participants: Vec<Participant>,
    pub utterances: Vec<Utterance>,
}

impl Utterance {
    pub fn morpheme_total(&self, rule: CompoundRule) -> Option<usize> {
        self.mor
            .as_ref()
            .map(|m| m.iter().map(|t| t.morpheme_count_with(rule)).sum())
    }
}

impl Transcript {
    pub fn header(&self, key: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|h| h.key == key)
            .and_then(|h| h.value.as_deref())
    }

    pub fn is_declared(&self, code: &str) -> bool {
        self.participants.iter().any(|p| p.code == code)
    }

    /// Speaker codes that own at least one utterance, in first-seen order.
    pub fn speakers(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for u in &self.utterances {
            if !out.contains(&u.speaker.as_str()) {
                out.push(&u.speaker);
            }
        }
        out
    }

    pub fn utterances_by<'a>(
        &'a self,
        speaker: &'a str,
    ) -> impl Iterator<Item = &'a Utterance> + 'a {
        self.utterances.iter().filter(move |u| u.speaker == speaker)
    }

    /// Serializes back to CHAT text.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let mut headers = self.headers.iter().peekable();
        for (i, u) in self.utterances.iter().enumerate() {
            while let Some(h) = headers.next_if(|h| h.position <= i) {
                push_header(&mut out, h);
            }
            out.push_str(&format!("*{}:\t{}\n", u.speaker, u.text));
            for d in &u.dependents {
                out.push_str(&format!("%{}:\t{}\n", d.name, d.text));
            }
        }
        for h in headers {
            push_header(&mut out, h);
        }
        out
    }

    /// Canonical JSON form (field order fixed by the type definitions).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }
}

fn push_header(out: &mut String, h: &Header) {
    match &h.value {
        Some(v) => out.push_str(&format!("@{}:\t{}\n", h.key, v)),
        None => out.push_str(&format!("@{}\n", h.key)),
    }
}

fn valid_code(code: &str) -> bool {
    !code.is_empty()
        && code
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Splits `marker:rest` at the first colon, validating the marker.
fn split_tier(body: &str, line: usize) -> Result<(&str, &str), ParseError> {
    let (code, rest) = body.split_once(':').ok_or(ParseError::MalformedTier {
        line,
        reason: "missing `:`",
    })?;
    if !valid_code(code) {
        return Err(ParseError::MalformedTier {
            line,
            reason: "invalid tier code",
        });
    }
    Ok((code, rest.trim()))
}

fn parse_participants(value: &str) -> Vec<Participant> {
    value
        .split(',')
        .filter_map(|entry| {
            let mut parts = entry.split_whitespace();
            let code = parts.next()?;
            Some(Participant {
                code: code.to_string(),
                description: parts.collect::<Vec<_>>().join(" "),
            })
        })
        .collect()
}

/// Joins tab-continued lines onto their predecessor. Returns
/// `(first physical line number, logical text)` pairs.
fn logical_lines(text: &str) -> Result<Vec<(usize, String)>, ParseError> {
    let mut out: Vec<(usize, String)> = Vec::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.starts_with('\t') {
            let (_, prev) = out.last_mut().ok_or(ParseError::MalformedTier {
                line: idx + 1,
                reason: "continuation line with nothing to continue",
            })?;
            let cont = line.trim();
            if !cont.is_empty() {
                prev.push(' ');
                prev.push_str(cont);
            }
        } else {
            out.push((idx + 1, line.to_string()));
        }
    }
    Ok(out)
}

/// Parses CHAT text with default options, logging warnings.
pub fn parse_transcript(text: &str) -> Result<Transcript, ParseError> {
    let (t, warnings) = parse_transcript_with(text, &ParseOptions::default())?;
    for w in warnings {
        log::warn!("line {}: {}", w.line, w.message);
    }
    Ok(t)
}

/// Parses raw bytes, rejecting invalid UTF-8 with its byte offset.
pub fn parse_transcript_bytes(
    bytes: &[u8],
    opts: &ParseOptions,
) -> Result<(Transcript, Vec<ParseWarning>), ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ParseError::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    parse_transcript_with(text, opts)
}

pub fn parse_transcript_with(
    text: &str,
    opts: &ParseOptions,
) -> Result<(Transcript, Vec<ParseWarning>), ParseError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }

    let mut headers = Vec::new();
    let mut participants: Vec<Participant> = Vec::new();
    let mut declared_any = false;
    let mut utterances: Vec<Utterance> = Vec::new();
    let mut warnings = Vec::new();

    for (line, content) in logical_lines(text)? {
        if content.trim().is_empty() {
            continue;
        }
        if let Some(body) = content.strip_prefix('@') {
            let (key, value) = match body.split_once(':') {
                Some((k, v)) => (k.trim_end(), Some(v.trim().to_string())),
                None => (body.trim_end(), None),
            };
            if key.is_empty() {
                return Err(ParseError::MalformedTier {
                    line,
                    reason: "empty header keyword",
                });
            }
            if key == "Participants" {
                declared_any = true;
                participants.extend(parse_participants(value.as_deref().unwrap_or("")));
            }
            headers.push(Header {
                key: key.to_string(),
                value,
                position: utterances.len(),
            });
        } else if let Some(body) = content.strip_prefix('*') {
            let (speaker, text) = split_tier(body, line)?;
            if !declared_any {
                return Err(ParseError::MissingParticipants { line });
            }
            if !participants.iter().any(|p| p.code == speaker) {
                match opts.undeclared_speaker {
                    SpeakerPolicy::Error => {
                        return Err(ParseError::UndeclaredSpeaker {
                            line,
                            speaker: speaker.to_string(),
                        })
                    }
                    SpeakerPolicy::Warn => warnings.push(ParseWarning {
                        line,
                        message: format!("speaker `{speaker}` not declared in @Participants"),
                    }),
                }
            }
            let (words, terminator) = tokenize_utterance(text);
            utterances.push(Utterance {
                speaker: speaker.to_string(),
                text: text.to_string(),
                words,
                terminator,
                mor: None,
                dependents: Vec::new(),
                line_no: line,
            });
        } else if let Some(body) = content.strip_prefix('%') {
            let (name, text) = split_tier(body, line)?;
            let utt = utterances
                .last_mut()
                .ok_or(ParseError::DependentBeforeMain { line })?;
            if name == "mor" {
                if utt.mor.is_some() {
                    return Err(ParseError::MalformedTier {
                        line,
                        reason: "second %mor tier on one utterance",
                    });
                }
                let toks = parse_mor_tier(text)
                    .map_err(|source| ParseError::MalformedMor { line, source })?;
                if toks.len() != utt.words.len() {
                    warnings.push(ParseWarning {
                        line,
                        message: format!(
                            "%mor has {} items but the main tier has {} words",
                            toks.len(),
                            utt.words.len()
                        ),
                    });
                }
                utt.mor = Some(toks);
            }
            utt.dependents.push(DependentTier {
                name: name.to_string(),
                text: text.to_string(),
            });
        } else {
            return Err(ParseError::MalformedTier {
                line,
                reason: "line does not start with @, *, % or tab",
            });
        }
    }

    Ok((
        Transcript {
            headers,
            participants,
            utterances,
        },
        warnings,
    ))
}
