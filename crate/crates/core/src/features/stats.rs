//! Per-speaker language measures.
//!
//! Every measure has a pooled form over several sessions of the same child:
//! utterances are pooled across sessions, while turns never span a session
//! boundary.

use std::collections::{BTreeMap, HashMap};
use std::slice;

use serde::{Deserialize, Serialize};

use super::pos::{PosCategory, PosMap};
use super::FeatureError;
use crate::chat::{CompoundRule, MorToken, Transcript, Utterance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerStats {
    pub total_words: usize,
    pub n_utterances: usize,
    pub mean_words_per_utterance: f64,
    pub median_words_per_utterance: f64,
    /// `None` when some utterance of the speaker lacks a `%mor` tier.
    pub mlu: Option<f64>,
    pub n_turns: usize,
    pub mean_turn_len_utterances: f64,
}

/// Percentage of `%mor` words per category; all zero with `empty` set when
/// the speaker produced no tagged words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosPercentages {
    pub values: [f64; 10],
    pub empty: bool,
}

impl PosPercentages {
    pub fn get(&self, cat: PosCategory) -> f64 {
        self.values[cat.index()]
    }

    pub fn to_map(&self) -> BTreeMap<&'static str, f64> {
        PosCategory::ALL
            .iter()
            .map(|c| (c.name(), self.get(*c)))
            .collect()
    }
}

fn speaker_known(sessions: &[Transcript], speaker: &str) -> bool {
    sessions
        .iter()
        .any(|t| t.is_declared(speaker) || t.utterances_by(speaker).next().is_some())
}

fn ensure_known(sessions: &[Transcript], speaker: &str) -> Result<(), FeatureError> {
    if speaker_known(sessions, speaker) {
        Ok(())
    } else {
        Err(FeatureError::UnknownSpeaker(speaker.to_string()))
    }
}

fn pooled_utterances<'a>(
    sessions: &'a [Transcript],
    speaker: &'a str,
) -> impl Iterator<Item = &'a Utterance> + 'a {
    sessions.iter().flat_map(move |t| t.utterances_by(speaker))
}

/// Median of a list; average of the two middle values for even length,
/// `0.0` for an empty list.
pub fn median(values: &[usize]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Lengths (in utterances) of the speaker's turns, session by session.
pub fn turn_lengths(sessions: &[Transcript], speaker: &str) -> Vec<usize> {
    let mut out = Vec::new();
    for t in sessions {
        let mut run = 0usize;
        for u in &t.utterances {
            if u.speaker == speaker {
                run += 1;
            } else if run > 0 {
                out.push(run);
                run = 0;
            }
        }
        if run > 0 {
            out.push(run);
        }
    }
    out
}

fn mean_turn_len(lengths: &[usize]) -> f64 {
    if lengths.is_empty() {
        0.0
    } else {
        lengths.iter().sum::<usize>() as f64 / lengths.len() as f64
    }
}

pub fn speaker_stats(transcript: &Transcript, speaker: &str) -> Result<SpeakerStats, FeatureError> {
    speaker_stats_pooled(slice::from_ref(transcript), speaker, CompoundRule::One)
}

pub fn speaker_stats_pooled(
    sessions: &[Transcript],
    speaker: &str,
    rule: CompoundRule,
) -> Result<SpeakerStats, FeatureError> {
    ensure_known(sessions, speaker)?;
    let counts: Vec<usize> = pooled_utterances(sessions, speaker)
        .map(|u| u.words.len())
        .collect();
    let total_words: usize = counts.iter().sum();
    let n = counts.len();
    let turns = turn_lengths(sessions, speaker);
    Ok(SpeakerStats {
        total_words,
        n_utterances: n,
        mean_words_per_utterance: if n == 0 {
            0.0
        } else {
            total_words as f64 / n as f64
        },
        median_words_per_utterance: median(&counts),
        mlu: compute_mlu_pooled(sessions, speaker, rule).ok(),
        n_turns: turns.len(),
        mean_turn_len_utterances: mean_turn_len(&turns),
    })
}

pub fn compute_mlu(transcript: &Transcript, speaker: &str) -> Result<f64, FeatureError> {
    compute_mlu_pooled(slice::from_ref(transcript), speaker, CompoundRule::One)
}

/// Total morphemes over all of the speaker's utterances, divided by the
/// number of utterances (utterances with no counted words included).
pub fn compute_mlu_pooled(
    sessions: &[Transcript],
    speaker: &str,
    rule: CompoundRule,
) -> Result<f64, FeatureError> {
    ensure_known(sessions, speaker)?;
    let mut morphemes = 0usize;
    let mut n = 0usize;
    for u in pooled_utterances(sessions, speaker) {
        morphemes += u
            .morpheme_total(rule)
            .ok_or_else(|| FeatureError::MissingMorphology {
                speaker: speaker.to_string(),
                line_no: u.line_no,
            })?;
        n += 1;
    }
    if n == 0 {
        return Err(FeatureError::UndefinedMlu(speaker.to_string()));
    }
    Ok(morphemes as f64 / n as f64)
}

pub fn compute_mlt_ratio(
    transcript: &Transcript,
    child: &str,
    adult: &str,
) -> Result<f64, FeatureError> {
    compute_mlt_ratio_pooled(slice::from_ref(transcript), child, adult)
}

/// Mean turn length of `adult` divided by mean turn length of `child`.
/// Values above 1 mean the adult held the floor longer.
pub fn compute_mlt_ratio_pooled(
    sessions: &[Transcript],
    child: &str,
    adult: &str,
) -> Result<f64, FeatureError> {
    ensure_known(sessions, child)?;
    ensure_known(sessions, adult)?;
    let child_turns = turn_lengths(sessions, child);
    let adult_turns = turn_lengths(sessions, adult);
    if child_turns.is_empty() {
        return Err(FeatureError::UndefinedRatio(child.to_string()));
    }
    if adult_turns.is_empty() {
        return Err(FeatureError::UndefinedRatio(adult.to_string()));
    }
    Ok(mean_turn_len(&adult_turns) / mean_turn_len(&child_turns))
}

/// All `%mor` words of the speaker, clitics flattened, in source order.
fn mor_words<'a>(
    sessions: &'a [Transcript],
    speaker: &'a str,
) -> Result<Vec<&'a MorToken>, FeatureError> {
    let mut out = Vec::new();
    for u in pooled_utterances(sessions, speaker) {
        let toks = u
            .mor
            .as_ref()
            .ok_or_else(|| FeatureError::MissingMorphology {
                speaker: speaker.to_string(),
                line_no: u.line_no,
            })?;
        for t in toks {
            out.extend(t.flatten());
        }
    }
    Ok(out)
}

pub fn compute_pos_percentages(
    transcript: &Transcript,
    speaker: &str,
) -> Result<PosPercentages, FeatureError> {
    compute_pos_percentages_pooled(slice::from_ref(transcript), speaker, PosMap::bundled())
}

pub fn compute_pos_percentages_pooled(
    sessions: &[Transcript],
    speaker: &str,
    map: &PosMap,
) -> Result<PosPercentages, FeatureError> {
    ensure_known(sessions, speaker)?;
    let words = mor_words(sessions, speaker)?;
    let mut counts = [0usize; 10];
    for w in &words {
        counts[map.category(&w.pos).index()] += 1;
    }
    let total = words.len();
    let mut values = [0.0; 10];
    if total > 0 {
        for (v, c) in values.iter_mut().zip(counts) {
            *v = 100.0 * c as f64 / total as f64;
        }
    }
    Ok(PosPercentages {
        values,
        empty: total == 0,
    })
}

/// Distinct lemmas over total `%mor` words; `None` when there are no words.
pub fn type_token_ratio(
    sessions: &[Transcript],
    speaker: &str,
) -> Result<Option<f64>, FeatureError> {
    ensure_known(sessions, speaker)?;
    let words = mor_words(sessions, speaker)?;
    if words.is_empty() {
        return Ok(None);
    }
    let mut distinct: Vec<&str> = words.iter().map(|w| w.lemma.as_str()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    Ok(Some(distinct.len() as f64 / words.len() as f64))
}

/// Share (percent of all `%mor` words) of the speaker's 1st, 2nd, ...
/// most frequent lemma; ties ordered by lemma. At most `slots` entries.
pub fn stem_rank_frequencies(
    sessions: &[Transcript],
    speaker: &str,
    slots: usize,
) -> Result<Vec<f64>, FeatureError> {
    ensure_known(sessions, speaker)?;
    let words = mor_words(sessions, speaker)?;
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for w in &words {
        *counts.entry(w.lemma.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let total = words.len() as f64;
    Ok(ranked
        .into_iter()
        .take(slots)
        .map(|(_, c)| 100.0 * c as f64 / total)
        .collect())
}

/// The non-child speaker with the most utterances across the sessions;
/// ties go to the lexicographically smaller code.
pub fn primary_adult(sessions: &[Transcript], child: &str) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in sessions {
        for u in &t.utterances {
            if u.speaker != child {
                *counts.entry(u.speaker.as_str()).or_default() += 1;
            }
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
        .map(|(code, _)| code.to_string())
}
