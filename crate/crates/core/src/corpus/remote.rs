//! TalkBank-style HTTP acquisition with a verbatim response cache.
//!
//! A corpus is assembled from four logical requests. Each returns a JSON
//! document with one top-level section:
//!
//! | endpoint       | section          | element                                          |
//! |----------------|------------------|--------------------------------------------------|
//! | `participants` | `"participants"` | participant record (same fields as the manifest) |
//! | `tokens`       | `"tokens"`       | `{participant_id, words: [string]}`              |
//! | `utterances`   | `"utterances"`   | `{participant_id, speaker, text}`                |
//! | `transcripts`  | `"transcripts"`  | `{participant_id, chat}`                         |
//!
//! Transcripts are authoritative; tokens and utterances are checked for
//! well-formedness and participant references, and features are always
//! recomputed from the transcripts. Responses are cached as
//! `<cache_dir>/<corpus>/<endpoint>.json`; a cache is warm only when all four
//! files are present.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{json_error_offset, CorpusError, ParticipantRecord, RawCorpus, Session};
use crate::chat::{parse_transcript, tokenize_utterance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Participants,
    Tokens,
    Utterances,
    Transcripts,
}

pub const ENDPOINTS: [Endpoint; 4] = [
    Endpoint::Participants,
    Endpoint::Tokens,
    Endpoint::Utterances,
    Endpoint::Transcripts,
];

impl Endpoint {
    pub fn key(self) -> &'static str {
        match self {
            Endpoint::Participants => "participants",
            Endpoint::Tokens => "tokens",
            Endpoint::Utterances => "utterances",
            Endpoint::Transcripts => "transcripts",
        }
    }

    /// Human-readable name used in errors.
    pub fn label(self) -> &'static str {
        match self {
            Endpoint::Participants => "participant details",
            Endpoint::Tokens => "word tokens",
            Endpoint::Utterances => "word utterances",
            Endpoint::Transcripts => "transcript information",
        }
    }
}

/// URL path templates per endpoint; `{corpus}` is substituted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EndpointMap {
    pub participants: String,
    pub tokens: String,
    pub utterances: String,
    pub transcripts: String,
}

impl Default for EndpointMap {
    fn default() -> Self {
        Self {
            participants: "/api/{corpus}/participants".into(),
            tokens: "/api/{corpus}/tokens".into(),
            utterances: "/api/{corpus}/utterances".into(),
            transcripts: "/api/{corpus}/transcripts".into(),
        }
    }
}

impl EndpointMap {
    pub fn path(&self, endpoint: Endpoint, corpus: &str) -> String {
        let template = match endpoint {
            Endpoint::Participants => &self.participants,
            Endpoint::Tokens => &self.tokens,
            Endpoint::Utterances => &self.utterances,
            Endpoint::Transcripts => &self.transcripts,
        };
        template.replace("{corpus}", corpus)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TokenEntry {
    participant_id: String,
    words: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct UtteranceEntry {
    participant_id: String,
    speaker: String,
    text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TranscriptEntry {
    participant_id: String,
    chat: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParticipantsPayload {
    participants: Option<Vec<ParticipantRecord>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TokensPayload {
    tokens: Option<Vec<TokenEntry>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct UtterancesPayload {
    utterances: Option<Vec<UtteranceEntry>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TranscriptsPayload {
    transcripts: Option<Vec<TranscriptEntry>>,
}

#[derive(Debug, Clone)]
pub struct RemoteSource {
    pub base_url: String,
    pub endpoints: EndpointMap,
    pub timeout: Duration,
}

impl RemoteSource {
    pub fn new(base_url: &str) -> Self {
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            endpoints: EndpointMap::default(),
            timeout: Duration::from_secs(30),
        }
    }

    pub fn with_endpoints(mut self, endpoints: EndpointMap) -> Self {
        self.endpoints = endpoints;
        self
    }

    fn cache_path(cache_dir: &Path, corpus: &str, endpoint: Endpoint) -> PathBuf {
        cache_dir
            .join(corpus)
            .join(format!("{}.json", endpoint.key()))
    }

    fn get(
        &self,
        agent: &ureq::Agent,
        endpoint: Endpoint,
        corpus: &str,
    ) -> Result<Vec<u8>, CorpusError> {
        let url = format!("{}{}", self.base_url, self.endpoints.path(endpoint, corpus));
        let network = |e: ureq::Error| CorpusError::Network {
            endpoint: endpoint.label(),
            message: e.to_string(),
        };
        let mut resp = agent.get(&url).call().map_err(network)?;
        resp.body_mut().read_to_vec().map_err(network)
    }

    /// Fetches (or reads from cache) the four payloads and normalizes them.
    pub fn fetch(&self, corpus: &str, cache_dir: &Path) -> Result<RawCorpus, CorpusError> {
        let paths: Vec<PathBuf> = ENDPOINTS
            .iter()
            .map(|e| Self::cache_path(cache_dir, corpus, *e))
            .collect();
        let warm = paths.iter().all(|p| p.is_file());

        let mut bodies = Vec::with_capacity(4);
        if warm {
            for p in &paths {
                bodies.push(fs::read(p).map_err(|e| CorpusError::io(p, e))?);
            }
        } else {
            let dir = cache_dir.join(corpus);
            fs::create_dir_all(&dir).map_err(|e| CorpusError::io(&dir, e))?;
            let agent: ureq::Agent = ureq::Agent::config_builder()
                .timeout_global(Some(self.timeout))
                .build()
                .into();
            for (endpoint, path) in ENDPOINTS.iter().zip(&paths) {
                let body = self.get(&agent, *endpoint, corpus)?;
                fs::write(path, &body).map_err(|e| CorpusError::io(path, e))?;
                bodies.push(body);
            }
        }
        decode_payloads(corpus, &bodies[0], &bodies[1], &bodies[2], &bodies[3])
    }
}

/// Fetches `corpus_name` from `base_url` with the default endpoint map.
pub fn fetch_remote_corpus(
    base_url: &str,
    corpus_name: &str,
    cache_dir: &Path,
) -> Result<RawCorpus, CorpusError> {
    RemoteSource::new(base_url).fetch(corpus_name, cache_dir)
}

fn decode<T: for<'de> Deserialize<'de>>(
    endpoint: Endpoint,
    bytes: &[u8],
) -> Result<T, CorpusError> {
    serde_json::from_slice(bytes).map_err(|e| CorpusError::Payload {
        endpoint: endpoint.label(),
        offset: json_error_offset(bytes, &e),
        message: e.to_string(),
    })
}

fn missing(endpoint: Endpoint) -> CorpusError {
    CorpusError::Payload {
        endpoint: endpoint.label(),
        offset: 0,
        message: format!("missing `{}` section", endpoint.key()),
    }
}

fn decode_payloads(
    corpus: &str,
    participants: &[u8],
    tokens: &[u8],
    utterances: &[u8],
    transcripts: &[u8],
) -> Result<RawCorpus, CorpusError> {
    let participants = decode::<ParticipantsPayload>(Endpoint::Participants, participants)?
        .participants
        .ok_or_else(|| missing(Endpoint::Participants))?;
    let tokens = decode::<TokensPayload>(Endpoint::Tokens, tokens)?
        .tokens
        .ok_or_else(|| missing(Endpoint::Tokens))?;
    let utterances = decode::<UtterancesPayload>(Endpoint::Utterances, utterances)?
        .utterances
        .ok_or_else(|| missing(Endpoint::Utterances))?;
    let transcripts = decode::<TranscriptsPayload>(Endpoint::Transcripts, transcripts)?
        .transcripts
        .ok_or_else(|| missing(Endpoint::Transcripts))?;

    let corpus = RawCorpus {
        source_id: corpus.to_string(),
        participants,
        sessions: transcripts
            .into_iter()
            .map(|t| Session {
                participant_id: t.participant_id,
                chat_text: t.chat,
            })
            .collect(),
    };
    corpus.validate()?;
    let known = |id: &str| corpus.participant(id).is_some();
    if let Some(t) = tokens.iter().find(|t| !known(&t.participant_id)) {
        return Err(CorpusError::UnknownParticipant(t.participant_id.clone()));
    }
    if let Some(u) = utterances.iter().find(|u| !known(&u.participant_id)) {
        return Err(CorpusError::UnknownParticipant(u.participant_id.clone()));
    }
    Ok(corpus)
}

/// Renders `corpus` as the four endpoint payloads, in [`ENDPOINTS`] order.
///
/// Sessions that fail to parse contribute no tokens or utterances; the
/// transcript payload always carries the raw text.
pub fn encode_payloads(corpus: &RawCorpus) -> Vec<(Endpoint, Vec<u8>)> {
    let mut tokens = Vec::new();
    let mut utterances = Vec::new();
    for s in &corpus.sessions {
        if let Ok(t) = parse_transcript(&s.chat_text) {
            for u in &t.utterances {
                utterances.push(UtteranceEntry {
                    participant_id: s.participant_id.clone(),
                    speaker: u.speaker.clone(),
                    text: u.text.clone(),
                });
                tokens.push(TokenEntry {
                    participant_id: s.participant_id.clone(),
                    words: tokenize_utterance(&u.text).0,
                });
            }
        }
    }
    vec![
        (
            Endpoint::Participants,
            to_bytes(&ParticipantsPayload {
                participants: Some(corpus.participants.clone()),
            }),
        ),
        (
            Endpoint::Tokens,
            to_bytes(&TokensPayload {
                tokens: Some(tokens),
            }),
        ),
        (
            Endpoint::Utterances,
            to_bytes(&UtterancesPayload {
                utterances: Some(utterances),
            }),
        ),
        (
            Endpoint::Transcripts,
            to_bytes(&TranscriptsPayload {
                transcripts: Some(
                    corpus
                        .sessions
                        .iter()
                        .map(|s| TranscriptEntry {
                            participant_id: s.participant_id.clone(),
                            chat: s.chat_text.clone(),
                        })
                        .collect(),
                ),
            }),
        ),
    ]
}

fn to_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec_pretty(value).expect("payload serializes")
}
