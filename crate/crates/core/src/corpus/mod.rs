//! Raw corpus material: participant records plus CHAT session text.
//!
//! Two acquisition routes produce the same [`RawCorpus`]: a local fixture
//! directory ([`load_local_corpus`]) and a TalkBank-style HTTP source with an
//! on-disk response cache ([`fetch_remote_corpus`]).

mod local;
mod remote;

pub use local::{export_local_corpus, load_local_corpus, Manifest, ManifestSession};
pub use remote::{
    encode_payloads, fetch_remote_corpus, Endpoint, EndpointMap, RemoteSource, ENDPOINTS,
};

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    TD,
    ASD,
    DD,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::TD, Group::ASD, Group::DD];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::TD => "TD",
            Group::ASD => "ASD",
            Group::DD => "DD",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.as_str() == s)
    }
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sex {
    M,
    F,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::M => "M",
            Sex::F => "F",
        }
    }
}

/// Demographics and diagnostic group of one child. Absent optional fields
/// are carried as `None` and become masked cells in the feature matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipantRecord {
    pub participant_id: String,
    pub group: Group,
    pub sex: Sex,
    pub age_months: Option<u32>,
    pub ethnicity: Option<String>,
    pub parent_education: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub participant_id: String,
    pub chat_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCorpus {
    pub source_id: String,
    pub participants: Vec<ParticipantRecord>,
    pub sessions: Vec<Session>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no manifest.json in {0}")]
    MissingManifest(PathBuf),
    #[error("manifest references missing transcript {0}")]
    MissingTranscript(PathBuf),
    #[error("duplicate participant id `{0}`")]
    DuplicateParticipant(String),
    #[error("session references unknown participant `{0}`")]
    UnknownParticipant(String),
    #[error("participant `{id}`: {reason}")]
    InvalidParticipant { id: String, reason: &'static str },
    #[error("{endpoint}: malformed payload at byte {offset}: {message}")]
    Payload {
        endpoint: &'static str,
        offset: usize,
        message: String,
    },
    #[error("{endpoint}: request failed (retriable): {message}")]
    Network {
        endpoint: &'static str,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, CorpusError::Network { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            source,
        }
    }
}

impl RawCorpus {
    /// Checks id uniqueness, session references and field ranges.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = HashSet::new();
        for p in &self.participants {
            if !seen.insert(p.participant_id.as_str()) {
                return Err(CorpusError::DuplicateParticipant(p.participant_id.clone()));
            }
            if p.participant_id.is_empty() {
                return Err(CorpusError::InvalidParticipant {
                    id: String::new(),
                    reason: "empty participant id",
                });
            }
            if p.age_months == Some(0) {
                return Err(CorpusError::InvalidParticipant {
                    id: p.participant_id.clone(),
                    reason: "age_months must be positive when present",
                });
            }
        }
        for s in &self.sessions {
            if !seen.contains(s.participant_id.as_str()) {
                return Err(CorpusError::UnknownParticipant(s.participant_id.clone()));
            }
        }
        Ok(())
    }

    pub fn participant(&self, id: &str) -> Option<&ParticipantRecord> {
        self.participants.iter().find(|p| p.participant_id == id)
    }

    pub fn sessions_of<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Session> + 'a {
        self.sessions.iter().filter(move |s| s.participant_id == id)
    }

    /// Participant counts per group, in `Group` order, omitting empty groups.
    pub fn group_counts(&self) -> Vec<(Group, usize)> {
        Group::ALL
            .into_iter()
            .map(|g| (g, self.participants.iter().filter(|p| p.group == g).count()))
            .filter(|(_, n)| *n > 0)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("corpus serializes")
    }
}

/// Byte offset of a serde_json error position within `bytes`.
pub(crate) fn json_error_offset(bytes: &[u8], err: &serde_json::Error) -> usize {
    let (line, column) = (err.line(), err.column());
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in bytes.split(|b| *b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(bytes.len());
        }
        offset += l.len() + 1;
    }
    bytes.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str) -> ParticipantRecord {
        ParticipantRecord {
            participant_id: id.into(),
            group: Group::TD,
            sex: Sex::F,
            age_months: Some(30),
            ethnicity: None,
            parent_education: None,
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let c = RawCorpus {
            source_id: "x".into(),
            participants: vec![record("CHI01"), record("CHI01")],
            sessions: vec![],
        };
        assert!(
            matches!(c.validate(), Err(CorpusError::DuplicateParticipant(id)) if id == "CHI01")
        );
    }

    #[test]
    fn dangling_session_rejected() {
        let c = RawCorpus {
            source_id: "x".into(),
            participants: vec![record("A")],
            sessions: vec![Session {
                participant_id: "B".into(),
                chat_text: String::new(),
            }],
        };
        assert!(matches!(
            c.validate(),
            Err(CorpusError::UnknownParticipant(_))
        ));
    }

    #[test]
    fn zero_age_rejected() {
        let mut r = record("A");
        r.age_months = Some(0);
        let c = RawCorpus {
            source_id: "x".into(),
            participants: vec![r],
            sessions: vec![],
        };
        assert!(matches!(
            c.validate(),
            Err(CorpusError::InvalidParticipant { .. })
        ));
    }

    #[test]
    fn error_offset_counts_lines() {
        let bytes = b"{\n  \"a\": tru\n}";
        let err = serde_json::from_slice::<serde_json::Value>(bytes).unwrap_err();
        let off = json_error_offset(bytes, &err);
        assert!(off > 2 && off <= bytes.len(), "{off}");
    }
}
