//! Fixture directories: `manifest.json` plus one `.cha` file per session.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{json_error_offset, CorpusError, ParticipantRecord, RawCorpus, Session};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSession {
    pub participant_id: String,
    pub file: String,
}

/// On-disk layout of a fixture directory's `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub source_id: Option<String>,
    pub participants: Vec<ParticipantRecord>,
    pub sessions: Vec<ManifestSession>,
}

pub fn load_local_corpus(dir: &Path) -> Result<RawCorpus, CorpusError> {
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.is_file() {
        return Err(CorpusError::MissingManifest(dir.to_path_buf()));
    }
    let bytes = fs::read(&manifest_path).map_err(|e| CorpusError::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_slice(&bytes).map_err(|e| CorpusError::Payload {
        endpoint: "manifest",
        offset: json_error_offset(&bytes, &e),
        message: e.to_string(),
    })?;

    let mut sessions = Vec::with_capacity(manifest.sessions.len());
    for s in &manifest.sessions {
        let path = dir.join(&s.file);
        if !path.is_file() {
            return Err(CorpusError::MissingTranscript(path));
        }
        let chat_text = fs::read_to_string(&path).map_err(|e| CorpusError::io(&path, e))?;
        sessions.push(Session {
            participant_id: s.participant_id.clone(),
            chat_text,
        });
    }

    let source_id = manifest.source_id.unwrap_or_else(|| {
        dir.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let corpus = RawCorpus {
        source_id,
        participants: manifest.participants,
        sessions,
    };
    corpus.validate()?;
    Ok(corpus)
}

/// Writes `corpus` as a fixture directory readable by [`load_local_corpus`].
/// Session files are named `<participant>_<n>.cha`, numbered per participant.
pub fn export_local_corpus(corpus: &RawCorpus, dir: &Path) -> Result<(), CorpusError> {
    corpus.validate()?;
    fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
    let mut per_participant: HashMap<&str, usize> = HashMap::new();
    let mut sessions = Vec::with_capacity(corpus.sessions.len());
    for s in &corpus.sessions {
        let n = per_participant.entry(&s.participant_id).or_insert(0);
        *n += 1;
        let file = format!("{}_{}.cha", s.participant_id, n);
        let path = dir.join(&file);
        fs::write(&path, &s.chat_text).map_err(|e| CorpusError::io(&path, e))?;
        sessions.push(ManifestSession {
            participant_id: s.participant_id.clone(),
            file,
        });
    }
    let manifest = Manifest {
        source_id: Some(corpus.source_id.clone()),
        participants: corpus.participants.clone(),
        sessions,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| CorpusError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_dir() -> std::path::PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/golden")
    }

    #[test]
    fn loads_golden_fixture() {
        let c = load_local_corpus(&golden_dir()).unwrap();
        assert_eq!(c.participants.len(), 3);
        assert_eq!(c.sessions.len(), 3);
        assert_eq!(c.source_id, "golden");
        assert_eq!(c.participants[1].ethnicity, None);
        assert_eq!(c.participants[2].age_months, None);
    }

    #[test]
    fn empty_manifest_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("manifest.json"),
            r#"{"participants": [], "sessions": []}"#,
        )
        .unwrap();
        let c = load_local_corpus(dir.path()).unwrap();
        assert!(c.participants.is_empty() && c.sessions.is_empty());
    }

    #[test]
    fn duplicate_id_in_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let p = r#"{"participant_id": "CHI01", "group": "TD", "sex": "M", "age_months": 30, "ethnicity": null, "parent_education": null}"#;
        fs::write(
            dir.path().join("manifest.json"),
            format!(r#"{{"participants": [{p}, {p}], "sessions": []}}"#),
        )
        .unwrap();
        assert!(matches!(
            load_local_corpus(dir.path()),
            Err(CorpusError::DuplicateParticipant(id)) if id == "CHI01"
        ));
    }

    #[test]
    fn missing_manifest_and_transcript() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_local_corpus(dir.path()),
            Err(CorpusError::MissingManifest(_))
        ));
        let p = r#"{"participant_id": "A", "group": "ASD", "sex": "F", "age_months": null, "ethnicity": null, "parent_education": null}"#;
        fs::write(
            dir.path().join("manifest.json"),
            format!(r#"{{"participants": [{p}], "sessions": [{{"participant_id": "A", "file": "nope.cha"}}]}}"#),
        )
        .unwrap();
        assert!(matches!(
            load_local_corpus(dir.path()),
            Err(CorpusError::MissingTranscript(_))
        ));
    }

    #[test]
    fn export_then_load_is_identity() {
        let c = load_local_corpus(&golden_dir()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_local_corpus(&c, dir.path()).unwrap();
        assert_eq!(load_local_corpus(dir.path()).unwrap(), c);
    }
}
