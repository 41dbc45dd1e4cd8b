//! Hand-tallied expected values for the three golden CHAT fixtures.

use std::path::{Path, PathBuf};
use std::slice;

use chatscreen::chat::{parse_mor_item, parse_transcript, CompoundRule, Transcript};
use chatscreen::features::{
    compute_mlt_ratio, compute_mlu, compute_mlu_pooled, compute_pos_percentages, primary_adult,
    speaker_stats, type_token_ratio, PosCategory,
};
use serde_json::Value;

const TOL: f64 = 1e-9;

fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/golden")
}

fn expected() -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir().join("expected.json")).unwrap()).unwrap()
}

fn load(name: &str) -> (String, Transcript) {
    let text = std::fs::read_to_string(dir().join(format!("{name}.cha"))).unwrap();
    let t = parse_transcript(&text).unwrap();
    (text, t)
}

fn close(a: f64, b: f64, what: &str) {
    assert!((a - b).abs() <= TOL, "{what}: got {a}, expected {b}");
}

fn check_stats(t: &Transcript, speaker: &str, exp: &Value, what: &str) {
    let s = speaker_stats(t, speaker).unwrap();
    assert_eq!(
        s.total_words as u64,
        exp["total_words"].as_u64().unwrap(),
        "{what}"
    );
    assert_eq!(
        s.n_utterances as u64,
        exp["n_utterances"].as_u64().unwrap(),
        "{what}"
    );
    assert_eq!(s.n_turns as u64, exp["n_turns"].as_u64().unwrap(), "{what}");
    close(
        s.mean_words_per_utterance,
        exp["mean"].as_f64().unwrap(),
        what,
    );
    close(
        s.median_words_per_utterance,
        exp["median"].as_f64().unwrap(),
        what,
    );
    close(
        s.mean_turn_len_utterances,
        exp["mean_turn_len"].as_f64().unwrap(),
        what,
    );
}

fn check_pos(t: &Transcript, speaker: &str, exp: &Value, what: &str) {
    let p = compute_pos_percentages(t, speaker).unwrap();
    for c in PosCategory::ALL {
        close(
            p.get(c),
            exp[c.name()].as_f64().unwrap(),
            &format!("{what} {}", c.name()),
        );
    }
    close(p.values.iter().sum::<f64>(), 100.0, what);
}

#[test]
fn golden_fixtures_match_hand_counts() {
    let exp = expected();
    for name in ["golden_a", "golden_b", "golden_c"] {
        let e = &exp[name];
        let (_, t) = load(name);
        let child = e["child"].as_str().unwrap();
        let adult = e["adult"].as_str().unwrap();

        let counts: Vec<u64> = t
            .utterances_by(child)
            .map(|u| u.words.len() as u64)
            .collect();
        let want: Vec<u64> = e["child_word_counts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .collect();
        assert_eq!(counts, want, "{name} word counts");

        check_stats(&t, child, &e["child_stats"], &format!("{name} child stats"));
        check_stats(&t, adult, &e["adult_stats"], &format!("{name} adult stats"));
        close(
            compute_mlu(&t, child).unwrap(),
            e["child_mlu"].as_f64().unwrap(),
            name,
        );
        close(
            compute_mlu_pooled(slice::from_ref(&t), child, CompoundRule::Parts).unwrap(),
            e["child_mlu_compound_parts"].as_f64().unwrap(),
            name,
        );
        close(
            compute_mlu(&t, adult).unwrap(),
            e["adult_mlu"].as_f64().unwrap(),
            name,
        );
        assert_eq!(
            primary_adult(slice::from_ref(&t), child).as_deref(),
            Some(adult)
        );

        let ratio = compute_mlt_ratio(&t, child, adult).unwrap();
        close(ratio, e["mlt_ratio"].as_f64().unwrap(), name);
        let inverse = compute_mlt_ratio(&t, adult, child).unwrap();
        assert!((ratio * inverse - 1.0).abs() <= 1e-12, "{name} reciprocal");

        check_pos(&t, child, &e["child_pos"], &format!("{name} child"));
        check_pos(&t, adult, &e["adult_pos"], &format!("{name} adult"));
        close(
            type_token_ratio(slice::from_ref(&t), child)
                .unwrap()
                .unwrap(),
            e["child_ttr"].as_f64().unwrap(),
            name,
        );
    }
}

#[test]
fn golden_morpheme_counts() {
    let exp = expected();
    for (item, count) in exp["morpheme_counts"].as_object().unwrap() {
        assert_eq!(
            parse_mor_item(item).unwrap().morpheme_count() as u64,
            count.as_u64().unwrap(),
            "{item}"
        );
    }
}

#[test]
fn golden_fixtures_round_trip() {
    for name in ["golden_a", "golden_b", "golden_c"] {
        let (text, t) = load(name);
        assert_eq!(t.emit(), text, "{name} emit");
        assert_eq!(parse_transcript(&t.emit()).unwrap(), t, "{name} reparse");
        for u in &t.utterances {
            let line = text.lines().nth(u.line_no - 1).unwrap();
            assert!(line.starts_with('*'), "{name} line {}", u.line_no);
            if let Some(mor) = &u.mor {
                assert_eq!(
                    mor.len(),
                    u.words.len(),
                    "{name} alignment at line {}",
                    u.line_no
                );
            }
        }
    }
}
