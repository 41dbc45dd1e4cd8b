//! Writes the synthetic Nadig- and Eigsti-shaped fixture corpora.
//!
//! Usage: `cargo run -p chatscreen-cli --example synth_cohort -- <fixtures-dir>`
//!
//! Every child gets one or two free-play sessions with an adult. Cell-level
//! age, total words and words-per-utterance averages follow the published
//! cohort profile; the diagnostic groups differ in morphology (inflection
//! rate), pronoun use and how long the adult holds the floor.

use std::path::PathBuf;

use chatscreen::corpus::{export_local_corpus, Group, ParticipantRecord, RawCorpus, Session, Sex};
use chatscreen::rng::SeededStream;

struct Cell {
    group: Group,
    sex: Sex,
    n: usize,
    age: f64,
    /// Ages run from `age - age_spread` to `age + age_spread`.
    age_spread: f64,
    total_words: f64,
    mean_wpu: f64,
    median_wpu: f64,
}

/// Linguistic style of a diagnostic group.
struct Style {
    pronoun_share: f64,
    inflection_rate: f64,
    /// Mean extra utterances per child turn beyond the first.
    child_turn_extra: f64,
    adult_turn_extra: f64,
}

fn style(group: Group) -> Style {
    match group {
        Group::TD => Style {
            pronoun_share: 0.28,
            inflection_rate: 0.8,
            child_turn_extra: 0.3,
            adult_turn_extra: 0.3,
        },
        Group::DD => Style {
            pronoun_share: 0.19,
            inflection_rate: 0.45,
            child_turn_extra: 0.3,
            adult_turn_extra: 0.8,
        },
        Group::ASD => Style {
            pronoun_share: 0.08,
            inflection_rate: 0.08,
            child_turn_extra: 0.3,
            adult_turn_extra: 1.5,
        },
    }
}

struct Category {
    pos: &'static str,
    stems: &'static [&'static str],
}

const PRONOUNS: Category = Category {
    pos: "pro",
    stems: &[
        "I",
        "you",
        "it",
        "me",
        "he",
        "she",
        "we",
        "they",
        "mine",
        "him",
        "her",
        "them",
        "us",
        "yours",
        "myself",
        "something",
        "nothing",
        "everything",
        "someone",
        "what",
    ],
};

/// Non-pronoun categories with their base shares.
const CATEGORIES: [(Category, f64); 9] = [
    (
        Category {
            pos: "n",
            stems: &[
                "ball", "dog", "car", "cookie", "book", "truck", "baby", "cat", "train", "block",
                "bird", "shoe", "hat", "apple", "duck", "house", "cup", "spoon", "bear", "boat",
                "door", "bus", "fish", "cow", "horse", "pig", "sheep", "frog", "juice", "milk",
                "banana", "table", "chair", "bed", "bottle", "box", "bubble", "puzzle", "doll",
                "crayon", "paper", "plane", "tree", "flower", "sock", "coat", "bag", "key",
                "phone", "clock", "moon", "star", "sun", "water", "bath", "window", "bowl", "egg",
                "cake", "wheel",
            ],
        },
        0.34,
    ),
    (
        Category {
            pos: "v",
            stems: &[
                "jump", "push", "open", "look", "kick", "climb", "help", "play", "want", "pull",
                "roll", "fix", "walk", "talk", "cook", "wash", "paint", "dump", "turn", "crash",
                "fill", "pour", "hug", "kiss", "clean", "dance", "drop", "stack", "spill", "touch",
            ],
        },
        0.24,
    ),
    (
        Category {
            pos: "adj",
            stems: &[
                "big", "little", "red", "blue", "hot", "wet", "happy", "yummy", "green", "yellow",
                "cold", "dirty", "soft", "funny", "sad", "tall", "round", "heavy", "new", "broken",
            ],
        },
        0.08,
    ),
    (
        Category {
            pos: "adv",
            stems: &[
                "up", "down", "here", "there", "again", "now", "away", "too", "back", "out",
                "over", "off",
            ],
        },
        0.08,
    ),
    (
        Category {
            pos: "conj",
            stems: &["and", "but", "because", "or"],
        },
        0.04,
    ),
    (
        Category {
            pos: "det",
            stems: &["the", "a", "my", "your", "this", "that"],
        },
        0.1,
    ),
    (
        Category {
            pos: "prep",
            stems: &["in", "on", "with", "under", "to", "for"],
        },
        0.06,
    ),
    (
        Category {
            pos: "neg",
            stems: &["no", "not"],
        },
        0.03,
    ),
    (
        Category {
            pos: "co",
            stems: &["yes", "uhoh", "hi", "okay", "bye"],
        },
        0.03,
    ),
];

fn pick<'a, T>(rng: &mut SeededStream, xs: &'a [T]) -> &'a T {
    &xs[rng.below(xs.len())]
}

fn zipf(v: usize) -> Vec<f64> {
    let h: f64 = (1..=v).map(|r| 1.0 / r as f64).sum();
    (1..=v).map(|r| 1.0 / (r as f64 * h)).collect()
}

fn expected_ttr(p: &[f64], n_words: usize) -> f64 {
    p.iter()
        .map(|&q| 1.0 - (1.0 - q).powi(n_words as i32))
        .sum::<f64>()
        / n_words as f64
}

/// One speaker's vocabulary: (pos, stem) by frequency rank, Zipf weighted.
/// Which ranks hold pronouns is the only group-dependent part, so the
/// shape of the frequency curve carries no group signal.
struct Lexicon {
    entries: Vec<(&'static str, &'static str)>,
    weights: Vec<f64>,
}

impl Lexicon {
    /// Largest size that never runs out of non-pronoun stems.
    fn capacity() -> usize {
        CATEGORIES.iter().map(|c| c.0.stems.len()).sum::<usize>()
    }

    fn with_size(rng: &mut SeededStream, v: usize, pronoun_share: f64) -> Self {
        let weights = zipf(v);
        // Two passes from the most frequent rank down: the first skips ranks
        // at random so pronouns do not always take the top slots.
        let mut is_pronoun = vec![false; v];
        let (mut mass, mut count) = (0.0, 0);
        for pass in 0..2 {
            for r in 0..v {
                let fits = !is_pronoun[r]
                    && count < PRONOUNS.stems.len()
                    && mass + weights[r] <= pronoun_share + 0.005;
                if fits && (pass == 1 || rng.uniform() < 0.5) {
                    is_pronoun[r] = true;
                    mass += weights[r];
                    count += 1;
                }
            }
        }
        let mut pronouns = PRONOUNS.stems.to_vec();
        rng.shuffle(&mut pronouns);
        let mut pools: Vec<Vec<&'static str>> =
            CATEGORIES.iter().map(|c| c.0.stems.to_vec()).collect();
        for pool in &mut pools {
            rng.shuffle(pool);
        }
        let mut entries = Vec::with_capacity(v);
        for &pro in &is_pronoun {
            if pro {
                entries.push((PRONOUNS.pos, pronouns.pop().expect("counted")));
                continue;
            }
            let total: f64 = CATEGORIES
                .iter()
                .zip(&pools)
                .filter(|(_, p)| !p.is_empty())
                .map(|(c, _)| c.1)
                .sum();
            let mut r = rng.uniform() * total;
            let mut cat = 0;
            for (i, (c, pool)) in CATEGORIES.iter().zip(&pools).enumerate() {
                if pool.is_empty() {
                    continue;
                }
                cat = i;
                if r < c.1 {
                    break;
                }
                r -= c.1;
            }
            entries.push((
                CATEGORIES[cat].0.pos,
                pools[cat].pop().expect("non-empty pool"),
            ));
        }
        Self { entries, weights }
    }

    /// Sized so that `n_words` draws have an expected type-token ratio
    /// near `ttr`.
    fn personal(rng: &mut SeededStream, pronoun_share: f64, n_words: usize, ttr: f64) -> Self {
        let v = (10..=Self::capacity())
            .min_by(|&a, &b| {
                (expected_ttr(&zipf(a), n_words) - ttr)
                    .abs()
                    .total_cmp(&(expected_ttr(&zipf(b), n_words) - ttr).abs())
            })
            .expect("non-empty");
        Self::with_size(rng, v, pronoun_share)
    }

    /// One word as (surface, mor item).
    fn word(&self, rng: &mut SeededStream, inflection_rate: f64) -> (String, String) {
        let mut u = rng.uniform();
        let mut k = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            if u < *w {
                k = i;
                break;
            }
            u -= w;
        }
        let (pos, stem) = self.entries[k];
        let inflect = rng.uniform() < inflection_rate;
        match pos {
            "n" if inflect => (format!("{stem}s"), format!("n|{stem}-PL")),
            "v" if inflect && rng.uniform() < 0.5 => {
                (format!("{stem}ed"), format!("v|{stem}-PAST"))
            }
            "v" if inflect => (format!("{stem}ing"), format!("v|{stem}-PRESP")),
            _ => (stem.to_string(), format!("{pos}|{stem}")),
        }
    }
}

/// Utterance lengths with the given count, total and median. Values below
/// the middle lie in `1..=lo`, values above it in `hi..=9`.
fn utterance_lengths(rng: &mut SeededStream, n: usize, total: usize, median: f64) -> Vec<usize> {
    let (lo, hi) = if median.fract() == 0.0 {
        (median as usize, median as usize)
    } else {
        (median.floor() as usize, median.ceil() as usize)
    };
    let n = if lo != hi && n % 2 == 1 { n + 1 } else { n };
    let n_lower = (n - 1) / 2;
    let middle = if n % 2 == 1 { vec![lo] } else { vec![lo, hi] };
    let mut lower = vec![1usize; n_lower];
    let mut upper = vec![hi; n - n_lower - middle.len()];
    let mut sum: usize =
        lower.iter().sum::<usize>() + middle.iter().sum::<usize>() + upper.iter().sum::<usize>();
    assert!(
        sum <= total,
        "cannot reach median {median} with {n} utterances and {total} words"
    );
    // Some extra words go below the middle so short utterances vary too.
    while sum < total {
        let into_lower = lo > 1 && rng.uniform() < 0.3;
        if into_lower {
            let i = rng.below(lower.len());
            if lower[i] < lo {
                lower[i] += 1;
                sum += 1;
            }
        } else {
            let i = rng.below(upper.len());
            if upper[i] < 9 {
                upper[i] += 1;
                sum += 1;
            }
        }
    }
    let mut all: Vec<usize> = lower.into_iter().chain(middle).chain(upper).collect();
    rng.shuffle(&mut all);
    all
}

/// Mean-zero offsets spread evenly over `[-1, 1]`, in shuffled order.
fn spread(rng: &mut SeededStream, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = if n == 1 {
        vec![0.0]
    } else {
        (0..n)
            .map(|i| 2.0 * i as f64 / (n - 1) as f64 - 1.0)
            .collect()
    };
    rng.shuffle(&mut v);
    v
}

/// Per-child medians on the half-integer grid whose average is closest to
/// `target`.
fn medians(rng: &mut SeededStream, n: usize, target: f64) -> Vec<f64> {
    let base = (target * 2.0).floor() / 2.0;
    let k = (((target - base) / 0.5) * n as f64).round() as usize;
    let mut v: Vec<f64> = (0..n)
        .map(|i| if i < k { base + 0.5 } else { base })
        .collect();
    rng.shuffle(&mut v);
    v
}

fn age_string(months: u32) -> String {
    format!("{};{}.", months / 12, months % 12)
}

const ETHNICITIES: &[&str] = &[
    "White",
    "White",
    "White",
    "LatinX",
    "African-American",
    "Asian",
];
const EDUCATION: &[&str] = &[
    "1_high_school",
    "2_some_college",
    "3_bachelor",
    "4_graduate",
];

struct ChildPlan {
    id: String,
    group: Group,
    sex: Sex,
    lengths: Vec<usize>,
    lexicon: Lexicon,
}

fn session_text(
    rng: &mut SeededStream,
    corpus: &str,
    plan: &ChildPlan,
    lengths: &[usize],
    adult: (&str, &str),
    age: Option<u32>,
) -> String {
    let st = style(plan.group);
    let adult_lexicon = Lexicon::with_size(rng, Lexicon::capacity(), 0.2);
    let mut out = String::new();
    out.push_str("@UTF8\n@Begin\n@Languages:\teng\n");
    out.push_str(&format!(
        "@Participants:\tCHI Target_Child, {} {}\n",
        adult.0, adult.1
    ));
    let sex = match plan.sex {
        Sex::M => "male",
        Sex::F => "female",
    };
    let age = age.map(age_string).unwrap_or_default();
    out.push_str(&format!(
        "@ID:\teng|{corpus}|CHI|{age}|{sex}|{}||Target_Child|||\n",
        plan.group.as_str()
    ));
    out.push_str(&format!(
        "@ID:\teng|{corpus}|{}|||||{}|||\n",
        adult.0, adult.1
    ));

    let extra = |rng: &mut SeededStream, mean: f64| -> usize {
        // Geometric number of extra utterances with the given mean.
        let p = 1.0 / (1.0 + mean);
        let mut k = 0;
        while rng.uniform() > p && k < 4 {
            k += 1;
        }
        k
    };
    let mut i = 0;
    while i < lengths.len() {
        let adult_utts = 1 + extra(rng, st.adult_turn_extra);
        for _ in 0..adult_utts {
            let len = 3 + rng.below(4);
            let words: Vec<(String, String)> =
                (0..len).map(|_| adult_lexicon.word(rng, 0.35)).collect();
            push_utterance(&mut out, adult.0, &words, rng.uniform() < 0.4);
        }
        let child_utts = (1 + extra(rng, st.child_turn_extra)).min(lengths.len() - i);
        for _ in 0..child_utts {
            let words: Vec<(String, String)> = (0..lengths[i])
                .map(|_| plan.lexicon.word(rng, st.inflection_rate))
                .collect();
            push_utterance(&mut out, "CHI", &words, false);
            i += 1;
        }
    }
    out.push_str("@End\n");
    out
}

fn push_utterance(out: &mut String, speaker: &str, words: &[(String, String)], question: bool) {
    let term = if question { "?" } else { "." };
    let surface: Vec<&str> = words.iter().map(|w| w.0.as_str()).collect();
    let mor: Vec<&str> = words.iter().map(|w| w.1.as_str()).collect();
    out.push_str(&format!("*{speaker}:\t{} {term}\n", surface.join(" ")));
    out.push_str(&format!("%mor:\t{} {term}\n", mor.join(" ")));
}

/// `ttr` bounds the per-child type-token ratio targets, which are drawn
/// independently of group.
fn build(
    source_id: &str,
    prefix: &str,
    adult: (&str, &str),
    cells: &[Cell],
    ttr: (f64, f64),
    seed: u64,
) -> RawCorpus {
    let mut rng = SeededStream::new(seed, source_id);
    let mut participants = Vec::new();
    let mut sessions = Vec::new();
    let mut serial = 0;
    for cell in cells {
        let age_off = spread(&mut rng, cell.n);
        let words_off = spread(&mut rng, cell.n);
        let mean_off = spread(&mut rng, cell.n);
        let meds = medians(&mut rng, cell.n, cell.median_wpu);
        for c in 0..cell.n {
            serial += 1;
            let id = format!("{prefix}{serial:02}");
            let total = (cell.total_words * (1.0 + 0.06 * words_off[c])).round() as usize;
            // Keep the per-child mean clear of the median so the length
            // construction stays feasible.
            let floor = (1.0 + meds[c].ceil()) / 2.0 + 0.05;
            let mean = (cell.mean_wpu + 0.3 * mean_off[c]).max(floor);
            let n_utt = ((total as f64 / mean).round() as usize).max(3);
            let lengths = utterance_lengths(&mut rng, n_utt, total, meds[c]);
            let age = (cell.age + cell.age_spread * age_off[c]).round() as u32;
            let target_ttr = ttr.0 + (ttr.1 - ttr.0) * rng.uniform();
            let plan = ChildPlan {
                id: id.clone(),
                group: cell.group,
                sex: cell.sex,
                lexicon: Lexicon::personal(
                    &mut rng,
                    style(cell.group).pronoun_share,
                    total,
                    target_ttr,
                ),
                lengths,
            };
            // Every fifth child has two recorded sessions.
            let split_at = if serial % 5 == 0 {
                plan.lengths.len() / 2
            } else {
                0
            };
            let chunks: Vec<&[usize]> = if split_at > 0 {
                vec![&plan.lengths[..split_at], &plan.lengths[split_at..]]
            } else {
                vec![&plan.lengths[..]]
            };
            for chunk in chunks {
                let text = session_text(&mut rng, source_id, &plan, chunk, adult, Some(age));
                sessions.push(Session {
                    participant_id: id.clone(),
                    chat_text: text,
                });
            }
            let ethnicity = (serial % 9 != 4).then(|| pick(&mut rng, ETHNICITIES).to_string());
            let parent_education = (serial % 7 != 3).then(|| pick(&mut rng, EDUCATION).to_string());
            participants.push(ParticipantRecord {
                participant_id: plan.id,
                group: cell.group,
                sex: cell.sex,
                age_months: (serial % 13 != 6).then_some(age),
                ethnicity,
                parent_education,
            });
        }
    }
    RawCorpus {
        source_id: source_id.to_string(),
        participants,
        sessions,
    }
}

fn cell(
    group: Group,
    sex: Sex,
    n: usize,
    (age, age_spread): (f64, f64),
    total_words: f64,
    mean_wpu: f64,
    median_wpu: f64,
) -> Cell {
    Cell {
        group,
        sex,
        n,
        age,
        age_spread,
        total_words,
        mean_wpu,
        median_wpu,
    }
}

fn main() {
    let dir: PathBuf = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("crates/core/fixtures"));
    use Group::*;
    use Sex::*;
    let nadig = [
        cell(TD, M, 15, (29.0, 17.0), 161.0, 2.4, 2.0),
        cell(TD, F, 11, (34.0, 17.0), 233.0, 2.8, 2.3),
        cell(ASD, M, 10, (61.0, 13.0), 120.0, 2.0, 2.0),
        cell(ASD, F, 2, (53.0, 13.0), 68.0, 1.6, 1.5),
    ];
    let eigsti = [
        cell(TD, M, 13, (40.0, 4.0), 518.0, 3.4, 2.8),
        cell(TD, F, 3, (45.0, 4.0), 383.0, 2.6, 1.75),
        cell(DD, M, 14, (57.0, 10.0), 520.0, 3.5, 3.0),
        cell(DD, F, 2, (54.0, 10.0), 508.0, 3.6, 2.5),
        cell(ASD, M, 12, (56.0, 12.0), 165.0, 2.6, 3.0),
        cell(ASD, F, 4, (55.0, 12.0), 145.0, 2.9, 3.0),
    ];
    let corpora = [
        build("nadig", "N", ("MOT", "Mother"), &nadig, (0.3, 0.45), 0),
        build(
            "eigsti",
            "E",
            ("INV", "Investigator"),
            &eigsti,
            (0.15, 0.25),
            0,
        ),
    ];
    for corpus in &corpora {
        let out = dir.join(&corpus.source_id);
        if let Err(e) = export_local_corpus(corpus, &out) {
            eprintln!("{}: {e}", out.display());
            std::process::exit(1);
        }
        println!(
            "wrote {} ({} participants)",
            out.display(),
            corpus.participants.len()
        );
    }
}
