use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adapters::{alternating_speaker, family_component};
use crate::model::{Dialog, DialogItem, Split, Turn};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthFamily {
    Emotion,
    DialogAct,
    Persona,
    Knowledge,
}

impl SynthFamily {
    pub const ALL: [SynthFamily; 4] = [
        SynthFamily::Emotion,
        SynthFamily::DialogAct,
        SynthFamily::Persona,
        SynthFamily::Knowledge,
    ];

    pub fn kind(self) -> &'static str {
        match self {
            SynthFamily::Emotion => "emotion",
            SynthFamily::DialogAct => "dialog_act",
            SynthFamily::Persona => "persona",
            SynthFamily::Knowledge => "knowledge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub dataset: String,
    pub min_turns: usize,
    pub max_turns: usize,
    pub families: Vec<SynthFamily>,
    pub split: Option<Split>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dataset: "synthetic".into(),
            min_turns: 2,
            max_turns: 8,
            families: SynthFamily::ALL.to_vec(),
            split: None,
        }
    }
}

const EMOTIONS: &[&str] = &["neutral", "happy", "sad", "angry", "surprise", "fear", "disgust"];
const ACTS: &[&str] = &["inform", "question", "directive", "commissive"];
const NOUNS: &[&str] = &[
    "weekend", "mountains", "song", "flat", "university", "garden", "coffee", "museum", "train",
    "guitar", "concert", "kitchen", "library", "river", "office", "dinner", "movie", "beach",
    "holiday", "bicycle", "market", "painting", "recipe", "festival", "teacher", "window",
    "camera", "airport", "village", "forest",
];
const ADJECTIVES: &[&str] = &[
    "catchy", "playful", "quiet", "expensive", "famous", "tiny", "bright", "strange", "lovely",
    "crowded", "furnished", "ancient", "comfortable", "noisy", "sunny",
];
const VERBS: &[&str] = &[
    "visit", "enjoy", "remember", "prefer", "recommend", "borrow", "cook", "paint", "explore",
    "repair", "follow", "describe", "organize", "imagine", "carry",
];
const GLUE: &[&str] = &[
    "the", "a", "and", "with", "for", "to", "my", "your", "this", "in", "at", "very", "some",
    "we", "i", "you", "it", "is", "was", "should",
];
const OPENERS: &[&str] = &["Yes", "Well", "Oh", "Absolutely", "Really", "Hi"];
const ENDINGS: &[&str] = &[".", ".", ".", "?", "!"];

/// Deterministic synthetic corpus with configurable item families.
///
/// The first `max_turns - min_turns + 1` dialogs cycle through every turn
/// count so all lengths are represented; later dialogs draw the count at
/// random.
pub fn synth_corpus(seed: u64, n_dialogs: usize, config: &SynthConfig) -> Vec<Dialog> {
    let min_turns = config.min_turns.max(1);
    let max_turns = config.max_turns.max(min_turns);
    let span = max_turns - min_turns + 1;
    (0..n_dialogs)
        .map(|i| {
            let dialog_id = format!("{}-{:05}", config.dataset, i);
            let mut rng = seed::rng(seed::derive_seed(seed, "synth", &dialog_id));
            let n_turns = if i < span {
                min_turns + i
            } else {
                rng.gen_range(min_turns..=max_turns)
            };
            synth_dialog(&mut rng, dialog_id, n_turns, config)
        })
        .collect()
}

fn synth_dialog(rng: &mut ChaCha8Rng, dialog_id: String, n_turns: usize, config: &SynthConfig) -> Dialog {
    let has = |f: SynthFamily| config.families.contains(&f);
    let mut turns = Vec::with_capacity(n_turns);
    for i in 0..n_turns {
        let mut turn = Turn::new(alternating_speaker(i), sentence(rng));
        if has(SynthFamily::Emotion) {
            turn.items.push(item(SynthFamily::Emotion, pick(rng, EMOTIONS), i));
        }
        if has(SynthFamily::DialogAct) {
            turn.items.push(item(SynthFamily::DialogAct, pick(rng, ACTS), i));
        }
        if has(SynthFamily::Persona) && i < 2 {
            let n = rng.gen_range(2..=4);
            let mut nouns: Vec<&str> = NOUNS.to_vec();
            nouns.shuffle(rng);
            for noun in nouns.into_iter().take(n) {
                let line = match rng.gen_range(0..3) {
                    0 => format!("i like the {noun} ."),
                    1 => format!("my favorite place is the {} {noun} .", pick(rng, ADJECTIVES)),
                    _ => format!("i often {} a {noun} .", pick(rng, VERBS)),
                };
                turn.items.push(item(SynthFamily::Persona, &line, i));
            }
        }
        if has(SynthFamily::Knowledge) {
            let noun = pick(rng, NOUNS);
            let text = format!(
                "A {noun} is often described as {} and {} .",
                pick(rng, ADJECTIVES),
                pick(rng, ADJECTIVES)
            );
            turn.items.push(item(SynthFamily::Knowledge, &text, i));
        }
        turns.push(turn);
    }
    Dialog {
        dialog_id,
        dataset: config.dataset.clone(),
        split: config.split,
        turns,
    }
}

fn item(family: SynthFamily, value: &str, turn: usize) -> DialogItem {
    let component = family_component(family.kind()).expect("synthetic families have fixed components");
    DialogItem::new(component, family.kind(), value, turn)
}

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).copied().expect("non-empty vocabulary")
}

/// A pre-tokenized utterance of 3 to 32 tokens, punctuation space-separated.
fn sentence(rng: &mut ChaCha8Rng) -> String {
    let len = match rng.gen_range(0..100) {
        0..=39 => rng.gen_range(3..=10),
        40..=74 => rng.gen_range(11..=20),
        _ => rng.gen_range(21..=32),
    };
    let mut toks: Vec<String> = Vec::with_capacity(len);
    if len >= 6 && rng.gen_bool(0.3) {
        toks.push(pick(rng, OPENERS).to_string());
        toks.push(if rng.gen_bool(0.5) { "," } else { "." }.to_string());
    }
    // At least one content word so keyword derivation always has material.
    toks.push(pick(rng, NOUNS).to_string());
    while toks.len() < len - 1 {
        let r = rng.gen_range(0..10);
        let w = match r {
            0..=3 => pick(rng, GLUE),
            4..=5 => pick(rng, NOUNS),
            6..=7 => pick(rng, VERBS),
            8 => pick(rng, ADJECTIVES),
            _ if toks.last().is_some_and(|t| t != ",") && toks.len() + 2 < len => ",",
            _ => pick(rng, GLUE),
        };
        toks.push(w.to_string());
    }
    toks.push(pick(rng, ENDINGS).to_string());
    if let Some(first) = toks.first_mut() {
        let mut cs = first.chars();
        if let Some(c) = cs.next() {
            *first = c.to_uppercase().chain(cs).collect();
        }
    }
    toks.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::to_canonical_line;
    use crate::model::ComponentKind;
    use crate::text::token_count;
    use std::collections::BTreeSet;

    fn bytes(d: &[Dialog]) -> String {
        d.iter().map(to_canonical_line).collect::<Vec<_>>().join("\n")
    }

    #[test]
    fn same_seed_same_bytes() {
        let cfg = SynthConfig::default();
        assert_eq!(bytes(&synth_corpus(7, 10, &cfg)), bytes(&synth_corpus(7, 10, &cfg)));
        assert_ne!(bytes(&synth_corpus(7, 10, &cfg)), bytes(&synth_corpus(8, 10, &cfg)));
    }

    #[test]
    fn emotion_only_corpus_has_one_state_item_per_turn() {
        let cfg = SynthConfig {
            families: vec![SynthFamily::Emotion],
            ..Default::default()
        };
        for d in synth_corpus(7, 10, &cfg) {
            for t in &d.turns {
                assert_eq!(t.items.len(), 1);
                assert_eq!(t.items[0].component, ComponentKind::State);
                assert_eq!(t.items[0].kind, "emotion");
            }
        }
    }

    #[test]
    fn every_turn_count_bucket_is_covered() {
        let corpus = synth_corpus(7, 100, &SynthConfig::default());
        let counts: BTreeSet<usize> = corpus.iter().map(|d| d.turns.len()).collect();
        assert_eq!(counts, (2..=8).collect());
    }

    #[test]
    fn dialogs_are_well_formed_and_alternate_speakers() {
        for d in synth_corpus(3, 50, &SynthConfig::default()) {
            assert!(d.problems().is_empty(), "{:?}", d.problems());
            for (i, t) in d.turns.iter().enumerate() {
                assert_eq!(t.speaker, alternating_speaker(i));
                assert!(token_count(&t.text) >= 3);
            }
        }
    }

    #[test]
    fn all_length_classes_occur() {
        let corpus = synth_corpus(11, 100, &SynthConfig::default());
        let lens: Vec<usize> = corpus.iter().flat_map(|d| &d.turns).map(|t| token_count(&t.text)).collect();
        assert!(lens.iter().any(|&n| n <= 10));
        assert!(lens.iter().any(|&n| (11..=20).contains(&n)));
        assert!(lens.iter().any(|&n| n >= 21));
    }
}
