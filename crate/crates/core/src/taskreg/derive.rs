//! Derivers for response-constraint tasks: begins-with, ends-with, keywords,
//! length class and edit generation.

use std::collections::HashMap;

use rand::Rng;

use super::{make_instance, turn_text, DeriveError, LengthBuckets};
use crate::model::{ComponentKind, Dialog, DialogItem, TargetItem, TaskInstance};
use crate::seed;
use crate::text::{content_tokens, tokenize};

pub const BEGINS_WITH: &str = "beginswith_controlled_generation";
pub const ENDS_WITH: &str = "endswith_controlled_generation";
pub const KEYWORDS: &str = "keyword_controlled_generation";
pub const LENGTH_GENERATION: &str = "response_generation_length";
pub const LENGTH_PREDICTION: &str = "response_length_prediction";
pub const EDIT_GENERATION: &str = "edit_generation";

/// First `k` tokens joined by single spaces.
pub fn begins_with_phrase(text: &str, k: usize) -> String {
    let toks = tokenize(text);
    toks[..k.min(toks.len())].join(" ")
}

/// Last `k` tokens joined by single spaces.
pub fn ends_with_phrase(text: &str, k: usize) -> String {
    let toks = tokenize(text);
    toks[toks.len().saturating_sub(k)..].join(" ")
}

/// Top-`m` content tokens ranked by frequency (desc), first position (asc),
/// then lexicographically; case of the first occurrence is kept.
pub fn extract_keywords(text: &str, m: usize) -> Vec<String> {
    let mut stats: HashMap<String, (usize, usize, String)> = HashMap::new();
    for (pos, tok) in content_tokens(text).into_iter().enumerate() {
        let key = tok.to_lowercase();
        stats
            .entry(key)
            .and_modify(|e| e.0 += 1)
            .or_insert((1, pos, tok));
    }
    let mut ranked: Vec<(String, (usize, usize, String))> = stats.into_iter().collect();
    ranked.sort_by(|a, b| {
        b.1 .0
            .cmp(&a.1 .0)
            .then(a.1 .1.cmp(&b.1 .1))
            .then(a.0.cmp(&b.0))
    });
    ranked.into_iter().take(m).map(|(_, (_, _, orig))| orig).collect()
}

/// Deletes one random token, then swaps one random adjacent pair.
pub fn corrupt(text: &str, seed: u64) -> String {
    let mut toks = tokenize(text);
    if toks.len() < 3 {
        return toks.join(" ");
    }
    let mut rng = seed::rng(seed);
    let del = rng.gen_range(0..toks.len());
    toks.remove(del);
    let swap = rng.gen_range(0..toks.len() - 1);
    toks.swap(swap, swap + 1);
    toks.join(" ")
}

fn min_tokens(text: &str, n: usize) -> Result<usize, DeriveError> {
    let count = tokenize(text).len();
    if count < n {
        Err(DeriveError::TooShort { tokens: count, needed: n })
    } else {
        Ok(count)
    }
}

fn response_instance(
    dialog: &Dialog,
    t: usize,
    task: &str,
    item: DialogItem,
    seed: u64,
) -> Result<TaskInstance, DeriveError> {
    let response = turn_text(dialog, t)?;
    make_instance(
        dialog,
        t,
        task,
        vec![item],
        TargetItem::response(response),
        seed,
        0,
    )
}

/// ICA-R: the response must start with its first k tokens, k in {2, 3, 4}.
pub fn derive_begins_with(dialog: &Dialog, t: usize, seed: u64) -> Result<TaskInstance, DeriveError> {
    let text = turn_text(dialog, t)?;
    min_tokens(text, 2)?;
    let k = seed::rng(seed).gen_range(2..=4);
    let item = DialogItem::new(ComponentKind::Action, "begins_with", begins_with_phrase(text, k), t);
    response_instance(dialog, t, BEGINS_WITH, item, seed)
}

/// ICA-R: the response must end with its last k tokens, k in {2, 3, 4}.
pub fn derive_ends_with(dialog: &Dialog, t: usize, seed: u64) -> Result<TaskInstance, DeriveError> {
    let text = turn_text(dialog, t)?;
    min_tokens(text, 2)?;
    let k = seed::rng(seed).gen_range(2..=4);
    let item = DialogItem::new(ComponentKind::Action, "ends_with", ends_with_phrase(text, k), t);
    response_instance(dialog, t, ENDS_WITH, item, seed)
}

/// ICA-R: the response must contain m extracted keywords, m in {1, 2, 3}.
pub fn derive_keywords(dialog: &Dialog, t: usize, seed: u64) -> Result<TaskInstance, DeriveError> {
    let text = turn_text(dialog, t)?;
    let m = seed::rng(seed).gen_range(1..=3);
    let kws = extract_keywords(text, m);
    if kws.is_empty() {
        return Err(DeriveError::NoContentTokens);
    }
    let item = DialogItem::new(ComponentKind::Action, "keywords", kws.join(", "), t);
    response_instance(dialog, t, KEYWORDS, item, seed)
}

/// The length-grounded generation task (ICA-R) and its prediction twin (IC-A).
pub fn derive_length_class(
    dialog: &Dialog,
    t: usize,
    seed: u64,
    buckets: &LengthBuckets,
) -> Result<[TaskInstance; 2], DeriveError> {
    let text = turn_text(dialog, t)?;
    let class = buckets.classify(tokenize(text).len());
    let generation = response_instance(
        dialog,
        t,
        LENGTH_GENERATION,
        DialogItem::new(ComponentKind::Action, "length_class", class.as_str(), t),
        seed,
    )?;
    let prediction = make_instance(
        dialog,
        t,
        LENGTH_PREDICTION,
        Vec::new(),
        TargetItem {
            component: ComponentKind::Action,
            kind: "length_class".into(),
            value: class.as_str().into(),
        },
        seed,
        0,
    )?;
    Ok([generation, prediction])
}

/// ICA-R: restore the response from a corrupted draft.
pub fn derive_edit_generation(dialog: &Dialog, t: usize, seed: u64) -> Result<TaskInstance, DeriveError> {
    let text = turn_text(dialog, t)?;
    min_tokens(text, 3)?;
    let item = DialogItem::new(ComponentKind::Action, "draft_response", corrupt(text, seed), t);
    response_instance(dialog, t, EDIT_GENERATION, item, seed)
}
