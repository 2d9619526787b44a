use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;

use super::DeriveError;
use crate::model::{ComponentKind, Dialog, DialogItem, TaskInstance, TaskSignature};
use crate::promptgen::instruction_for_instance;
use crate::seed;
use crate::text::oxford_join;

/// Plural family name used in candidate sentences.
pub fn family_plural(kind: &str) -> String {
    match kind {
        "dialog_act" => "dialog acts".to_string(),
        "length_class" => "lengths".to_string(),
        other => format!("{}s", other.replace('_', " ")),
    }
}

/// `Candidate emotions are sad, happy, and mad.`
pub fn candidate_sentence(kind: &str, candidates: &[String]) -> String {
    format!("Candidate {} are {}.", family_plural(kind), oxford_join(candidates))
}

/// Distinct State/Action label values per kind across a corpus.
pub fn label_inventory(dialogs: &[Dialog]) -> BTreeMap<String, BTreeSet<String>> {
    let mut inv: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for item in dialogs.iter().flat_map(|d| d.turns.iter()).flat_map(|t| t.items.iter()) {
        if matches!(item.component, ComponentKind::State | ComponentKind::Action) {
            inv.entry(item.kind.clone()).or_default().insert(item.value.clone());
        }
    }
    inv
}

/// Gold plus up to `total - 1` seeded distractors from `pool`.
pub fn sample_candidates(gold: &str, pool: &BTreeSet<String>, total: usize, seed: u64) -> Vec<String> {
    let mut distractors: Vec<&String> = pool.iter().filter(|v| *v != gold).collect();
    distractors.shuffle(&mut seed::rng(seed));
    let mut out = vec![gold.to_string()];
    out.extend(distractors.into_iter().take(total.saturating_sub(1)).cloned());
    out
}

fn discriminative_name(task: &str) -> String {
    match task.strip_suffix("_tagging") {
        Some(stem) => format!("{stem}_classification"),
        None => format!("{task}_with_candidates"),
    }
}

/// Adds a shuffled candidate list as a State item to a label-target task.
///
/// The list is deduplicated, must contain the gold label, and the signature
/// gains one State slot (`IC-S` becomes `ICS-S`, `IC-A` becomes `ICS-A`).
pub fn render_discriminative(
    inst: &TaskInstance,
    candidates: &[String],
    seed: u64,
) -> Result<TaskInstance, DeriveError> {
    let target = &inst.target_item;
    if !matches!(target.component, ComponentKind::State | ComponentKind::Action) {
        return Err(DeriveError::NotALabel(target.component.field_name().to_string()));
    }
    let mut list: Vec<String> = Vec::new();
    for c in candidates {
        if !list.contains(c) {
            list.push(c.clone());
        }
    }
    if !list.contains(&target.value) {
        return Err(DeriveError::GoldMissing(target.value.clone()));
    }
    list.shuffle(&mut seed::rng(seed));

    let item = DialogItem::new(
        ComponentKind::State,
        "candidates",
        candidate_sentence(&target.kind, &list),
        inst.provenance.target_turn_index,
    );
    let mut out = inst.clone();
    out.grounding_items.insert(0, item);
    let mut grounding = inst.signature.grounding().to_vec();
    grounding.push(ComponentKind::State);
    out.signature = TaskSignature::new(grounding, inst.signature.target())
        .map_err(|e| DeriveError::Invalid(e.to_string()))?;
    out.task_name = discriminative_name(&inst.task_name);
    out.provenance.tasks = vec![out.task_name.clone()];
    out.instruction = instruction_for_instance(&out);
    Ok(out)
}
