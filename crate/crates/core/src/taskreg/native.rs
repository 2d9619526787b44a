//! Tasks read directly off dataset annotations.
//!
//! Annotations on the target turn describe the response and are used as
//! Actions. Annotations on the last context turn describe the dialog so far
//! and are used as States. Evidence comes from the target turn and, for
//! personas, from earlier turns of the same speaker.

use std::collections::HashMap;

use super::make_instance;
use crate::model::{ComponentKind, Dialog, DialogItem, TargetItem, TaskInstance};

/// Short label used in task names (`dialog_act` becomes `act`).
pub fn label_prefix(kind: &str) -> &str {
    match kind {
        "dialog_act" => "act",
        other => other,
    }
}

fn tagging_name(kind: &str) -> String {
    match kind {
        "dialog_act" => "act_classification".to_string(),
        other => format!("{}_tagging", label_prefix(other)),
    }
}

fn label_target(component: ComponentKind, item: &DialogItem) -> TargetItem {
    TargetItem {
        component,
        kind: item.kind.clone(),
        value: item.value.clone(),
    }
}

fn relabel(item: &DialogItem, component: ComponentKind) -> DialogItem {
    DialogItem::new(component, item.kind.clone(), item.value.clone(), item.turn_index)
}

/// Every annotation-backed atomic task targeting turn `t`; invalid
/// candidates (e.g. an evidence line equal to the response) are skipped.
pub fn derive_native_item_tasks(dialog: &Dialog, t: usize, seed: u64) -> Vec<TaskInstance> {
    let Some(turn) = dialog.turns.get(t) else {
        return Vec::new();
    };
    let response = TargetItem::response(turn.text.clone());

    let labels: Vec<DialogItem> = turn
        .items
        .iter()
        .filter(|i| matches!(i.component, ComponentKind::State | ComponentKind::Action))
        .map(|i| relabel(i, ComponentKind::Action))
        .collect();
    let states: Vec<DialogItem> = match t.checked_sub(1).and_then(|p| dialog.turns.get(p)) {
        Some(prev) => prev
            .items
            .iter()
            .filter(|i| matches!(i.component, ComponentKind::State | ComponentKind::Action))
            .map(|i| relabel(i, ComponentKind::State))
            .collect(),
        None => Vec::new(),
    };
    let mut evidence: Vec<DialogItem> = Vec::new();
    for (idx, prior) in dialog.turns[..=t].iter().enumerate() {
        if prior.speaker != turn.speaker {
            continue;
        }
        for item in prior.items.iter().filter(|i| i.component == ComponentKind::Evidence) {
            if (idx == t || item.kind == "persona") && !evidence.iter().any(|e| e.same_content(item)) {
                evidence.push(item.clone());
            }
        }
    }

    let mut candidates: Vec<(String, Vec<DialogItem>, TargetItem)> = Vec::new();
    for a in &labels {
        let p = label_prefix(&a.kind);
        candidates.push((format!("{p}_prediction"), vec![], label_target(ComponentKind::Action, a)));
        candidates.push((format!("{p}_generation"), vec![a.clone()], response.clone()));
    }
    for s in &states {
        candidates.push((tagging_name(&s.kind), vec![], label_target(ComponentKind::State, s)));
        candidates.push((
            format!("{}_state_grounded_generation", label_prefix(&s.kind)),
            vec![s.clone()],
            response.clone(),
        ));
    }
    for e in &evidence {
        candidates.push((format!("{}_generation", e.kind), vec![], label_target(ComponentKind::Evidence, e)));
        candidates.push((format!("{}_grounded_generation", e.kind), vec![e.clone()], response.clone()));
    }
    for a in &labels {
        let p = label_prefix(&a.kind);
        let target = label_target(ComponentKind::Action, a);
        for s in &states {
            candidates.push((
                format!("{p}_prediction_given_{}_state", label_prefix(&s.kind)),
                vec![s.clone()],
                target.clone(),
            ));
        }
        for e in &evidence {
            candidates.push((format!("{p}_prediction_given_{}", e.kind), vec![e.clone()], target.clone()));
        }
        for other in labels.iter().filter(|o| o.kind != a.kind) {
            candidates.push((
                format!("{p}_prediction_given_{}", label_prefix(&other.kind)),
                vec![other.clone()],
                target.clone(),
            ));
        }
    }

    let mut variants: HashMap<String, u32> = HashMap::new();
    let mut out = Vec::with_capacity(candidates.len());
    for (name, grounding, target) in candidates {
        let variant = variants.entry(name.clone()).or_default();
        if let Ok(inst) = make_instance(dialog, t, &name, grounding, target, seed, *variant) {
            *variant += 1;
            out.push(inst);
        }
    }
    out
}
