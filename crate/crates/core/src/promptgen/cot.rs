use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

use crate::model::{DialogItem, TaskInstance, TaskSignature};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CotError {
    #[error("shift item {0:?} is not among the instance's grounding items")]
    ShiftNotSubset(String),
}

/// Moves `shift` from the grounding into the output as reasoning.
///
/// The shifted items precede the target in canonical component order
/// (`S, E, A`, stable within a component); the instruction is regenerated
/// for the reduced grounding. An empty shift returns the instance unchanged.
pub fn cot_transform(inst: &TaskInstance, shift: &[DialogItem]) -> Result<TaskInstance, CotError> {
    if shift.is_empty() {
        return Ok(inst.clone());
    }
    let mut remaining = inst.grounding_items.clone();
    let mut moved = Vec::with_capacity(shift.len());
    for item in shift {
        let pos = remaining
            .iter()
            .position(|r| r == item)
            .ok_or_else(|| CotError::ShiftNotSubset(item.value.clone()))?;
        moved.push(remaining.remove(pos));
    }
    let mut reasoning = inst.reasoning.clone();
    reasoning.extend(moved);
    reasoning.sort_by_key(|i| i.component);

    let signature = TaskSignature::new(
        remaining.iter().map(|i| i.component).collect(),
        inst.signature.target(),
    )
    .expect("subset of a valid grounding stays valid");
    let mut out = inst.clone();
    out.signature = signature;
    out.grounding_items = remaining;
    out.reasoning = reasoning;
    out.instruction = super::instruction_for_instance(&out);
    Ok(out)
}

/// A seeded, non-empty random subset of the grounding (empty for 0-D tasks).
pub fn random_shift(inst: &TaskInstance, seed: u64) -> Vec<DialogItem> {
    let n = inst.grounding_items.len();
    if n == 0 {
        return Vec::new();
    }
    let mut rng = seed::rng(seed);
    let k = rng.gen_range(1..=n);
    let mut idx: Vec<usize> = sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| inst.grounding_items[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ComponentKind::*, TargetItem};
    use crate::promptgen::tests::instance;
    use crate::promptgen::{render, PhraseTable, RenderOptions};

    fn icssea_r() -> TaskInstance {
        instance(
            "ICSSEA-R",
            vec![
                DialogItem::new(Action, "dialog_act", "inform", 2),
                DialogItem::new(State, "emotion", "happy", 1),
                DialogItem::new(Evidence, "persona", "i love hiking .", 0),
                DialogItem::new(State, "summary", "they plan a hike", 1),
            ],
            TargetItem::response("Yes , the mountains are lovely ."),
        )
    }

    #[test]
    fn shifting_states_and_evidence_leaves_action_grounding() {
        let inst = icssea_r();
        let shift: Vec<DialogItem> = inst
            .grounding_items
            .iter()
            .filter(|i| i.component != Action)
            .cloned()
            .collect();
        let out = cot_transform(&inst, &shift).unwrap();
        assert_eq!(out.signature.canonical_string(), "ICA-R");
        assert_eq!(out.display_signature(), "ICA-SSER");
        let ex = render(&out, 0, &RenderOptions::default(), &PhraseTable::default()).unwrap();
        assert_eq!(
            ex.output_text,
            "happy\nthey plan a hike\ni love hiking .\nYes , the mountains are lovely ."
        );
        assert!(!ex.input_text.contains("they plan a hike"));
        assert!(!ex.input_text.contains("i love hiking"));
    }

    #[test]
    fn empty_shift_is_identity() {
        let inst = icssea_r();
        let out = cot_transform(&inst, &[]).unwrap();
        assert_eq!(
            serde_json::to_string(&out).unwrap(),
            serde_json::to_string(&inst).unwrap()
        );
    }

    #[test]
    fn shifting_everything_gives_a_zero_d_task() {
        let inst = instance(
            "ICEA-R",
            vec![
                DialogItem::new(Action, "keywords", "mountains", 2),
                DialogItem::new(Evidence, "knowledge", "The Rockies are tall .", 2),
            ],
            TargetItem::response("The mountains were great ."),
        );
        let out = cot_transform(&inst, &inst.grounding_items.clone()).unwrap();
        assert_eq!(out.dimension(), 0);
        assert_eq!(
            crate::promptgen::output_text(&out),
            "The Rockies are tall .\nmountains\nThe mountains were great ."
        );
        assert_eq!(
            out.instruction,
            "Provide the correct value for response fields given the dialog context fields."
        );
    }

    #[test]
    fn foreign_shift_is_rejected() {
        let inst = icssea_r();
        let stranger = DialogItem::new(Action, "keywords", "piano", 2);
        assert!(matches!(
            cot_transform(&inst, &[stranger]),
            Err(CotError::ShiftNotSubset(_))
        ));
        // Shifting the same item twice exceeds its multiplicity.
        let a = inst.grounding_items[0].clone();
        assert!(cot_transform(&inst, &[a.clone(), a]).is_err());
    }

    #[test]
    fn random_shift_is_a_nonempty_subset() {
        let inst = icssea_r();
        for s in 0..50 {
            let shift = random_shift(&inst, s);
            assert!(!shift.is_empty() && shift.len() <= 4);
            assert!(cot_transform(&inst, &shift).is_ok());
        }
    }
}
