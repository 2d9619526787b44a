//! Atomic task registry and derivers.
//!
//! Every deriver is a pure function of `(dialog, target turn, seed)`. Derived
//! instances that break an instance invariant (for example a grounding item
//! that restates the target) are dropped rather than emitted.

mod derive;
mod discriminative;
mod native;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_instance, Dialog, DialogItem, Provenance, TargetItem, TaskInstance, TaskSignature};
use crate::promptgen::instruction_for;
use crate::seed::derive_seed;

pub use derive::{
    begins_with_phrase, corrupt, derive_begins_with, derive_edit_generation, derive_ends_with,
    derive_keywords, derive_length_class, ends_with_phrase, extract_keywords, BEGINS_WITH,
    EDIT_GENERATION, ENDS_WITH, KEYWORDS, LENGTH_GENERATION, LENGTH_PREDICTION,
};
pub use discriminative::{candidate_sentence, family_plural, label_inventory, render_discriminative, sample_candidates};
pub use native::{derive_native_item_tasks, label_prefix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeriveError {
    #[error("dialog has no turn {0}")]
    NoSuchTurn(usize),
    #[error("response has {tokens} tokens, need at least {needed}")]
    TooShort { tokens: usize, needed: usize },
    #[error("response has no content tokens")]
    NoContentTokens,
    #[error("gold label {0:?} is not among the candidates")]
    GoldMissing(String),
    #[error("target {0} is not a label")]
    NotALabel(String),
    #[error("derived instance is invalid: {0}")]
    Invalid(String),
}

impl DeriveError {
    /// Short reason used when tallying skipped derivations.
    pub fn reason(&self) -> &'static str {
        match self {
            DeriveError::NoSuchTurn(_) => "no such turn",
            DeriveError::TooShort { .. } => "too short",
            DeriveError::NoContentTokens => "no content tokens",
            DeriveError::GoldMissing(_) => "gold missing",
            DeriveError::NotALabel(_) => "not a label",
            DeriveError::Invalid(_) => "invalid instance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthClass {
    Short,
    Medium,
    Long,
}

impl LengthClass {
    pub const ALL: [LengthClass; 3] = [LengthClass::Short, LengthClass::Medium, LengthClass::Long];

    pub fn as_str(self) -> &'static str {
        match self {
            LengthClass::Short => "short",
            LengthClass::Medium => "medium",
            LengthClass::Long => "long",
        }
    }
}

impl fmt::Display for LengthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LengthClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        LengthClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown length class {s:?}"))
    }
}

/// Token-count thresholds: `short <= short_max < medium <= medium_max < long`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LengthBuckets {
    pub short_max: usize,
    pub medium_max: usize,
}

impl Default for LengthBuckets {
    fn default() -> Self {
        LengthBuckets {
            short_max: 10,
            medium_max: 20,
        }
    }
}

impl LengthBuckets {
    pub fn classify(&self, tokens: usize) -> LengthClass {
        if tokens <= self.short_max {
            LengthClass::Short
        } else if tokens <= self.medium_max {
            LengthClass::Medium
        } else {
            LengthClass::Long
        }
    }
}

pub(crate) fn turn_text(dialog: &Dialog, t: usize) -> Result<&str, DeriveError> {
    dialog
        .turns
        .get(t)
        .map(|turn| turn.text.as_str())
        .ok_or(DeriveError::NoSuchTurn(t))
}

/// Assembles and validates an atomic instance targeting turn `t`.
pub(crate) fn make_instance(
    dialog: &Dialog,
    t: usize,
    task: &str,
    grounding: Vec<DialogItem>,
    target: TargetItem,
    seed: u64,
    variant: u32,
) -> Result<TaskInstance, DeriveError> {
    if t >= dialog.turns.len() {
        return Err(DeriveError::NoSuchTurn(t));
    }
    let signature = TaskSignature::new(grounding.iter().map(|i| i.component).collect(), target.component)
        .map_err(|e| DeriveError::Invalid(e.to_string()))?;
    let inst = TaskInstance {
        instruction: instruction_for(&signature, t > 0),
        signature,
        task_name: task.to_string(),
        context: dialog.turns[..t].iter().map(|turn| turn.bare()).collect(),
        grounding_items: grounding,
        target_item: target,
        reasoning: Vec::new(),
        style: Default::default(),
        provenance: Provenance {
            dataset: dialog.dataset.clone(),
            dialog_id: dialog.dialog_id.clone(),
            target_turn_index: t,
            tasks: vec![task.to_string()],
            variants: vec![variant],
            seed,
            split: dialog.split,
        },
    };
    let violations = validate_instance(&inst);
    if let Some(v) = violations.first() {
        return Err(DeriveError::Invalid(v.to_string()));
    }
    Ok(inst)
}

/// Which deriver produces a registered task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSource {
    BeginsWith,
    EndsWith,
    Keywords,
    LengthClass,
    EditGeneration,
    NativeItems,
    Candidates,
}

/// A registered atomic task. Names containing `{label}`, `{state}` or
/// `{kind}` are families instantiated per annotation kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AtomicTaskDef {
    pub task_name: &'static str,
    pub signature: &'static str,
    pub source: TaskSource,
    pub description: &'static str,
}

const fn def(
    task_name: &'static str,
    signature: &'static str,
    source: TaskSource,
    description: &'static str,
) -> AtomicTaskDef {
    AtomicTaskDef {
        task_name,
        signature,
        source,
        description,
    }
}

pub const TASKS: &[AtomicTaskDef] = &[
    def(BEGINS_WITH, "ICA-R", TaskSource::BeginsWith, "response starting with its first k tokens"),
    def(ENDS_WITH, "ICA-R", TaskSource::EndsWith, "response ending with its last k tokens"),
    def(KEYWORDS, "ICA-R", TaskSource::Keywords, "response containing extracted keywords"),
    def(LENGTH_GENERATION, "ICA-R", TaskSource::LengthClass, "response of a given length class"),
    def(LENGTH_PREDICTION, "IC-A", TaskSource::LengthClass, "length class of the next response"),
    def(EDIT_GENERATION, "ICA-R", TaskSource::EditGeneration, "response restored from a corrupted draft"),
    def("{label}_prediction", "IC-A", TaskSource::NativeItems, "label of the next response (act_prediction, emotion_prediction)"),
    def("{label}_generation", "ICA-R", TaskSource::NativeItems, "response carrying a given label (act_generation, emotion_generation)"),
    def("{label}_tagging", "IC-S", TaskSource::NativeItems, "label of the last utterance (act_classification, emotion_tagging)"),
    def("{label}_state_grounded_generation", "ICS-R", TaskSource::NativeItems, "response given the last utterance's label"),
    def("{kind}_generation", "IC-E", TaskSource::NativeItems, "evidence line of the responding speaker (persona_generation)"),
    def("{kind}_grounded_generation", "ICE-R", TaskSource::NativeItems, "response grounded on evidence (persona_grounded_generation)"),
    def("{label}_prediction_given_{state}_state", "ICS-A", TaskSource::NativeItems, "next-response label given the last utterance's label"),
    def("{label}_prediction_given_{kind}", "ICE-A", TaskSource::NativeItems, "next-response label given an evidence line"),
    def("{label}_prediction_given_{other}", "ICA-A", TaskSource::NativeItems, "next-response label given another of its labels"),
    def("{task}_with_candidates", "ICS-*", TaskSource::Candidates, "label task with a candidate list in the state"),
    def("{label}_classification", "ICS-S", TaskSource::Candidates, "tagging task with a candidate list in the state"),
];

/// Tally of derivation attempts that produced no instance, by reason.
pub type SkipCounts = BTreeMap<String, usize>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Derivation {
    pub instances: Vec<TaskInstance>,
    pub skipped: SkipCounts,
}

/// Derives atomic instances from dialogs with an optional task whitelist.
#[derive(Debug, Clone)]
pub struct Registry {
    pub buckets: LengthBuckets,
    /// Derive only these task names; `None` enables everything.
    pub enabled: Option<BTreeSet<String>>,
    /// Turns before this index are never targets.
    pub first_target_turn: usize,
    /// Total candidates offered by discriminative variants; 0 disables them.
    pub candidates: usize,
}

impl Default for Registry {
    fn default() -> Self {
        Registry {
            buckets: LengthBuckets::default(),
            enabled: None,
            first_target_turn: 1,
            candidates: 0,
        }
    }
}

impl Registry {
    pub fn with_tasks<I, S>(mut self, tasks: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.enabled = Some(tasks.into_iter().map(Into::into).collect());
        self
    }

    pub fn is_enabled(&self, task: &str) -> bool {
        self.enabled.as_ref().is_none_or(|set| set.contains(task))
    }

    fn task_seed(seed: u64, dialog: &Dialog, t: usize, task: &str) -> u64 {
        derive_seed(seed, "derive", &format!("{}/{}/{}/{}", dialog.dataset, dialog.dialog_id, t, task))
    }

    /// All enabled atomic instances targeting turn `t`.
    pub fn derive_turn(
        &self,
        dialog: &Dialog,
        t: usize,
        seed: u64,
        inventory: &BTreeMap<String, BTreeSet<String>>,
    ) -> Derivation {
        let mut out = Derivation::default();
        let keep = |res: Result<TaskInstance, DeriveError>, out: &mut Derivation| match res {
            Ok(inst) => out.instances.push(inst),
            Err(e) => *out.skipped.entry(e.reason().to_string()).or_default() += 1,
        };
        type Single = fn(&Dialog, usize, u64) -> Result<TaskInstance, DeriveError>;
        let singles: [(&str, Single); 4] = [
            (BEGINS_WITH, derive_begins_with),
            (ENDS_WITH, derive_ends_with),
            (KEYWORDS, derive_keywords),
            (EDIT_GENERATION, derive_edit_generation),
        ];
        for (name, f) in singles {
            if self.is_enabled(name) {
                keep(f(dialog, t, Self::task_seed(seed, dialog, t, name)), &mut out);
            }
        }
        if self.is_enabled(LENGTH_GENERATION) || self.is_enabled(LENGTH_PREDICTION) {
            let s = Self::task_seed(seed, dialog, t, LENGTH_GENERATION);
            match derive_length_class(dialog, t, s, &self.buckets) {
                Ok(pair) => out
                    .instances
                    .extend(pair.into_iter().filter(|i| self.is_enabled(&i.task_name))),
                Err(e) => *out.skipped.entry(e.reason().to_string()).or_default() += 1,
            }
        }
        let native_seed = Self::task_seed(seed, dialog, t, "native");
        let natives = derive_native_item_tasks(dialog, t, native_seed);
        let mut labels: Vec<TaskInstance> = Vec::new();
        for inst in natives {
            if self.is_enabled(&inst.task_name) {
                out.instances.push(inst.clone());
            }
            if self.candidates > 0 && inst.dimension() == 0 && inst.target_item.component != crate::model::ComponentKind::Response {
                labels.push(inst);
            }
        }
        if self.candidates > 0 {
            for inst in out.instances.iter().filter(|i| i.task_name == LENGTH_PREDICTION) {
                labels.push(inst.clone());
            }
            for inst in labels {
                let s = Self::task_seed(seed, dialog, t, &format!("{}#{}", inst.task_name, inst.provenance.variants[0]));
                let pool = inventory.get(&inst.target_item.kind).cloned().unwrap_or_default();
                let cands = sample_candidates(&inst.target_item.value, &pool, self.candidates, s);
                let res = render_discriminative(&inst, &cands, s);
                match res {
                    Ok(d) if self.is_enabled(&d.task_name) => out.instances.push(d),
                    Ok(_) => {}
                    Err(e) => *out.skipped.entry(e.reason().to_string()).or_default() += 1,
                }
            }
        }
        out
    }

    /// Derives every enabled task for every eligible turn, in corpus order.
    pub fn derive_corpus(&self, dialogs: &[Dialog], seed: u64) -> Derivation {
        let mut inventory = label_inventory(dialogs);
        inventory
            .entry("length_class".to_string())
            .or_default()
            .extend(LengthClass::ALL.iter().map(|c| c.as_str().to_string()));
        let parts: Vec<Derivation> = dialogs
            .par_iter()
            .map(|d| {
                let mut acc = Derivation::default();
                for t in self.first_target_turn..d.turns.len() {
                    let part = self.derive_turn(d, t, seed, &inventory);
                    acc.instances.extend(part.instances);
                    for (k, v) in part.skipped {
                        *acc.skipped.entry(k).or_default() += v;
                    }
                }
                acc
            })
            .collect();
        let mut out = Derivation::default();
        for part in parts {
            out.instances.extend(part.instances);
            for (k, v) in part.skipped {
                *out.skipped.entry(k).or_default() += v;
            }
        }
        out
    }
}
