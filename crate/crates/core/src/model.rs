//! Task type system: dialog components, dialog items, task signatures and
//! task instances.
//!
//! A task is written `IC<grounding>-<target>`: an instruction, the dialog
//! context, a multiset of grounding components and exactly one output
//! component. Grounding letters are kept sorted `S < E < A` so that
//! `ICEA-R` and `ICAE-R` name the same task.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ComponentKind {
    Context,
    State,
    Evidence,
    Action,
    Response,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 5] = [
        ComponentKind::Context,
        ComponentKind::State,
        ComponentKind::Evidence,
        ComponentKind::Action,
        ComponentKind::Response,
    ];

    /// Components that may appear inside a grounding multiset.
    pub const GROUNDING: [ComponentKind; 3] =
        [ComponentKind::State, ComponentKind::Evidence, ComponentKind::Action];

    pub fn letter(self) -> char {
        match self {
            ComponentKind::Context => 'C',
            ComponentKind::State => 'S',
            ComponentKind::Evidence => 'E',
            ComponentKind::Action => 'A',
            ComponentKind::Response => 'R',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'C' => Some(ComponentKind::Context),
            'S' => Some(ComponentKind::State),
            'E' => Some(ComponentKind::Evidence),
            'A' => Some(ComponentKind::Action),
            'R' => Some(ComponentKind::Response),
            _ => None,
        }
    }

    pub fn is_grounding(self) -> bool {
        matches!(
            self,
            ComponentKind::State | ComponentKind::Evidence | ComponentKind::Action
        )
    }

    /// Lowercase field name used in instructions ("dialog context", "action", ...).
    pub fn field_name(self) -> &'static str {
        match self {
            ComponentKind::Context => "dialog context",
            ComponentKind::State => "state",
            ComponentKind::Evidence => "evidence",
            ComponentKind::Action => "action",
            ComponentKind::Response => "response",
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl Serialize for ComponentKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_char(self.letter())
    }
}

impl<'de> Deserialize<'de> for ComponentKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => ComponentKind::from_letter(c)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown component {s:?}"))),
            _ => Err(serde::de::Error::custom(format!("unknown component {s:?}"))),
        }
    }
}

/// A unit of dialog information mapped onto a component.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DialogItem {
    pub component: ComponentKind,
    pub kind: String,
    pub value: String,
    pub turn_index: usize,
}

impl DialogItem {
    pub fn new(
        component: ComponentKind,
        kind: impl Into<String>,
        value: impl Into<String>,
        turn_index: usize,
    ) -> Self {
        DialogItem {
            component,
            kind: kind.into(),
            value: value.into(),
            turn_index,
        }
    }

    /// Item identity ignoring which turn it came from.
    pub fn same_content(&self, other: &DialogItem) -> bool {
        self.component == other.component && self.kind == other.kind && self.value == other.value
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub items: Vec<DialogItem>,
}

impl Turn {
    pub fn new(speaker: impl Into<String>, text: impl Into<String>) -> Self {
        Turn {
            speaker: speaker.into(),
            text: text.into(),
            items: Vec::new(),
        }
    }

    /// Copy of the turn with annotations stripped, as carried in a task context.
    pub fn bare(&self) -> Turn {
        Turn {
            speaker: self.speaker.clone(),
            text: self.text.clone(),
            items: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialog {
    pub dialog_id: String,
    pub dataset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    pub turns: Vec<Turn>,
}

impl Dialog {
    /// Structural problems with the dialog, empty when well-formed.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dialog_id.is_empty() {
            out.push("dialog_id is empty".to_string());
        }
        if self.turns.is_empty() {
            out.push("turns is empty".to_string());
        }
        for (i, turn) in self.turns.iter().enumerate() {
            if turn.text.trim().is_empty() {
                out.push(format!("turns[{i}].text is empty"));
            }
            for (j, item) in turn.items.iter().enumerate() {
                if item.turn_index != i {
                    out.push(format!("turns[{i}].items[{j}] has turn_index {}", item.turn_index));
                }
                if !item.component.is_grounding() {
                    out.push(format!("turns[{i}].items[{j}] has component {}", item.component));
                }
                if item.value.trim().is_empty() {
                    out.push(format!("turns[{i}].items[{j}].value is empty"));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("invalid target component {0}: must be one of S, E, A, R")]
    InvalidTarget(ComponentKind),
    #[error("invalid grounding component {0}: must be one of S, E, A")]
    InvalidGroundingComponent(ComponentKind),
    #[error("malformed signature {0:?}")]
    Malformed(String),
}

/// `IC<grounding>-<target>`; grounding kept sorted `S < E < A`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskSignature {
    grounding: Vec<ComponentKind>,
    target: ComponentKind,
}

/// Builds a canonical signature from any ordering of the grounding components.
pub fn signature_of(
    grounding: &[ComponentKind],
    target: ComponentKind,
) -> Result<TaskSignature, SignatureError> {
    TaskSignature::new(grounding.to_vec(), target)
}

impl TaskSignature {
    pub fn new(
        mut grounding: Vec<ComponentKind>,
        target: ComponentKind,
    ) -> Result<Self, SignatureError> {
        if target == ComponentKind::Context {
            return Err(SignatureError::InvalidTarget(target));
        }
        if let Some(&bad) = grounding.iter().find(|c| !c.is_grounding()) {
            return Err(SignatureError::InvalidGroundingComponent(bad));
        }
        grounding.sort();
        Ok(TaskSignature { grounding, target })
    }

    pub fn grounding(&self) -> &[ComponentKind] {
        &self.grounding
    }

    pub fn target(&self) -> ComponentKind {
        self.target
    }

    pub fn dimension(&self) -> usize {
        self.grounding.len()
    }

    pub fn is_atomic(&self) -> bool {
        self.dimension() <= 1
    }

    pub fn is_compositional(&self) -> bool {
        self.dimension() >= 2
    }

    pub fn canonical_string(&self) -> String {
        let mut s = String::from("IC");
        s.extend(self.grounding.iter().map(|c| c.letter()));
        s.push('-');
        s.push(self.target.letter());
        s
    }

    /// Signature whose grounding is the multiset union of both groundings.
    pub fn union(&self, other: &TaskSignature, target: ComponentKind) -> Result<Self, SignatureError> {
        let mut g = self.grounding.clone();
        g.extend_from_slice(&other.grounding);
        TaskSignature::new(g, target)
    }

    /// Component multiset as counts.
    pub fn grounding_counts(&self) -> BTreeMap<ComponentKind, usize> {
        component_counts(self.grounding.iter().copied())
    }
}

pub(crate) fn component_counts(
    it: impl IntoIterator<Item = ComponentKind>,
) -> BTreeMap<ComponentKind, usize> {
    let mut m = BTreeMap::new();
    for c in it {
        *m.entry(c).or_insert(0) += 1;
    }
    m
}

pub fn dimension(sig: &TaskSignature) -> usize {
    sig.dimension()
}

impl fmt::Display for TaskSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_string())
    }
}

impl FromStr for TaskSignature {
    type Err = SignatureError;

    /// Accepts any grounding order, e.g. `ICAE-R`, and canonicalizes it.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || SignatureError::Malformed(s.to_string());
        let s = s.trim();
        let rest = s
            .strip_prefix("IC")
            .or_else(|| s.strip_prefix("ic"))
            .ok_or_else(malformed)?;
        let (grounding, target) = rest.split_once('-').ok_or_else(malformed)?;
        let mut tchars = target.chars();
        let target = match (tchars.next(), tchars.next()) {
            (Some(c), None) => ComponentKind::from_letter(c).ok_or_else(malformed)?,
            _ => return Err(malformed()),
        };
        let grounding = grounding
            .chars()
            .map(|c| ComponentKind::from_letter(c).ok_or_else(malformed))
            .collect::<Result<Vec<_>, _>>()?;
        TaskSignature::new(grounding, target)
    }
}

impl Serialize for TaskSignature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.canonical_string())
    }
}

impl<'de> Deserialize<'de> for TaskSignature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The single output of a task.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TargetItem {
    pub component: ComponentKind,
    pub kind: String,
    pub value: String,
}

impl TargetItem {
    pub fn response(text: impl Into<String>) -> Self {
        TargetItem {
            component: ComponentKind::Response,
            kind: "response".to_string(),
            value: text.into(),
        }
    }
}

/// Surface layout used when rendering an instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptStyle {
    /// Structured component blocks with shuffled section order.
    #[default]
    Cesar,
    /// Concatenated task prompts joined with "and" (baseline composer).
    Naive,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset: String,
    pub dialog_id: String,
    pub target_turn_index: usize,
    /// Generator task names; one for atomic tasks, sorted parents for composites.
    pub tasks: Vec<String>,
    /// Per-task ordinal distinguishing several instances of one task on one turn.
    pub variants: Vec<u32>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl Provenance {
    /// Unique key of the generating (dialog, turn, task, variant) tuple.
    pub fn key(&self) -> String {
        let parts: Vec<String> = self
            .tasks
            .iter()
            .zip(self.variants.iter().chain(std::iter::repeat(&0)))
            .map(|(t, v)| format!("{t}#{v}"))
            .collect();
        format!(
            "{}/{}/{}/{}",
            self.dataset,
            self.dialog_id,
            self.target_turn_index,
            parts.join("+")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub signature: TaskSignature,
    pub task_name: String,
    pub instruction: String,
    #[serde(default)]
    pub context: Vec<Turn>,
    #[serde(default)]
    pub grounding_items: Vec<DialogItem>,
    pub target_item: TargetItem,
    /// Items moved from input to output as reasoning that precedes the target.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reasoning: Vec<DialogItem>,
    #[serde(default, skip_serializing_if = "is_default_style")]
    pub style: PromptStyle,
    pub provenance: Provenance,
}

fn is_default_style(s: &PromptStyle) -> bool {
    *s == PromptStyle::Cesar
}

impl TaskInstance {
    pub fn dimension(&self) -> usize {
        self.signature.dimension()
    }

    /// Signature string including reasoning letters, e.g. `ICA-SSER`.
    pub fn display_signature(&self) -> String {
        if self.reasoning.is_empty() {
            return self.signature.canonical_string();
        }
        let mut reasoning: Vec<ComponentKind> = self.reasoning.iter().map(|i| i.component).collect();
        reasoning.sort();
        let mut s = String::from("IC");
        s.extend(self.signature.grounding().iter().map(|c| c.letter()));
        s.push('-');
        s.extend(reasoning.iter().map(|c| c.letter()));
        s.push(self.signature.target().letter());
        s
    }

    pub fn is_composite(&self) -> bool {
        self.provenance.tasks.len() > 1
    }
}

/// One broken invariant of a [`TaskInstance`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Violation {
    GroundingMismatch,
    TargetMismatch,
    InvalidItemComponent(usize),
    EmptyItemValue(usize),
    EmptyTarget,
    EmptyContextTurn(usize),
    SelfLeak(usize),
    DuplicateItem(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::GroundingMismatch => f.write_str("grounding/signature mismatch"),
            Violation::TargetMismatch => f.write_str("target/signature mismatch"),
            Violation::InvalidItemComponent(i) => {
                write!(f, "grounding_items[{i}] has a non-grounding component")
            }
            Violation::EmptyItemValue(i) => write!(f, "grounding_items[{i}] has an empty value"),
            Violation::EmptyTarget => f.write_str("empty target"),
            Violation::EmptyContextTurn(i) => write!(f, "context[{i}] has empty text"),
            Violation::SelfLeak(_) => f.write_str("self-leak"),
            Violation::DuplicateItem(_) => f.write_str("duplicate item"),
        }
    }
}

/// Item kinds that constrain the surface of the output rather than state an
/// answer; a phrase spanning the whole response is a legal constraint.
pub const PHRASE_KINDS: [&str; 2] = ["begins_with", "ends_with"];

/// Whether `item` restates `target`. Phrase constraints may span the whole
/// response, so they only leak into a target of their own component.
pub fn leaks_target(item: &DialogItem, target: &TargetItem, target_norm: &str) -> bool {
    if text::normalize(&item.value) != target_norm {
        return false;
    }
    item.component == target.component || !PHRASE_KINDS.contains(&item.kind.as_str())
}

/// Lists every violated instance invariant; an empty list means valid.
pub fn validate_instance(inst: &TaskInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let items = &inst.grounding_items;

    let item_counts = component_counts(items.iter().map(|i| i.component));
    if item_counts != inst.signature.grounding_counts() {
        out.push(Violation::GroundingMismatch);
    }
    if inst.target_item.component != inst.signature.target() {
        out.push(Violation::TargetMismatch);
    }
    if inst.target_item.value.trim().is_empty() {
        out.push(Violation::EmptyTarget);
    }
    for (i, turn) in inst.context.iter().enumerate() {
        if turn.text.trim().is_empty() {
            out.push(Violation::EmptyContextTurn(i));
        }
    }
    let target_norm = text::normalize(&inst.target_item.value);
    for (i, item) in items.iter().enumerate() {
        if !item.component.is_grounding() {
            out.push(Violation::InvalidItemComponent(i));
        }
        if item.value.trim().is_empty() {
            out.push(Violation::EmptyItemValue(i));
        }
        if leaks_target(item, &inst.target_item, &target_norm) {
            out.push(Violation::SelfLeak(i));
        }
        if items[..i].iter().any(|prev| prev.same_content(item)) {
            out.push(Violation::DuplicateItem(i));
        }
    }
    out
}
