//! Prompt rendering.
//!
//! A rendered prompt always opens with the instruction and closes with the
//! bare target header (`Response:` etc.); the dialog context and grounding
//! blocks in between are shuffled per seed so models do not learn a fixed
//! section order.

mod cot;
mod phrases;

use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ComponentKind, PromptStyle, Provenance, TaskInstance, TaskSignature};
use crate::seed;
use crate::text::oxford_join;

pub use cot::{cot_transform, random_shift, CotError};
pub use phrases::{split_list, PhraseTable, PhraseTableError};

pub const INSTRUCTION_LABEL: &str = "Instruction";
pub const CONTEXT_LABEL: &str = "Dialog Context";

/// Header of a grounding block for `c`.
pub fn block_label(c: ComponentKind) -> &'static str {
    match c {
        ComponentKind::Context => CONTEXT_LABEL,
        ComponentKind::State => "State",
        ComponentKind::Evidence => "Evidence",
        ComponentKind::Action => "Actions",
        ComponentKind::Response => "Response",
    }
}

/// Header that closes the prompt for a task targeting `c`.
pub fn target_label(c: ComponentKind) -> &'static str {
    match c {
        ComponentKind::Context => CONTEXT_LABEL,
        ComponentKind::State => "State",
        ComponentKind::Evidence => "Evidence",
        ComponentKind::Action => "Action",
        ComponentKind::Response => "Response",
    }
}

/// `Provide the correct value for <target> fields given the <inputs> fields.`
///
/// Inputs list the dialog context (when non-empty) followed by each distinct
/// grounding component in `S, E, A` order.
pub fn instruction_for(sig: &TaskSignature, has_context: bool) -> String {
    let mut present: Vec<&str> = Vec::new();
    if has_context {
        present.push(ComponentKind::Context.field_name());
    }
    let mut comps = sig.grounding().to_vec();
    comps.dedup();
    present.extend(comps.iter().map(|c| c.field_name()));
    let target = sig.target().field_name();
    if present.is_empty() {
        format!("Provide the correct value for {target} fields.")
    } else {
        format!(
            "Provide the correct value for {target} fields given the {} fields.",
            oxford_join(&present)
        )
    }
}

pub fn instruction_for_instance(inst: &TaskInstance) -> String {
    instruction_for(&inst.signature, !inst.context.is_empty())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CotMode {
    #[default]
    None,
    /// Shift a random non-empty subset of the grounding items to the output.
    RandomK,
}

impl FromStr for CotMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(CotMode::None),
            "random-k" => Ok(CotMode::RandomK),
            other => Err(format!("unknown cot mode {other:?} (expected none or random-k)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderOptions {
    pub cot: CotMode,
    pub generic_fallback: bool,
    /// Shuffle items inside a component block as well as the blocks.
    pub block_shuffle: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            cot: CotMode::None,
            generic_fallback: false,
            block_shuffle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Section {
    pub label: String,
    pub body: String,
}

impl Section {
    fn new(label: impl Into<String>, body: impl Into<String>) -> Self {
        Section {
            label: label.into(),
            body: body.into(),
        }
    }

    fn write(&self, out: &mut String, inline: bool) {
        out.push_str(&self.label);
        out.push(':');
        if !self.body.is_empty() {
            out.push(if inline { ' ' } else { '\n' });
            out.push_str(&self.body);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedExample {
    pub input_text: String,
    pub output_text: String,
    pub sections: Vec<Section>,
    pub task_name: String,
    pub signature: String,
    pub seed: u64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("no phrasing for item kind {0:?} (enable the generic fallback to render it)")]
    UnknownKind(String),
    #[error(transparent)]
    Cot(#[from] CotError),
}

/// Renders one instance. Deterministic for a fixed seed.
pub fn render(
    inst: &TaskInstance,
    seed: u64,
    options: &RenderOptions,
    phrases: &PhraseTable,
) -> Result<RenderedExample, RenderError> {
    let transformed;
    let inst = match options.cot {
        CotMode::None => inst,
        CotMode::RandomK => {
            let shift = random_shift(inst, seed::derive_seed(seed, "cot", ""));
            transformed = cot_transform(inst, &shift)?;
            &transformed
        }
    };
    let mut rng = seed::rng(seed);
    let phrase = |item: &crate::model::DialogItem| -> Result<String, RenderError> {
        match phrases.phrase(item) {
            Some(p) => Ok(p),
            None if options.generic_fallback => Ok(phrases.phrase_or_generic(item)),
            None => Err(RenderError::UnknownKind(item.kind.clone())),
        }
    };

    let context_body = inst
        .context
        .iter()
        .map(|t| format!("{}: {}", t.speaker, t.text))
        .collect::<Vec<_>>()
        .join("\n");

    let mut middle: Vec<Section> = Vec::new();
    if !context_body.is_empty() {
        middle.push(Section::new(CONTEXT_LABEL, context_body));
    }
    // Sections whose label and value share one line.
    let mut inline_labels: Vec<String> = vec![INSTRUCTION_LABEL.to_string()];

    match inst.style {
        PromptStyle::Cesar => {
            for comp in ComponentKind::GROUNDING {
                let mut lines: Vec<String> = inst
                    .grounding_items
                    .iter()
                    .filter(|i| i.component == comp)
                    .map(&phrase)
                    .collect::<Result<_, _>>()?;
                if lines.is_empty() {
                    continue;
                }
                if options.block_shuffle {
                    lines.shuffle(&mut rng);
                }
                middle.push(Section::new(block_label(comp), lines.join("\n")));
            }
            middle.shuffle(&mut rng);
        }
        PromptStyle::Naive => {
            // Baseline layout: each task's own labelled line, back to back.
            for item in &inst.grounding_items {
                let label = phrases.naive_label(&item.kind);
                inline_labels.push(label.clone());
                middle.push(Section::new(label, item.value.clone()));
            }
        }
    }

    let mut sections = Vec::with_capacity(middle.len() + 2);
    sections.push(Section::new(INSTRUCTION_LABEL, inst.instruction.clone()));
    sections.extend(middle);
    sections.push(Section::new(target_label(inst.signature.target()), ""));

    let mut input_text = String::new();
    for (i, s) in sections.iter().enumerate() {
        if i > 0 {
            input_text.push_str("\n\n");
        }
        let inline = inline_labels.contains(&s.label) && !s.body.contains('\n');
        s.write(&mut input_text, inline);
    }

    Ok(RenderedExample {
        input_text,
        output_text: output_text(inst),
        sections,
        task_name: inst.task_name.clone(),
        signature: inst.display_signature(),
        seed,
        provenance: inst.provenance.clone(),
    })
}

/// Reasoning values (if any), one per line, then the target value.
pub fn output_text(inst: &TaskInstance) -> String {
    let mut parts: Vec<&str> = inst.reasoning.iter().map(|i| i.value.as_str()).collect();
    parts.push(&inst.target_item.value);
    parts.join("\n")
}

/// Per-instance render seed: the corpus seed mixed with the provenance key.
pub fn instance_seed(seed: u64, provenance: &Provenance) -> u64 {
    seed ^ seed::stable_hash(&[provenance.key()])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderFailure {
    pub index: usize,
    pub provenance: String,
    pub error: String,
}

/// Renders every instance in input order; failures are collected, not fatal.
pub fn render_corpus(
    instances: &[TaskInstance],
    seed: u64,
    options: &RenderOptions,
    phrases: &PhraseTable,
) -> (Vec<RenderedExample>, Vec<RenderFailure>) {
    let results: Vec<Result<RenderedExample, RenderError>> = instances
        .par_iter()
        .map(|inst| render(inst, instance_seed(seed, &inst.provenance), options, phrases))
        .collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (index, (r, inst)) in results.into_iter().zip(instances).enumerate() {
        match r {
            Ok(ex) => ok.push(ex),
            Err(e) => failed.push(RenderFailure {
                index,
                provenance: inst.provenance.key(),
                error: e.to_string(),
            }),
        }
    }
    (ok, failed)
}
