//! Constraint extraction and scoring of model outputs.
//!
//! Every boolean check compares normalized tokens (lowercased, punctuation
//! split off), so "song," and "song ," are treated alike.

mod metrics;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{ComponentKind, TaskInstance};
use crate::promptgen::split_list;
use crate::taskreg::{LengthBuckets, LengthClass};
use crate::text::{find_subsequence, normalize, normalized_tokens, token_count};

pub use metrics::{bleu2, bleu2_corpus, rouge_l, rouge_l_beta};

/// One checkable property of an output.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Constraint {
    BeginsWith { phrase: String },
    EndsWith { phrase: String },
    ContainsKeywords { keywords: Vec<String> },
    LengthClass { label: String },
    /// Label-valued targets (states, actions, evidence) must be reproduced.
    ExactMatch { label: String },
    /// Free-text targets are scored by overlap with the reference.
    ReferenceOverlap { reference: String },
}

impl Constraint {
    /// Short column name: BW, EW, KC, LC, EM or REF.
    pub fn name(&self) -> &'static str {
        match self {
            Constraint::BeginsWith { .. } => "BW",
            Constraint::EndsWith { .. } => "EW",
            Constraint::ContainsKeywords { .. } => "KC",
            Constraint::LengthClass { .. } => "LC",
            Constraint::ExactMatch { .. } => "EM",
            Constraint::ReferenceOverlap { .. } => "REF",
        }
    }

    pub fn is_boolean(&self) -> bool {
        !matches!(self, Constraint::ReferenceOverlap { .. })
    }

    /// Boolean verdict; `None` for reference overlap.
    pub fn check(&self, output: &str, buckets: &LengthBuckets) -> Option<bool> {
        Some(match self {
            Constraint::BeginsWith { phrase } => check_begins_with(output, phrase),
            Constraint::EndsWith { phrase } => check_ends_with(output, phrase),
            Constraint::ContainsKeywords { keywords } => check_keywords(output, keywords),
            Constraint::LengthClass { label } => check_length_class(output, label, buckets),
            Constraint::ExactMatch { label } => normalize(output) == normalize(label),
            Constraint::ReferenceOverlap { .. } => return None,
        })
    }
}

/// Constraints of one example, keyed by its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub id: String,
    pub task: String,
    pub constraints: Vec<Constraint>,
}

/// Constraints implied by an instance: one per surface-constraint item plus
/// one for the target. Sorted and deduplicated, so composites carry the
/// union of their parents' constraints whatever the item order.
pub fn extract_constraints(inst: &TaskInstance) -> ConstraintSpec {
    let mut set: BTreeSet<Constraint> = BTreeSet::new();
    if inst.target_item.component == ComponentKind::Response {
        for item in &inst.grounding_items {
            let c = match item.kind.as_str() {
                "begins_with" => Constraint::BeginsWith {
                    phrase: item.value.clone(),
                },
                "ends_with" => Constraint::EndsWith {
                    phrase: item.value.clone(),
                },
                "keywords" => Constraint::ContainsKeywords {
                    keywords: split_list(&item.value),
                },
                "length_class" => Constraint::LengthClass {
                    label: item.value.clone(),
                },
                _ => continue,
            };
            set.insert(c);
        }
        set.insert(Constraint::ReferenceOverlap {
            reference: inst.target_item.value.clone(),
        });
    } else {
        set.insert(Constraint::ExactMatch {
            label: inst.target_item.value.clone(),
        });
    }
    ConstraintSpec {
        id: inst.provenance.key(),
        task: inst.task_name.clone(),
        constraints: set.into_iter().collect(),
    }
}

pub fn check_begins_with(output: &str, phrase: &str) -> bool {
    let out = normalized_tokens(output);
    let p = normalized_tokens(phrase);
    out.starts_with(&p)
}

pub fn check_ends_with(output: &str, phrase: &str) -> bool {
    let out = normalized_tokens(output);
    let p = normalized_tokens(phrase);
    out.ends_with(&p)
}

/// Every keyword occurs as a token (or contiguous token run) of the output.
pub fn check_keywords<S: AsRef<str>>(output: &str, keywords: &[S]) -> bool {
    let out = normalized_tokens(output);
    keywords.iter().all(|k| {
        let k = normalized_tokens(k.as_ref());
        !k.is_empty() && find_subsequence(&out, &k).is_some()
    })
}

pub fn check_length_class(output: &str, label: &str, buckets: &LengthBuckets) -> bool {
    label
        .parse::<LengthClass>()
        .is_ok_and(|want| buckets.classify(token_count(output)) == want)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub buckets: LengthBuckets,
    pub rouge_beta: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            buckets: LengthBuckets::default(),
            rouge_beta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleScore {
    pub id: String,
    /// Verdict per boolean constraint, in spec order.
    pub checks: Vec<(String, bool)>,
    /// Whether every boolean constraint holds; `None` when there are none.
    pub all_satisfied: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge_l: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintAccuracy {
    /// Examples carrying this constraint.
    pub support: usize,
    pub satisfied: usize,
    /// `satisfied / support`.
    pub support_accuracy: f64,
    /// One minus violations over all examples with any boolean constraint,
    /// so an example without this constraint never counts against it.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub examples: usize,
    pub per_constraint: BTreeMap<String, ConstraintAccuracy>,
    /// Fraction of examples (with boolean constraints) satisfying all of them.
    pub compositional_accuracy: Option<f64>,
    pub bleu2: Option<f64>,
    pub rouge_l: Option<f64>,
    pub per_example: Vec<ExampleScore>,
}

/// Scores outputs against their constraint specs.
pub fn score_corpus(examples: &[(ConstraintSpec, String)], config: &EvalConfig) -> MetricReport {
    let mut per_example = Vec::with_capacity(examples.len());
    let mut overlap_pairs: Vec<(&str, Vec<&str>)> = Vec::new();
    let mut rouge_sum = 0.0;
    for (spec, output) in examples {
        let mut checks = Vec::new();
        let mut rouge = None;
        for c in &spec.constraints {
            match c {
                Constraint::ReferenceOverlap { reference } => {
                    let r = rouge_l_beta(output, reference, config.rouge_beta);
                    rouge_sum += r;
                    rouge = Some(r);
                    overlap_pairs.push((output.as_str(), vec![reference.as_str()]));
                }
                other => {
                    let ok = other.check(output, &config.buckets).unwrap_or(false);
                    checks.push((other.name().to_string(), ok));
                }
            }
        }
        let all_satisfied = (!checks.is_empty()).then(|| checks.iter().all(|(_, ok)| *ok));
        per_example.push(ExampleScore {
            id: spec.id.clone(),
            checks,
            all_satisfied,
            rouge_l: rouge,
        });
    }

    let with_bool = per_example.iter().filter(|e| e.all_satisfied.is_some()).count();
    let mut tallies: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for e in &per_example {
        for (name, ok) in &e.checks {
            let t = tallies.entry(name.clone()).or_default();
            t.0 += 1;
            t.1 += usize::from(*ok);
        }
    }
    let per_constraint = tallies
        .into_iter()
        .map(|(name, (support, satisfied))| {
            let acc = ConstraintAccuracy {
                support,
                satisfied,
                support_accuracy: satisfied as f64 / support as f64,
                accuracy: 1.0 - (support - satisfied) as f64 / with_bool as f64,
            };
            (name, acc)
        })
        .collect();
    let all_ok = per_example.iter().filter(|e| e.all_satisfied == Some(true)).count();
    MetricReport {
        examples: examples.len(),
        per_constraint,
        compositional_accuracy: (with_bool > 0).then(|| all_ok as f64 / with_bool as f64),
        bleu2: (!overlap_pairs.is_empty()).then(|| bleu2_corpus(&overlap_pairs)),
        rouge_l: (!overlap_pairs.is_empty()).then(|| rouge_sum / overlap_pairs.len() as f64),
        per_example,
    }
}
