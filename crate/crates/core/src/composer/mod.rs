//! Task composition: pairing instances that share a dialog turn and target
//! into higher-dimensional tasks, with a guard against infeasible pairs.

mod rules;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::model::{
    leaks_target, validate_instance, ComponentKind, DialogItem, PromptStyle, TaskInstance, TaskSignature,
};
use crate::promptgen::instruction_for_instance;
use crate::seed::derive_seed;
use crate::text::normalize;

pub use rules::{CompositionRule, RuleError, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    ContextMismatch,
    OutputLeak,
    DuplicateTask,
    TargetMismatch,
    NoMatchingRule,
    InsufficientOverlap,
    InvalidComposite,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::ContextMismatch => "context mismatch",
            RejectReason::OutputLeak => "output leaks into input",
            RejectReason::DuplicateTask => "duplicate task type",
            RejectReason::TargetMismatch => "target mismatch",
            RejectReason::NoMatchingRule => "no matching rule",
            RejectReason::InsufficientOverlap => "insufficient overlap",
            RejectReason::InvalidComposite => "invalid composite",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accepted,
    Rejected(RejectReason),
}

/// A considered pair together with the rule it matched, if any.
#[derive(Debug, Clone)]
pub struct CompositionCandidate<'a> {
    pub instance_a: &'a TaskInstance,
    pub instance_b: &'a TaskInstance,
    pub rule: Option<&'a CompositionRule>,
    pub verdict: Verdict,
}

type TaskRef = (String, u32);

fn task_refs(inst: &TaskInstance) -> Vec<TaskRef> {
    inst.provenance
        .tasks
        .iter()
        .cloned()
        .zip(inst.provenance.variants.iter().copied().chain(std::iter::repeat(0)))
        .collect()
}

/// Elements of `a` not matched one-for-one in `b`.
fn multiset_minus<T: PartialEq + Clone>(a: &[T], b: &[T]) -> Vec<T> {
    let mut rest: Vec<&T> = b.iter().collect();
    let mut out = Vec::new();
    for x in a {
        match rest.iter().position(|y| *y == x) {
            Some(p) => {
                rest.swap_remove(p);
            }
            None => out.push(x.clone()),
        }
    }
    out
}

fn leaks_into(items: &[DialogItem], other: &TaskInstance) -> bool {
    let norm = normalize(&other.target_item.value);
    items.iter().any(|i| leaks_target(i, &other.target_item, &norm))
}

/// Rejects pairs that cannot form a sensible task, checked in order:
/// different dialog turn, one task's answer in the other's input, the same
/// task twice, or differing targets.
pub fn infeasibility_guard(a: &TaskInstance, b: &TaskInstance) -> Result<(), RejectReason> {
    let (pa, pb) = (&a.provenance, &b.provenance);
    if pa.dataset != pb.dataset
        || pa.dialog_id != pb.dialog_id
        || pa.target_turn_index != pb.target_turn_index
        || a.context != b.context
    {
        return Err(RejectReason::ContextMismatch);
    }
    if leaks_into(&a.grounding_items, b) || leaks_into(&b.grounding_items, a) {
        return Err(RejectReason::OutputLeak);
    }
    let (ra, rb) = (task_refs(a), task_refs(b));
    let only_a: BTreeSet<String> = multiset_minus(&ra, &rb).into_iter().map(|r| r.0).collect();
    let only_b: BTreeSet<String> = multiset_minus(&rb, &ra).into_iter().map(|r| r.0).collect();
    if only_a.is_empty() || only_b.is_empty() || !only_a.is_disjoint(&only_b) {
        return Err(RejectReason::DuplicateTask);
    }
    if a.target_item != b.target_item {
        return Err(RejectReason::TargetMismatch);
    }
    Ok(())
}

fn single(item: &DialogItem, target: ComponentKind) -> TaskSignature {
    TaskSignature::new(vec![item.component], target).expect("grounding item component")
}

/// Guard, overlap and rule checks for one pair, without building the composite.
pub fn evaluate<'a>(a: &'a TaskInstance, b: &'a TaskInstance, rules: &'a RuleSet) -> CompositionCandidate<'a> {
    let reject = |r| CompositionCandidate {
        instance_a: a,
        instance_b: b,
        rule: None,
        verdict: Verdict::Rejected(r),
    };
    if let Err(r) = infeasibility_guard(a, b) {
        return reject(r);
    }
    let dim = a.dimension();
    if dim == 0 || b.dimension() != dim {
        return reject(RejectReason::NoMatchingRule);
    }
    let only_a = multiset_minus(&a.grounding_items, &b.grounding_items);
    let only_b = multiset_minus(&b.grounding_items, &a.grounding_items);
    if only_a.len() != 1 || only_b.len() != 1 {
        return reject(RejectReason::InsufficientOverlap);
    }
    let target = a.signature.target();
    match rules.lookup(&single(&only_a[0], target), &single(&only_b[0], target)) {
        Some(rule) => CompositionCandidate {
            instance_a: a,
            instance_b: b,
            rule: Some(rule),
            verdict: Verdict::Accepted,
        },
        None => reject(RejectReason::NoMatchingRule),
    }
}

/// Composes two instances of equal dimension `i` into an `(i+1)`-D instance.
///
/// The grounding is the union multiset of both groundings, sorted; the task
/// name and provenance list the atomic parents in sorted order, so the
/// result does not depend on argument order.
pub fn compose(a: &TaskInstance, b: &TaskInstance, rules: &RuleSet) -> Result<TaskInstance, RejectReason> {
    if let Verdict::Rejected(r) = evaluate(a, b, rules).verdict {
        return Err(r);
    }
    let mut items = a.grounding_items.clone();
    items.extend(multiset_minus(&b.grounding_items, &a.grounding_items));
    items.sort();

    let mut refs: Vec<TaskRef> = task_refs(a);
    refs.extend(multiset_minus(&task_refs(b), &refs));
    refs.sort();

    let signature = TaskSignature::new(items.iter().map(|i| i.component).collect(), a.signature.target())
        .map_err(|_| RejectReason::InvalidComposite)?;
    let mut out = a.clone();
    out.signature = signature;
    out.grounding_items = items;
    out.task_name = refs.iter().map(|r| r.0.as_str()).collect::<Vec<_>>().join(" + ");
    out.provenance.tasks = refs.iter().map(|r| r.0.clone()).collect();
    out.provenance.variants = refs.iter().map(|r| r.1).collect();
    out.provenance.seed = a.provenance.seed ^ b.provenance.seed;
    out.reasoning = Vec::new();
    out.style = PromptStyle::Cesar;
    out.instruction = instruction_for_instance(&out);
    if !validate_instance(&out).is_empty() {
        return Err(RejectReason::InvalidComposite);
    }
    Ok(out)
}

/// Baseline composition: instructions joined with "and", items listed in
/// task order, no feasibility checks.
pub fn naive_compose(a: &TaskInstance, b: &TaskInstance) -> TaskInstance {
    let first = a.instruction.trim_end().trim_end_matches('.');
    let mut second = b.instruction.trim().chars();
    let second = match second.next() {
        Some(c) => c.to_lowercase().chain(second).collect::<String>(),
        None => String::new(),
    };
    let mut items = a.grounding_items.clone();
    items.extend(b.grounding_items.iter().cloned());
    let mut out = a.clone();
    out.signature = TaskSignature::new(items.iter().map(|i| i.component).collect(), a.signature.target())
        .expect("grounding items have grounding components");
    out.grounding_items = items;
    out.instruction = format!("{first} and {second}");
    out.task_name = format!("{} + {}", a.task_name, b.task_name);
    out.provenance.tasks.extend(b.provenance.tasks.iter().cloned());
    out.provenance.variants.extend(b.provenance.variants.iter().copied());
    out.reasoning = Vec::new();
    out.style = PromptStyle::Naive;
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CompositionReport {
    pub composites: Vec<TaskInstance>,
    pub pairs_considered: usize,
    /// Rejected pair counts keyed by reason.
    pub rejections: BTreeMap<String, usize>,
}

type GroupKey = (String, String, usize);

fn canonical_order(group: &mut [&TaskInstance]) {
    group.sort_by_cached_key(|i| (i.provenance.key(), serde_json::to_string(i).unwrap_or_default()));
}

fn compose_group(group: &[&TaskInstance], rules: &RuleSet, max_dim: usize, seed: u64) -> CompositionReport {
    let mut report = CompositionReport::default();
    let mut level: Vec<TaskInstance> = group.iter().map(|i| (*i).clone()).collect();
    let mut seen: BTreeSet<(String, Vec<DialogItem>)> = BTreeSet::new();
    for _ in 2..=max_dim {
        let mut next: Vec<TaskInstance> = Vec::new();
        for i in 0..level.len() {
            for j in i + 1..level.len() {
                report.pairs_considered += 1;
                match compose(&level[i], &level[j], rules) {
                    Ok(mut c) => {
                        if seen.insert((c.task_name.clone(), c.grounding_items.clone())) {
                            c.provenance.seed = derive_seed(seed, "compose", &c.provenance.key());
                            next.push(c);
                        }
                    }
                    Err(r) => *report.rejections.entry(r.as_str().to_string()).or_default() += 1,
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_by_cached_key(|c| (c.dimension(), c.provenance.key()));
        report.composites.extend(next.iter().cloned());
        level = next;
    }
    report
}

/// Composes within each (dialog, target turn) group up to `max_dim`,
/// iterating on accepted composites. Output is sorted by group, then
/// dimension, then provenance, and does not depend on input order.
pub fn compose_corpus(instances: &[TaskInstance], rules: &RuleSet, max_dim: usize, seed: u64) -> CompositionReport {
    let mut groups: BTreeMap<GroupKey, Vec<&TaskInstance>> = BTreeMap::new();
    for inst in instances {
        let p = &inst.provenance;
        groups
            .entry((p.dataset.clone(), p.dialog_id.clone(), p.target_turn_index))
            .or_default()
            .push(inst);
    }
    let parts: Vec<CompositionReport> = groups
        .into_par_iter()
        .map(|(_, mut group)| {
            canonical_order(&mut group);
            compose_group(&group, rules, max_dim, seed)
        })
        .collect();
    let mut out = CompositionReport::default();
    for part in parts {
        out.composites.extend(part.composites);
        out.pairs_considered += part.pairs_considered;
        for (k, v) in part.rejections {
            *out.rejections.entry(k).or_default() += v;
        }
    }
    out
}
