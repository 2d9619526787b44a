//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints one `[PASS]`/`[FAIL]` line, then exits non-zero if any failed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use cesar_core::composer::{compose, compose_corpus, evaluate, naive_compose, RejectReason, RuleSet, Verdict};
use cesar_core::evalkit::{bleu2, bleu2_corpus, extract_constraints, rouge_l, score_corpus, Constraint, ConstraintSpec, EvalConfig};
use cesar_core::export::{sample, SamplingPlan};
use cesar_core::ingest::{synth_corpus, SynthConfig};
use cesar_core::model::{
    validate_instance, ComponentKind, DialogItem, PromptStyle, Provenance, TargetItem, TaskInstance, TaskSignature, Turn,
};
use cesar_core::pipeline::{CorpusConfig, PipelineConfig, SynthSource};
use cesar_core::promptgen::{
    cot_transform, instruction_for_instance, render, target_label, PhraseTable, RenderOptions, INSTRUCTION_LABEL,
};
use cesar_core::seed::{rng, sha256_hex};
use cesar_core::taskreg::{Registry, BEGINS_WITH, ENDS_WITH, KEYWORDS, LENGTH_GENERATION};
use cesar_core::text::normalize;

type Outcome = Result<String, String>;
type TurnKey = (String, String, usize);
/// Id, name, body, runtime limit in seconds.
type Criterion = (&'static str, &'static str, fn() -> Outcome, Option<u64>);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const RESPONSE_TASKS: [&str; 6] = [
    BEGINS_WITH,
    ENDS_WITH,
    KEYWORDS,
    LENGTH_GENERATION,
    "persona_grounded_generation",
    "knowledge_grounded_generation",
];

fn response_registry() -> Registry {
    Registry::default().with_tasks(RESPONSE_TASKS)
}

fn synth(seed: u64, n: usize, dataset: &str) -> Vec<cesar_core::model::Dialog> {
    let cfg = SynthConfig {
        dataset: dataset.into(),
        ..SynthConfig::default()
    };
    synth_corpus(seed, n, &cfg)
}

fn sig(s: &str) -> TaskSignature {
    s.parse().unwrap()
}

/// A hand-built instance on a two-turn context.
fn instance(items: Vec<DialogItem>, target: TargetItem, task: &str) -> TaskInstance {
    let mut inst = TaskInstance {
        signature: TaskSignature::new(items.iter().map(|i| i.component).collect(), target.component).unwrap(),
        task_name: task.into(),
        instruction: String::new(),
        context: vec![Turn::new("A", "hello there , how was the trip ?"), Turn::new("B", "long but worth it .")],
        grounding_items: items,
        target_item: target,
        reasoning: Vec::new(),
        style: PromptStyle::Cesar,
        provenance: Provenance {
            dataset: "fuzz".into(),
            dialog_id: "d0".into(),
            target_turn_index: 2,
            tasks: vec![task.into()],
            variants: vec![0],
            seed: 0,
            split: None,
        },
    };
    inst.instruction = instruction_for_instance(&inst);
    inst
}

const KINDS: [(ComponentKind, &[&str]); 3] = [
    (ComponentKind::State, &["emotion", "summary", "intent"]),
    (ComponentKind::Evidence, &["persona", "knowledge"]),
    (ComponentKind::Action, &["dialog_act", "begins_with", "ends_with", "keywords", "length_class"]),
];

/// Random instance with `n` grounding items whose values are unique tokens.
fn fuzz_instance(r: &mut impl Rng, n: usize, tag: usize) -> TaskInstance {
    let items = (0..n)
        .map(|i| {
            let (comp, kinds) = KINDS.choose(r).unwrap();
            let kind = kinds.choose(r).unwrap();
            DialogItem::new(*comp, *kind, format!("zq{tag}v{i}"), 1)
        })
        .collect();
    let target = match r.gen_range(0..4) {
        0 => TargetItem {
            component: ComponentKind::Action,
            kind: "dialog_act".into(),
            value: format!("inform{tag}"),
        },
        1 => TargetItem {
            component: ComponentKind::State,
            kind: "emotion".into(),
            value: format!("calm{tag}"),
        },
        _ => TargetItem::response(format!("sure , see you at {tag} .")),
    };
    instance(items, target, "fuzz_task")
}

// ---------------------------------------------------------------------------

fn ac1() -> Outcome {
    let expected = [
        ("1", "ICA-R", "ICA-R", "ICAA-R", "R"),
        ("2", "ICE-R", "ICE-R", "ICEE-R", "R"),
        ("3", "ICE-R", "ICA-R", "ICEA-R", "R"),
        ("4", "ICS-R", "ICE-R", "ICSE-R", "R"),
        ("5", "ICS-R", "ICA-R", "ICSA-R", "R"),
        ("6", "ICS-R", "ICS-R", "ICSS-R", "R"),
        ("7", "ICE-A", "ICS-A", "ICAES-A", "A"),
        ("8", "ICS-S", "ICA-S", "ICAS-S", "S"),
        ("9", "ICA-A", "ICS-A", "ICASA-A", "A"),
        ("10", "ICA-A", "ICE-A", "ICAEA-A", "A"),
    ];
    let rules = RuleSet::default();
    check(rules.rules().len() == 10, || format!("{} rows", rules.rules().len()))?;
    for (rule, (id, a, b, composed, target)) in rules.rules().iter().zip(expected) {
        let got = (
            rule.rule_id.as_str(),
            rule.sig_a.to_string(),
            rule.sig_b.to_string(),
            rule.alias.as_str(),
            rule.target.letter().to_string(),
        );
        let want = (id, sig(a).to_string(), sig(b).to_string(), composed, target.to_string());
        check(got == want, || format!("row {id}: {got:?} != {want:?}"))?;
    }
    Ok("10 rows match".into())
}

fn ac2() -> Outcome {
    let dialogs = synth(2, 200, "synthetic");
    let atomic = response_registry().derive_corpus(&dialogs, 2).instances;
    let report = compose_corpus(&atomic, &RuleSet::default(), 2, 2);

    let allowed: BTreeSet<&str> = ["ICAA-R", "ICEE-R", "ICEA-R", "ICSE-R", "ICSA-R", "ICSS-R"].into();
    for c in &report.composites {
        let s = c.signature.to_string();
        check(allowed.contains(s.as_str()), || format!("unexpected composite {s}"))?;
    }

    // Oracle: every same-turn pair, filtered by the guard predicates and the
    // six response rules, deduplicated within each turn like the composer.
    let rule_pairs: BTreeSet<(String, String)> = [
        ("ICA-R", "ICA-R"),
        ("ICE-R", "ICE-R"),
        ("ICA-R", "ICE-R"),
        ("ICE-R", "ICS-R"),
        ("ICA-R", "ICS-R"),
        ("ICS-R", "ICS-R"),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    let leaks = |x: &TaskInstance, y: &TaskInstance| {
        let t = normalize(&y.target_item.value);
        x.grounding_items.iter().any(|i| {
            normalize(&i.value) == t
                && (i.component == y.target_item.component || !matches!(i.kind.as_str(), "begins_with" | "ends_with"))
        })
    };
    let mut groups: BTreeMap<TurnKey, Vec<&TaskInstance>> = BTreeMap::new();
    for i in &atomic {
        let p = &i.provenance;
        groups.entry((p.dataset.clone(), p.dialog_id.clone(), p.target_turn_index)).or_default().push(i);
    }
    let mut brute = 0usize;
    let mut rejected = 0usize;
    let mut accepted: BTreeSet<(&TurnKey, String, Vec<DialogItem>)> = BTreeSet::new();
    for (key, group) in &groups {
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                brute += 1;
                let mut pair = [a.signature.to_string(), b.signature.to_string()];
                pair.sort();
                let ok = a.context == b.context
                    && !leaks(a, b)
                    && !leaks(b, a)
                    && a.task_name != b.task_name
                    && a.target_item == b.target_item
                    && a.grounding_items != b.grounding_items
                    && rule_pairs.contains(&(pair[0].clone(), pair[1].clone()));
                if !ok {
                    rejected += 1;
                    continue;
                }
                let mut names = [a.task_name.clone(), b.task_name.clone()];
                names.sort();
                let mut items = [a.grounding_items.clone(), b.grounding_items.clone()].concat();
                items.sort();
                accepted.insert((key, names.join(" + "), items));
            }
        }
    }
    let oracle_names: BTreeSet<&str> = accepted.iter().map(|(_, n, _)| n.as_str()).collect();
    let got_names: BTreeSet<&str> = report.composites.iter().map(|c| c.task_name.as_str()).collect();
    check(brute == report.pairs_considered, || {
        format!("pairs considered {} != brute force {brute}", report.pairs_considered)
    })?;
    check(oracle_names == got_names, || {
        format!("task-name pairs differ: oracle {} vs composer {}", oracle_names.len(), got_names.len())
    })?;
    check(accepted.len() == report.composites.len(), || {
        format!("oracle {} composites, composer {}", accepted.len(), report.composites.len())
    })?;
    Ok(format!(
        "{brute} pairs - {rejected} rejected = {} composites over {} task-name pairs",
        accepted.len(),
        got_names.len()
    ))
}

fn ac3() -> Outcome {
    let mut r = rng(3);
    let labels = ["inform", "question", "directive", "commissive", "greeting", "thanking"];
    let rules = RuleSet::default();
    for n in 0..1000 {
        let label = format!("{}{}", labels.choose(&mut r).unwrap(), if r.gen_bool(0.5) { n.to_string() } else { String::new() });
        // Injected copy differs only in case and surrounding whitespace.
        let injected = match r.gen_range(0..3) {
            0 => label.clone(),
            1 => format!("  {} ", label.to_uppercase()),
            _ => label.chars().enumerate().map(|(i, c)| if i % 2 == 0 { c.to_ascii_uppercase() } else { c }).collect(),
        };
        let mut pred = instance(
            Vec::new(),
            TargetItem {
                component: ComponentKind::Action,
                kind: "dialog_act".into(),
                value: label.clone(),
            },
            "act_prediction",
        );
        let mut generation = instance(
            vec![DialogItem::new(ComponentKind::Action, "dialog_act", injected, 2)],
            TargetItem::response(format!("reply number {n} .")),
            "act_generation",
        );
        let turns = r.gen_range(1..=4);
        let ctx: Vec<Turn> = (0..turns).map(|i| Turn::new(["A", "B"][i % 2], format!("turn {i} of {n}"))).collect();
        pred.context = ctx.clone();
        generation.context = ctx;
        check(validate_instance(&pred).is_empty() && validate_instance(&generation).is_empty(), || {
            format!("variant {n}: invalid fixture")
        })?;
        let (a, b) = if r.gen_bool(0.5) { (&pred, &generation) } else { (&generation, &pred) };
        check(compose(a, b, &rules) == Err(RejectReason::OutputLeak), || {
            format!("variant {n} ({label}): {:?}", compose(a, b, &rules).map(|c| c.task_name))
        })?;
        check(evaluate(a, b, &rules).verdict == Verdict::Rejected(RejectReason::OutputLeak), || {
            format!("variant {n}: evaluate disagrees")
        })?;
    }
    Ok("1000/1000 rejected as \"output leaks into input\"".into())
}

/// A section as a comparable key: label plus its body lines in sorted order.
fn section_multiset(ex: &cesar_core::promptgen::RenderedExample) -> Vec<(String, Vec<String>)> {
    let mut v: Vec<(String, Vec<String>)> = ex
        .sections
        .iter()
        .map(|s| {
            let mut lines: Vec<String> = s.body.lines().map(str::to_string).collect();
            lines.sort();
            (s.label.clone(), lines)
        })
        .collect();
    v.sort();
    v
}

fn ac4() -> Outcome {
    let mut r = rng(4);
    let phrases = PhraseTable::default();
    let opts = RenderOptions::default();
    let mut renders = 0;
    for n in 0..500 {
        let dim = r.gen_range(0..=4);
        let inst = fuzz_instance(&mut r, dim, n);
        let label = target_label(inst.signature.target());
        let mut reference = None;
        for s in 0..20u64 {
            let ex = render(&inst, s * 7919 + n as u64, &opts, &phrases).map_err(|e| format!("instance {n}: {e}"))?;
            renders += 1;
            let first = &ex.sections[0];
            let last = ex.sections.last().unwrap();
            check(first.label == INSTRUCTION_LABEL && ex.input_text.starts_with(INSTRUCTION_LABEL), || {
                format!("instance {n} seed {s}: starts with {:?}", first.label)
            })?;
            check(last.label == label && ex.input_text.ends_with(&format!("{label}:")), || {
                format!("instance {n} seed {s}: ends with {:?}", last.label)
            })?;
            let ms = section_multiset(&ex);
            match &reference {
                None => reference = Some(ms),
                Some(want) => check(*want == ms, || format!("instance {n} seed {s}: section multiset changed"))?,
            }
        }
    }
    Ok(format!("{renders} renders, 0 failures"))
}

fn ac5() -> Outcome {
    let mut r = rng(5);
    let phrases = PhraseTable::default();
    let opts = RenderOptions::default();
    for n in 0..200 {
        let dim = r.gen_range(1..=4);
        let inst = fuzz_instance(&mut r, dim, n);
        let k = r.gen_range(0..=dim);
        let shift: Vec<DialogItem> = inst.grounding_items.choose_multiple(&mut r, k).cloned().collect();
        let out = cot_transform(&inst, &shift).map_err(|e| format!("instance {n}: {e}"))?;
        check(out.dimension() == dim - k, || format!("instance {n}: dimension {} != {}", out.dimension(), dim - k))?;
        let before = render(&inst, n as u64, &opts, &phrases).map_err(|e| e.to_string())?;
        let after = render(&out, n as u64, &opts, &phrases).map_err(|e| e.to_string())?;
        if k == 0 {
            check(out == inst, || format!("instance {n}: empty shift changed the instance"))?;
            check(before.input_text == after.input_text && before.output_text == after.output_text, || {
                format!("instance {n}: empty shift changed the render")
            })?;
            continue;
        }
        let lines: Vec<&str> = after.output_text.lines().collect();
        check(lines.last() == Some(&inst.target_item.value.as_str()), || {
            format!("instance {n}: output does not end with the target")
        })?;
        for item in &shift {
            check(!after.input_text.contains(&item.value), || format!("instance {n}: {} still in input", item.value))?;
            check(lines[..lines.len() - 1].contains(&item.value.as_str()), || {
                format!("instance {n}: {} missing before the target", item.value)
            })?;
        }
        for item in &out.grounding_items {
            check(after.input_text.contains(&item.value), || format!("instance {n}: kept {} lost", item.value))?;
        }
    }
    Ok("200 transforms, 0 failures".into())
}

fn ac6() -> Outcome {
    check(rouge_l("a b c", "a c") == 0.8, || format!("rouge_l = {}", rouge_l("a b c", "a c")))?;
    // Hand-computed: clipped unigram/bigram precision, geometric mean, brevity penalty.
    let goldens: [(&str, &str, f64); 4] = [
        ("a b c d", "a b x d", (0.75f64 * (1.0 / 3.0)).sqrt()),
        ("the cat sat", "the cat sat on the mat", (-1.0f64).exp()),
        ("a", "b", 0.5f64.sqrt()),
        ("the the the the", "the cat", 0.25),
    ];
    for (cand, reference, want) in goldens {
        let got = bleu2(cand, &[reference]);
        check((got - want).abs() < 1e-9, || format!("bleu2({cand:?}, {reference:?}) = {got}, want {want}"))?;
    }
    let corpus = bleu2_corpus(&[("a b c", vec!["a b c"]), ("x y", vec!["x y"])]);
    check(bleu2("a b c", &["a b c"]) == 1.0 && corpus == 1.0 && rouge_l("a b c", "a b c") == 1.0, || {
        "identity is not exactly 1.0".into()
    })?;

    let vocab = ["red", "blue", "green", "cat", "dog", "sun"];
    let sentence = |r: &mut rand::rngs::StdRng| -> String {
        let n = r.gen_range(1..8);
        (0..n).map(|_| *vocab.choose(r).unwrap()).collect::<Vec<_>>().join(" ")
    };
    let config = EvalConfig::default();
    for c in 0..1000 {
        let mut cr: rand::rngs::StdRng = rand::SeedableRng::seed_from_u64(c);
        let n = cr.gen_range(1..12);
        let examples: Vec<(ConstraintSpec, String)> = (0..n)
            .map(|i| {
                let mut constraints = Vec::new();
                if cr.gen_bool(0.6) {
                    constraints.push(Constraint::BeginsWith { phrase: vocab.choose(&mut cr).unwrap().to_string() });
                }
                if cr.gen_bool(0.6) {
                    constraints.push(Constraint::EndsWith { phrase: vocab.choose(&mut cr).unwrap().to_string() });
                }
                if cr.gen_bool(0.5) {
                    constraints.push(Constraint::ContainsKeywords {
                        keywords: vec![vocab.choose(&mut cr).unwrap().to_string()],
                    });
                }
                if cr.gen_bool(0.4) {
                    constraints.push(Constraint::LengthClass { label: "short".into() });
                }
                let output = sentence(&mut cr);
                constraints.push(Constraint::ReferenceOverlap { reference: sentence(&mut cr) });
                (
                    ConstraintSpec {
                        id: format!("{c}/{i}"),
                        task: "t".into(),
                        constraints,
                    },
                    output,
                )
            })
            .collect();
        let report = score_corpus(&examples, &config);
        let Some(comp) = report.compositional_accuracy else { continue };
        let min = report
            .per_constraint
            .iter()
            .filter(|(name, _)| name.as_str() != "REF")
            .map(|(_, a)| a.accuracy)
            .fold(f64::INFINITY, f64::min);
        check(comp <= min + 1e-12, || format!("corpus {c}: compositional {comp} > min {min}"))?;
    }
    Ok("goldens exact, bound holds on 1000 corpora".into())
}

fn ac7() -> Outcome {
    let dialogs = synth(7, 200, "synthetic");
    let registry = Registry::default().with_tasks([BEGINS_WITH, ENDS_WITH, KEYWORDS, LENGTH_GENERATION]);
    let instances = registry.derive_corpus(&dialogs, 7).instances;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for inst in &instances {
        let spec = extract_constraints(inst);
        for c in spec.constraints.iter().filter(|c| c.is_boolean()) {
            let ok = c.check(&inst.target_item.value, &registry.buckets);
            check(ok == Some(true), || format!("{}: gold fails {c:?}", inst.provenance.key()))?;
            *counts.entry(c.name()).or_default() += 1;
        }
    }
    for name in ["BW", "EW", "KC", "LC"] {
        check(counts.get(name).copied().unwrap_or(0) > 0, || format!("no {name} constraints derived"))?;
    }
    Ok(format!("gold satisfies all {:?}", counts))
}

fn ac8() -> Outcome {
    let mut dialogs = synth(8, 1000, "synth_a");
    dialogs.extend(synth(9, 1000, "synth_b"));
    let atomic = Registry::default().with_tasks([BEGINS_WITH, ENDS_WITH]).derive_corpus(&dialogs, 8).instances;
    let composites = compose_corpus(&atomic, &RuleSet::default(), 2, 8).composites;
    let mut pool = atomic;
    pool.extend(composites);
    let plan = SamplingPlan {
        atomic_quota: 5000,
        composite_quota: 1000,
        seed: 8,
        ..SamplingPlan::default()
    };

    let mut supply: HashMap<(String, Option<String>), usize> = HashMap::new();
    for i in &pool {
        let ds = i.is_composite().then(|| i.provenance.dataset.clone());
        *supply.entry((i.task_name.clone(), ds)).or_default() += 1;
    }
    let sampled = sample(&pool, &plan);
    let mut got: HashMap<(String, Option<String>), usize> = HashMap::new();
    for i in &sampled {
        let ds = i.is_composite().then(|| i.provenance.dataset.clone());
        *got.entry((i.task_name.clone(), ds)).or_default() += 1;
    }
    check(supply.len() == 4, || format!("expected 2 atomic + 2 composite strata, got {}", supply.len()))?;
    for (key, have) in &supply {
        let quota = if key.1.is_some() { 1000 } else { 5000 };
        check(*have > quota, || format!("{key:?}: supply {have} does not exceed quota {quota}"))?;
        check(got.get(key) == Some(&quota), || format!("{key:?}: sampled {:?}, quota {quota}", got.get(key)))?;
    }
    let keys: BTreeSet<String> = sampled.iter().map(|i| i.provenance.key()).collect();
    check(keys.len() == sampled.len(), || "duplicate provenance".into())?;
    let again = sample(&pool, &plan);
    check(serde_json::to_vec(&sampled).unwrap() == serde_json::to_vec(&again).unwrap(), || {
        "resample is not byte-identical".into()
    })?;
    Ok(format!("{} sampled from {}", sampled.len(), pool.len()))
}

fn jsonl_digests(dir: &Path) -> BTreeMap<String, String> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), sha256_hex(&fs::read(&p).unwrap())))
        .collect()
}

fn ac9() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = PipelineConfig {
        seed: 9,
        corpus: CorpusConfig {
            synthetic: Some(SynthSource {
                dialogs: 40,
                ..SynthSource::default()
            }),
            ..CorpusConfig::default()
        },
        ..PipelineConfig::default()
    };
    let cfg = tmp.path().join("cesar.toml");
    fs::write(&cfg, config.to_toml()).map_err(|e| e.to_string())?;
    let mut digests = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_cesar"))
            .args(["--quiet", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .arg("run")
            .output()
            .map_err(|e| e.to_string())?;
        check(status.status.success(), || format!("run {run} failed: {}", String::from_utf8_lossy(&status.stderr)))?;
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).map_err(|e| e.to_string())?;
        digests.push((jsonl_digests(&out), manifest["files"].clone()));
    }
    check(digests[0].0.len() >= 8, || format!("only {} JSONL artifacts", digests[0].0.len()))?;
    check(digests[0] == digests[1], || "checksums differ between runs".into())?;
    Ok(format!("{} JSONL artifacts identical across runs", digests[0].0.len()))
}

fn ac10() -> Outcome {
    let dialogs = synth(10, 100, "synthetic");
    let atomic = response_registry().derive_corpus(&dialogs, 10).instances;
    let rules = RuleSet::default();
    let phrases = PhraseTable::default();
    let opts = RenderOptions::default();
    let mut pairs = 0;
    'outer: for (i, a) in atomic.iter().enumerate() {
        for b in &atomic[i + 1..] {
            if evaluate(a, b, &rules).verdict != Verdict::Accepted {
                continue;
            }
            let cesar = compose(a, b, &rules).map_err(|e| e.as_str().to_string())?;
            let naive = naive_compose(a, b);
            let set = |i: &TaskInstance| extract_constraints(i).constraints.into_iter().collect::<BTreeSet<_>>();
            check(set(&cesar) == set(&naive), || format!("{}: constraint sets differ", cesar.task_name))?;
            let rc = render(&cesar, 1, &opts, &phrases).map_err(|e| e.to_string())?;
            let rn = render(&naive, 1, &opts, &phrases).map_err(|e| e.to_string())?;
            check(rc.input_text != rn.input_text, || format!("{}: identical prompts", cesar.task_name))?;
            pairs += 1;
            if pairs == 100 {
                break 'outer;
            }
        }
    }
    check(pairs == 100, || format!("only {pairs} composable pairs"))?;
    Ok("100 pairs: same constraints, different prompts".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("AC1", "rule-table fidelity", ac1, Some(1)),
        ("AC2", "composition closure", ac2, Some(10)),
        ("AC3", "infeasibility guard", ac3, Some(5)),
        ("AC4", "order invariance", ac4, None),
        ("AC5", "CoT transform", ac5, None),
        ("AC6", "metric oracles", ac6, None),
        ("AC7", "derivation round-trip", ac7, None),
        ("AC8", "sampling quotas", ac8, Some(10)),
        ("AC9", "end-to-end determinism", ac9, None),
        ("AC10", "naive vs composed equivalence", ac10, None),
    ];
    let mut failed = 0;
    for (id, name, f, limit) in criteria {
        let start = Instant::now();
        let mut result = f();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(secs)) = (&result, limit) {
            if elapsed > Duration::from_secs(secs) {
                result = Err(format!("took {elapsed:.2?}, limit {secs}s"));
            }
        }
        match result {
            Ok(detail) => println!("[PASS] {id} {name}: {detail} ({elapsed:.2?})"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {detail} ({elapsed:.2?})");
            }
        }
    }
    println!("{} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
