use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde_json::Value;
use tracing::{info, warn};

use cesar_core::composer::{compose_corpus, RuleSet};
use cesar_core::evalkit::{score_corpus, ConstraintSpec, EvalConfig};
use cesar_core::export::{
    export_corpus, read_jsonl, sample, stats, write_jsonl, CorpusStats, ExportRecord, SamplingPlan,
};
use cesar_core::ingest::{load_corpus, parse_corpus, synth_corpus, write_canonical, AdapterSpec, IngestError, SynthConfig};
use cesar_core::model::{validate_instance, TaskInstance};
use cesar_core::pipeline::{run_pipeline, PipelineConfig};
use cesar_core::promptgen::{render_corpus, PhraseTable, RenderOptions};
use cesar_core::taskreg::TASKS;

use crate::{Cli, Command, ComposeArgs, EvalArgs, ExportArgs, IngestArgs, RenderFlags, TasksArgs};

struct Ctx {
    config: PipelineConfig,
    seed: u64,
    out: Option<PathBuf>,
}

impl Ctx {
    fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

pub fn dispatch(cli: &Cli) -> Result<ExitCode> {
    let config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(config.seed),
        out: cli.out.clone(),
        config,
    };
    match &cli.command {
        Command::Ingest(a) => ingest(&ctx, a),
        Command::Tasks(a) => tasks(&ctx, a),
        Command::Compose(a) => compose(&ctx, a),
        Command::Render(a) => render(&ctx, &a.input, &a.flags),
        Command::Export(a) => export(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Stats(a) => stats_cmd(&ctx, &a.input),
        Command::Validate(a) => validate(&a.input),
        Command::Run => run(cli, ctx),
    }
}

/// Prints pretty JSON to stdout; a closed pipe (`| head`) is not an error.
fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    emit(&serde_json::to_string_pretty(value)?)
}

fn emit(text: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn read_instances(path: &Path) -> Result<Vec<TaskInstance>> {
    let v: Vec<TaskInstance> = read_jsonl(path).with_context(|| format!("reading instances from {}", path.display()))?;
    info!(count = v.len(), path = %path.display(), "loaded instances");
    Ok(v)
}

fn ingest(ctx: &Ctx, a: &IngestArgs) -> Result<ExitCode> {
    if a.inputs.is_empty() && a.synthetic.is_none() {
        bail!("nothing to ingest: pass --input and/or --synthetic");
    }
    let mut dialogs = Vec::new();
    for path in &a.inputs {
        let mut adapter = AdapterSpec::by_name(&a.adapter)?;
        if let Some(ds) = &a.dataset {
            adapter.dataset = ds.clone();
        }
        let (mut ds, manifest) = load_corpus(path, &adapter)?;
        info!(path = %path.display(), dialogs = manifest.count, checksum = %manifest.checksum, "ingested");
        dialogs.append(&mut ds);
    }
    if let Some(n) = a.synthetic {
        let cfg = SynthConfig {
            dataset: a.dataset.clone().unwrap_or_else(|| SynthConfig::default().dataset),
            ..SynthConfig::default()
        };
        dialogs.extend(synth_corpus(ctx.seed, n, &cfg));
    }
    let out = ctx.out_or("corpus.jsonl");
    let manifest = write_canonical(&dialogs, &out)?;
    info!(path = %out.display(), dialogs = manifest.count, "wrote canonical corpus");
    print_json(&manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn tasks(ctx: &Ctx, a: &TasksArgs) -> Result<ExitCode> {
    let Some(input) = &a.input else {
        if a.json {
            print_json(&TASKS)?;
        } else {
            let table: Vec<String> = TASKS
                .iter()
                .map(|d| format!("{:<40} {:<7} {}", d.task_name, d.signature, d.description))
                .collect();
            emit(&table.join("\n"))?;
        }
        return Ok(ExitCode::SUCCESS);
    };
    let (dialogs, _) = load_corpus(input, &AdapterSpec::canonical())?;
    let mut registry = ctx.config.registry();
    if !a.enable.is_empty() {
        registry = registry.with_tasks(a.enable.iter().cloned());
    }
    if a.candidates > 0 {
        registry.candidates = a.candidates;
    }
    let derived = registry.derive_corpus(&dialogs, ctx.seed);
    for (reason, n) in &derived.skipped {
        info!(reason = %reason, count = n, "skipped derivations");
    }
    let out = ctx.out_or("instances.jsonl");
    write_jsonl(&derived.instances, &out)?;
    info!(instances = derived.instances.len(), path = %out.display(), "derived atomic instances");
    Ok(ExitCode::SUCCESS)
}

fn compose(ctx: &Ctx, a: &ComposeArgs) -> Result<ExitCode> {
    if a.max_dim < 2 {
        bail!("--max-dim must be at least 2");
    }
    let rules = match a.rules.as_ref().or(ctx.config.compose.rules.as_ref()) {
        Some(p) => RuleSet::load(p)?,
        None => RuleSet::default(),
    };
    let instances = read_instances(&a.input)?;
    let report = compose_corpus(&instances, &rules, a.max_dim, ctx.seed);
    for (reason, n) in &report.rejections {
        info!(reason = %reason, count = n, "rejected pairs");
    }
    let mut out_items = if a.keep_atomic { instances } else { Vec::new() };
    out_items.extend(report.composites.iter().cloned());
    let out = ctx.out_or("composed.jsonl");
    write_jsonl(&out_items, &out)?;
    info!(
        pairs = report.pairs_considered,
        composites = report.composites.len(),
        path = %out.display(),
        "composed"
    );
    Ok(ExitCode::SUCCESS)
}

fn render_setup(ctx: &Ctx, flags: &RenderFlags) -> Result<(RenderOptions, PhraseTable)> {
    let mut opts = ctx.config.render.options.clone();
    opts.cot = flags.cot.parse().map_err(anyhow::Error::msg)?;
    opts.generic_fallback |= flags.generic_fallback;
    if flags.no_block_shuffle {
        opts.block_shuffle = false;
    }
    let phrases = match flags.phrases.as_ref().or(ctx.config.render.phrases.as_ref()) {
        Some(p) => PhraseTable::load(p)?,
        None => PhraseTable::default(),
    };
    Ok((opts, phrases))
}

fn render(ctx: &Ctx, input: &Path, flags: &RenderFlags) -> Result<ExitCode> {
    let (opts, phrases) = render_setup(ctx, flags)?;
    let instances = read_instances(input)?;
    let (rendered, failures) = render_corpus(&instances, ctx.seed, &opts, &phrases);
    let out = ctx.out_or("rendered.jsonl");
    write_jsonl(&rendered, &out)?;
    info!(rendered = rendered.len(), path = %out.display(), "rendered");
    for f in &failures {
        eprintln!("instance {} ({}): {}", f.index, f.provenance, f.error);
    }
    Ok(if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn export(ctx: &Ctx, a: &ExportArgs) -> Result<ExitCode> {
    let mut plan: SamplingPlan = match &a.plan {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading plan {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing plan {}", p.display()))?
        }
        None => ctx.config.sampling.clone(),
    };
    plan.seed = ctx.seed;
    plan.validate()?;
    let (opts, phrases) = render_setup(ctx, &a.flags)?;
    let instances = read_instances(&a.input)?;
    let sampled = sample(&instances, &plan);
    info!(sampled = sampled.len(), "sampled");
    let (rendered, failures) = render_corpus(&sampled, ctx.seed, &opts, &phrases);
    if let Some(f) = failures.first() {
        bail!("{} instance(s) failed to render; first: {} ({})", failures.len(), f.provenance, f.error);
    }
    let dir = ctx.out_or("export");
    let manifest = export_corpus(&rendered, &sampled, &dir, &plan)?;
    info!(dir = %dir.display(), "exported");
    print_json(&manifest)?;
    Ok(ExitCode::SUCCESS)
}

/// Model outputs paired with constraint specs by `id` when every output
/// line has one, otherwise by line order.
fn pair_outputs(specs: Vec<ConstraintSpec>, path: &Path) -> Result<Vec<(ConstraintSpec, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading outputs {}", path.display()))?;
    let mut outputs: Vec<(Option<String>, String)> = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: Value = serde_json::from_str(line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        let entry = match v {
            Value::String(s) => (None, s),
            Value::Object(o) => {
                let output = o
                    .get("output")
                    .and_then(Value::as_str)
                    .with_context(|| format!("{}:{}: missing string field \"output\"", path.display(), i + 1))?;
                (o.get("id").and_then(Value::as_str).map(str::to_string), output.to_string())
            }
            _ => bail!("{}:{}: expected a string or an object", path.display(), i + 1),
        };
        outputs.push(entry);
    }
    if !outputs.is_empty() && outputs.iter().all(|(id, _)| id.is_some()) {
        let by_id: HashMap<String, String> = outputs.into_iter().map(|(id, o)| (id.unwrap_or_default(), o)).collect();
        return specs
            .into_iter()
            .map(|s| {
                let o = by_id.get(&s.id).with_context(|| format!("no output for id {}", s.id))?;
                Ok((s, o.clone()))
            })
            .collect();
    }
    if outputs.len() != specs.len() {
        bail!("{} constraint lines but {} outputs", specs.len(), outputs.len());
    }
    Ok(specs.into_iter().zip(outputs.into_iter().map(|(_, o)| o)).collect())
}

fn eval(ctx: &Ctx, a: &EvalArgs) -> Result<ExitCode> {
    let specs: Vec<ConstraintSpec> = read_jsonl(&a.constraints)?;
    let pairs = pair_outputs(specs, &a.outputs)?;
    let config = EvalConfig {
        buckets: ctx.config.length,
        rouge_beta: a.beta,
    };
    let report = score_corpus(&pairs, &config);
    if let Some(p) = &a.report {
        fs::write(p, serde_json::to_string_pretty(&report)? + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    let summary = serde_json::json!({
        "examples": report.examples,
        "per_constraint": report.per_constraint,
        "compositional_accuracy": report.compositional_accuracy,
        "bleu2": report.bleu2,
        "rouge_l": report.rouge_l,
    });
    print_json(&summary)?;
    Ok(ExitCode::SUCCESS)
}

fn stats_cmd(ctx: &Ctx, input: &Path) -> Result<ExitCode> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let first: Option<Value> = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .transpose()
        .with_context(|| format!("{}: first line is not JSON", input.display()))?;
    let is_records = first.as_ref().is_some_and(|v| v.get("input").is_some());
    let s: CorpusStats = if is_records {
        CorpusStats::from_records(&read_jsonl::<ExportRecord>(input)?)
    } else {
        stats(&read_instances(input)?, &ctx.config.sampling.split)
    };
    match &ctx.out {
        Some(p) => fs::write(p, serde_json::to_string_pretty(&s)? + "\n")?,
        None => print_json(&s)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(input: &Path) -> Result<ExitCode> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let mut lines: Vec<(usize, Value)> = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        match serde_json::from_str(line) {
            Ok(v) => lines.push((i + 1, v)),
            Err(e) => bail!("{}:{}: invalid JSON: {e}", input.display(), i + 1),
        }
    }
    let mut violations = 0usize;
    if lines.first().is_some_and(|(_, v)| v.get("turns").is_some()) {
        match parse_corpus(&text, &AdapterSpec::canonical(), &input.display().to_string()) {
            Ok(_) => {}
            Err(e @ IngestError::Schema { .. }) => {
                println!("{}: {e}", input.display());
                violations += 1;
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        for (line, v) in lines {
            let inst: TaskInstance =
                serde_json::from_value(v).with_context(|| format!("{}:{line}: not a task instance", input.display()))?;
            for violation in validate_instance(&inst) {
                println!("{}:{line} {}: {violation}", input.display(), inst.provenance.key());
                violations += 1;
            }
        }
    }
    println!("{violations} violations");
    if violations > 0 {
        warn!(violations, "validation failed");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli, mut ctx: Ctx) -> Result<ExitCode> {
    if cli.config.is_none() {
        bail!("run needs --config");
    }
    ctx.config.seed = ctx.seed;
    if let Some(out) = ctx.out.take() {
        ctx.config.out = out;
    }
    let summary = run_pipeline(&ctx.config)?;
    info!(dialogs = summary.dialogs, "ingest");
    info!(atomic = summary.atomic, "derive");
    info!(composites = summary.composites, "compose");
    info!(sampled = summary.sampled, "sample");
    info!(rendered = summary.rendered, "render");
    for (split, n) in &summary.split_counts {
        info!(split = %split, examples = n, "export");
    }
    print_json(&summary)?;
    Ok(ExitCode::SUCCESS)
}
