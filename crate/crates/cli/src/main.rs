//! `cesar`: build, compose, render, export and score dialog instruction tasks.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(name = "cesar", version, about = "Dialog instruction-task synthesis")]
struct Cli {
    /// Global seed; overrides the config file's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory (meaning depends on the subcommand).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert dataset files (or a synthetic corpus) to the canonical dialog format.
    Ingest(IngestArgs),
    /// List registered atomic tasks, or derive atomic instances from a corpus.
    Tasks(TasksArgs),
    /// Compose atomic instances into higher-dimensional tasks.
    Compose(ComposeArgs),
    /// Render instances into input/output text pairs.
    Render(RenderArgs),
    /// Sample, render and write train/dev/test splits.
    Export(ExportArgs),
    /// Score model outputs against exported constraints.
    Eval(EvalArgs),
    /// Per-task counts for an instance or exported-record file.
    Stats(StatsArgs),
    /// Check every instance (or dialog) in a file.
    Validate(ValidateArgs),
    /// Run the whole pipeline from a config file.
    Run,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Input files in the adapter's format.
    #[arg(long = "input", short)]
    inputs: Vec<PathBuf>,
    /// Adapter name: canonical, dailydialog or personachat.
    #[arg(long, default_value = "canonical")]
    adapter: String,
    /// Dataset name recorded on every dialog.
    #[arg(long)]
    dataset: Option<String>,
    /// Append this many synthetic dialogs.
    #[arg(long)]
    synthetic: Option<usize>,
}

#[derive(Debug, Args)]
struct TasksArgs {
    /// Canonical corpus to derive from; without it the registry is listed.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Comma-separated task names to derive (default: all).
    #[arg(long, value_delimiter = ',')]
    enable: Vec<String>,
    /// Candidate-list size for discriminative variants (0 = off).
    #[arg(long, default_value_t = 0)]
    candidates: usize,
    /// Print the registry as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ComposeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Rule table (CSV); the bundled table by default.
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    max_dim: usize,
    /// Write the input instances before the composites.
    #[arg(long)]
    keep_atomic: bool,
}

#[derive(Debug, Args, Clone)]
struct RenderFlags {
    /// Chain-of-thought mode: none or random-k.
    #[arg(long, default_value = "none")]
    cot: String,
    /// Phrase unknown item kinds generically instead of failing.
    #[arg(long)]
    generic_fallback: bool,
    /// Keep item order inside component blocks.
    #[arg(long)]
    no_block_shuffle: bool,
    /// Phrase table (TOML); the bundled table by default.
    #[arg(long)]
    phrases: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    flags: RenderFlags,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Sampling plan (TOML): atomic_quota, composite_quota, [split].
    #[arg(long)]
    plan: Option<PathBuf>,
    #[command(flatten)]
    flags: RenderFlags,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Constraint lines written by `export`.
    #[arg(long)]
    constraints: PathBuf,
    /// Model outputs: JSON strings or objects with "output" (and optional "id").
    #[arg(long)]
    outputs: PathBuf,
    /// Where to write the full JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Rouge-L F-measure beta.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_target(false)
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level)))
        .init();

    match commands::dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
