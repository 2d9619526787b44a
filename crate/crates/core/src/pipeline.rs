//! End-to-end corpus build: ingest, derive, compose, sample, render, export.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::composer::{compose_corpus, RuleSet};
use crate::export::{export_corpus, sample, write_jsonl, ExportManifest, SamplingPlan};
use crate::ingest::{load_corpus, synth_corpus, write_canonical, AdapterSpec, SynthConfig};
use crate::model::{Dialog, Split, TaskInstance};
use crate::promptgen::{render_corpus, PhraseTable, RenderOptions};
use crate::seed::sha256_hex;
use crate::taskreg::{LengthBuckets, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Ingest,
    Derive,
    Compose,
    Render,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Derive => "derive",
            Stage::Compose => "compose",
            Stage::Render => "render",
            Stage::Export => "export",
        };
        f.write_str(s)
    }
}

/// Whether a failure came from bad input data or from the environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Invalid,
    Io,
}

#[derive(Debug, thiserror::Error)]
#[error("[{stage}] {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: FailureKind,
    pub message: String,
}

impl PipelineError {
    fn new(stage: Stage, kind: FailureKind, message: impl fmt::Display) -> Self {
        PipelineError {
            stage,
            kind,
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub path: PathBuf,
    #[serde(default = "default_adapter")]
    pub adapter: String,
    /// Overrides the adapter's dataset name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
}

fn default_adapter() -> String {
    "canonical".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSource {
    pub dialogs: usize,
    #[serde(flatten)]
    pub config: SynthConfig,
}

impl Default for SynthSource {
    fn default() -> Self {
        SynthSource {
            dialogs: 200,
            config: SynthConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub files: Vec<CorpusFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SynthSource>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    /// Task names to derive; empty enables every task.
    pub enabled: Vec<String>,
    pub first_target_turn: usize,
    /// Candidate-list size for discriminative variants; 0 disables them.
    pub candidates: usize,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            enabled: Vec::new(),
            first_target_turn: 1,
            candidates: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComposeConfig {
    /// Rule table; the bundled table when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rules: Option<PathBuf>,
    pub max_dim: usize,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        ComposeConfig {
            rules: None,
            max_dim: 2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    #[serde(flatten)]
    pub options: RenderOptions,
    /// Phrase table; the bundled table when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phrases: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub corpus: CorpusConfig,
    pub tasks: TaskConfig,
    pub length: LengthBuckets,
    pub compose: ComposeConfig,
    pub sampling: SamplingPlan,
    pub render: RenderConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            out: PathBuf::from("cesar-out"),
            corpus: CorpusConfig::default(),
            tasks: TaskConfig::default(),
            length: LengthBuckets::default(),
            compose: ComposeConfig::default(),
            sampling: SamplingPlan::default(),
            render: RenderConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::new(Stage::Config, FailureKind::Invalid, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::new(Stage::Config, FailureKind::Io, format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
            .map_err(|e| PipelineError::new(Stage::Config, FailureKind::Invalid, format!("{}: {}", path.display(), e.message)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("pipeline config serializes")
    }

    pub fn registry(&self) -> Registry {
        let mut reg = Registry {
            buckets: self.length,
            first_target_turn: self.tasks.first_target_turn,
            candidates: self.tasks.candidates,
            ..Registry::default()
        };
        if !self.tasks.enabled.is_empty() {
            reg = reg.with_tasks(self.tasks.enabled.iter().cloned());
        }
        reg
    }

    /// Plan with the pipeline seed applied.
    pub fn plan(&self) -> SamplingPlan {
        SamplingPlan {
            seed: self.seed,
            ..self.sampling.clone()
        }
    }

    pub fn rules(&self) -> Result<RuleSet, PipelineError> {
        match &self.compose.rules {
            Some(p) => RuleSet::load(p).map_err(|e| PipelineError::new(Stage::Config, FailureKind::Io, e)),
            None => Ok(RuleSet::default()),
        }
    }

    pub fn phrases(&self) -> Result<PhraseTable, PipelineError> {
        match &self.render.phrases {
            Some(p) => PhraseTable::load(p).map_err(|e| PipelineError::new(Stage::Config, FailureKind::Io, e)),
            None => Ok(PhraseTable::default()),
        }
    }

    fn check(&self) -> Result<(), PipelineError> {
        if self.compose.max_dim < 2 {
            return Err(PipelineError::new(Stage::Config, FailureKind::Invalid, "compose.max_dim must be at least 2"));
        }
        if self.length.short_max >= self.length.medium_max {
            return Err(PipelineError::new(
                Stage::Config,
                FailureKind::Invalid,
                "length.short_max must be below length.medium_max",
            ));
        }
        if self.corpus.files.is_empty() && self.corpus.synthetic.is_none() {
            return Err(PipelineError::new(
                Stage::Config,
                FailureKind::Invalid,
                "no corpus: set corpus.files or corpus.synthetic",
            ));
        }
        self.plan()
            .validate()
            .map_err(|e| PipelineError::new(Stage::Config, FailureKind::Invalid, e))
    }
}

/// Loads every configured corpus source, in config order.
pub fn load_dialogs(config: &PipelineConfig) -> Result<Vec<Dialog>, PipelineError> {
    let mut dialogs = Vec::new();
    for file in &config.corpus.files {
        let mut adapter =
            AdapterSpec::by_name(&file.adapter).map_err(|e| PipelineError::new(Stage::Ingest, FailureKind::Invalid, e))?;
        if let Some(ds) = &file.dataset {
            adapter.dataset = ds.clone();
        }
        let (mut ds, _) = load_corpus(&file.path, &adapter).map_err(|e| {
            let kind = match e {
                crate::ingest::IngestError::Io { .. } => FailureKind::Io,
                _ => FailureKind::Invalid,
            };
            PipelineError::new(Stage::Ingest, kind, e)
        })?;
        dialogs.append(&mut ds);
    }
    if let Some(s) = &config.corpus.synthetic {
        dialogs.extend(synth_corpus(config.seed, s.dialogs, &s.config));
    }
    Ok(dialogs)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub dialogs: usize,
    pub atomic: usize,
    pub derive_skipped: BTreeMap<String, usize>,
    pub composites: usize,
    pub compose_rejections: BTreeMap<String, usize>,
    pub sampled: usize,
    pub rendered: usize,
    pub render_failures: usize,
    pub split_counts: BTreeMap<String, usize>,
    /// SHA-256 of every written artifact, keyed by file name.
    pub checksums: BTreeMap<String, String>,
}

/// Runs every stage and writes `corpus.jsonl`, `instances.jsonl`, the split
/// files, `stats.json` and `manifest.json` into `config.out`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineSummary, PipelineError> {
    config.check()?;
    let rules = config.rules()?;
    let phrases = config.phrases()?;
    let out = &config.out;
    let io = |stage: Stage| move |e: std::io::Error| PipelineError::new(stage, FailureKind::Io, e);
    fs::create_dir_all(out).map_err(io(Stage::Export))?;

    let dialogs = load_dialogs(config)?;
    let corpus = write_canonical(&dialogs, out.join("corpus.jsonl"))
        .map_err(|e| PipelineError::new(Stage::Ingest, FailureKind::Io, e))?;
    let mut summary = PipelineSummary {
        dialogs: dialogs.len(),
        ..Default::default()
    };

    let derived = config.registry().derive_corpus(&dialogs, config.seed);
    summary.atomic = derived.instances.len();
    summary.derive_skipped = derived.skipped;

    let composed = compose_corpus(&derived.instances, &rules, config.compose.max_dim, config.seed);
    summary.composites = composed.composites.len();
    summary.compose_rejections = composed.rejections;

    let mut all: Vec<TaskInstance> = derived.instances;
    all.extend(composed.composites);
    let plan = config.plan();
    let sampled = sample(&all, &plan);
    summary.sampled = sampled.len();
    let instances_bytes = write_jsonl(&sampled, out.join("instances.jsonl"))
        .map_err(|e| PipelineError::new(Stage::Export, FailureKind::Io, e))?;

    let (rendered, failures) = render_corpus(&sampled, config.seed, &config.render.options, &phrases);
    summary.rendered = rendered.len();
    summary.render_failures = failures.len();
    if let Some(f) = failures.first() {
        return Err(PipelineError::new(
            Stage::Render,
            FailureKind::Invalid,
            format!("{} instance(s) failed to render; first: {} ({})", failures.len(), f.provenance, f.error),
        ));
    }

    let mut manifest: ExportManifest = export_corpus(&rendered, &sampled, out, &plan)
        .map_err(|e| PipelineError::new(Stage::Export, FailureKind::Io, e))?;
    manifest.files.insert("corpus.jsonl".into(), corpus);
    let mut inst_manifest = crate::ingest::CorpusManifest {
        dataset: String::new(),
        count: sampled.len(),
        split: None,
        checksum: sha256_hex(&instances_bytes),
    };
    let mut datasets: Vec<&str> = sampled.iter().map(|i| i.provenance.dataset.as_str()).collect();
    datasets.sort();
    datasets.dedup();
    inst_manifest.dataset = datasets.join(",");
    manifest.files.insert("instances.jsonl".into(), inst_manifest);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(out.join("manifest.json"), text).map_err(io(Stage::Export))?;

    for (name, m) in &manifest.files {
        summary.checksums.insert(name.clone(), m.checksum.clone());
    }
    for split in Split::ALL {
        let count = manifest.files[&format!("{}.jsonl", split.as_str())].count;
        summary.split_counts.insert(split.as_str().to_string(), count);
    }
    Ok(summary)
}
