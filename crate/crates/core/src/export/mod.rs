//! Sampling quotas, split assignment, JSONL emission and corpus statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evalkit::extract_constraints;
use crate::ingest::CorpusManifest;
use crate::model::{Provenance, Split, TaskInstance};
use crate::promptgen::RenderedExample;
use crate::seed::{derive_seed, rng, sha256_hex, stable_hash};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid sampling plan: {0}")]
    Plan(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Fallback train/dev shares for dialogs without a dataset split; test
/// takes the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train: 0.9, dev: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingPlan {
    /// Instances kept per atomic task, across datasets.
    pub atomic_quota: usize,
    /// Instances kept per composite task and dataset.
    pub composite_quota: usize,
    pub seed: u64,
    pub split: SplitRatios,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            atomic_quota: 5000,
            composite_quota: 1000,
            seed: 0,
            split: SplitRatios::default(),
        }
    }
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<(), ExportError> {
        if self.atomic_quota == 0 || self.composite_quota == 0 {
            return Err(ExportError::Plan("quotas must be positive".into()));
        }
        let SplitRatios { train, dev } = self.split;
        if !(0.0..=1.0).contains(&train) || !(0.0..=1.0).contains(&dev) || train + dev > 1.0 {
            return Err(ExportError::Plan(format!(
                "split ratios train={train} dev={dev} must be in [0, 1] and sum to at most 1"
            )));
        }
        Ok(())
    }
}

/// The dataset's own split when known, otherwise a stable hash partition of
/// the dialog, so every instance of a dialog lands in the same split.
pub fn resolve_split(provenance: &Provenance, ratios: &SplitRatios) -> Split {
    if let Some(s) = provenance.split {
        return s;
    }
    let h = stable_hash(&[provenance.dataset.as_str(), provenance.dialog_id.as_str()]);
    let u = (h % 1_000_000) as f64 / 1_000_000.0;
    if u < ratios.train {
        Split::Train
    } else if u < ratios.train + ratios.dev {
        Split::Dev
    } else {
        Split::Test
    }
}

fn sort_key(inst: &TaskInstance) -> (String, String) {
    (inst.provenance.key(), serde_json::to_string(inst).unwrap_or_default())
}

/// Samples each task group without replacement up to its quota. Atomic
/// tasks are grouped by name, composites by name and dataset. The result is
/// sorted by provenance and does not depend on input order.
pub fn sample(instances: &[TaskInstance], plan: &SamplingPlan) -> Vec<TaskInstance> {
    let mut groups: BTreeMap<(String, Option<String>), Vec<&TaskInstance>> = BTreeMap::new();
    for inst in instances {
        let dataset = inst.is_composite().then(|| inst.provenance.dataset.clone());
        groups.entry((inst.task_name.clone(), dataset)).or_default().push(inst);
    }
    let mut out: Vec<TaskInstance> = Vec::new();
    for ((task, dataset), mut group) in groups {
        let quota = if dataset.is_some() {
            plan.composite_quota
        } else {
            plan.atomic_quota
        };
        if group.len() <= quota {
            out.extend(group.into_iter().cloned());
            continue;
        }
        group.sort_by_cached_key(|i| sort_key(i));
        let key = format!("{task}\u{1f}{}", dataset.unwrap_or_default());
        let mut r = rng(derive_seed(plan.seed, "sample", &key));
        out.extend(
            sample_indices(&mut r, group.len(), quota)
                .into_iter()
                .map(|i| group[i].clone()),
        );
    }
    out.sort_by_cached_key(sort_key);
    out
}

/// One exported line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub input: String,
    pub output: String,
    pub task: String,
    pub signature: String,
    pub dataset: String,
    pub split: Split,
    pub provenance: Provenance,
}

impl ExportRecord {
    pub fn from_rendered(ex: &RenderedExample, ratios: &SplitRatios) -> Self {
        ExportRecord {
            input: ex.input_text.clone(),
            output: ex.output_text.clone(),
            task: ex.task_name.clone(),
            signature: ex.signature.clone(),
            dataset: ex.provenance.dataset.clone(),
            split: resolve_split(&ex.provenance, ratios),
            provenance: ex.provenance.clone(),
        }
    }
}

/// Serializes `items` one JSON object per line and writes them to `path`.
pub fn write_jsonl<T: Serialize>(items: &[T], path: impl AsRef<Path>) -> Result<Vec<u8>, ExportError> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).map_err(|source| ExportError::Json {
            path: path.display().to_string(),
            line: 0,
            source,
        })?;
        buf.push(b'\n');
    }
    fs::write(path, &buf).map_err(io_err(path))?;
    Ok(buf)
}

/// Reads a JSONL file, skipping blank lines; errors carry 1-based line numbers.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, ExportError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| ExportError::Json {
                path: path.display().to_string(),
                line: i + 1,
                source,
            })
        })
        .collect()
}

/// Writes records as JSONL and returns the file manifest.
pub fn export_jsonl(records: &[ExportRecord], path: impl AsRef<Path>) -> Result<CorpusManifest, ExportError> {
    let bytes = write_jsonl(records, path)?;
    let datasets: BTreeSet<&str> = records.iter().map(|r| r.dataset.as_str()).collect();
    let first = records.first().map(|r| r.split);
    Ok(CorpusManifest {
        dataset: datasets.into_iter().collect::<Vec<_>>().join(","),
        count: records.len(),
        split: first.filter(|s| records.iter().all(|r| r.split == *s)),
        checksum: sha256_hex(&bytes),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StatsRow {
    pub task: String,
    pub signature: String,
    pub dataset: String,
    pub split: Split,
    pub count: usize,
}

/// Instance counts per (task, signature, dataset, split).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    pub atomic_instances: usize,
    pub composite_instances: usize,
    pub atomic_tasks: usize,
    pub composite_tasks: usize,
    pub distinct_signatures: usize,
    pub composite_signatures: BTreeSet<String>,
    pub rows: Vec<StatsRow>,
}

type StatsKey = (String, String, String, Split);

fn is_composite_name(task: &str) -> bool {
    task.contains(" + ")
}

impl CorpusStats {
    fn from_counts(counts: BTreeMap<StatsKey, usize>) -> Self {
        let mut s = CorpusStats::default();
        let mut atomic = BTreeSet::new();
        let mut composite = BTreeSet::new();
        let mut sigs = BTreeSet::new();
        for ((task, signature, dataset, split), count) in counts {
            s.total += count;
            if is_composite_name(&task) {
                s.composite_instances += count;
                composite.insert(task.clone());
                s.composite_signatures.insert(signature.clone());
            } else {
                s.atomic_instances += count;
                atomic.insert(task.clone());
            }
            sigs.insert(signature.clone());
            s.rows.push(StatsRow {
                task,
                signature,
                dataset,
                split,
                count,
            });
        }
        s.atomic_tasks = atomic.len();
        s.composite_tasks = composite.len();
        s.distinct_signatures = sigs.len();
        s
    }

    fn counts(&self) -> BTreeMap<StatsKey, usize> {
        self.rows
            .iter()
            .map(|r| ((r.task.clone(), r.signature.clone(), r.dataset.clone(), r.split), r.count))
            .collect()
    }

    pub fn from_records(records: &[ExportRecord]) -> Self {
        let mut counts: BTreeMap<StatsKey, usize> = BTreeMap::new();
        for r in records {
            *counts
                .entry((r.task.clone(), r.signature.clone(), r.dataset.clone(), r.split))
                .or_default() += 1;
        }
        Self::from_counts(counts)
    }

    /// Combines two partial aggregates.
    pub fn merge(&self, other: &CorpusStats) -> CorpusStats {
        let mut counts = self.counts();
        for (k, v) in other.counts() {
            *counts.entry(k).or_default() += v;
        }
        Self::from_counts(counts)
    }
}

/// Statistics over instances; composites count under their joined name.
pub fn stats(instances: &[TaskInstance], ratios: &SplitRatios) -> CorpusStats {
    let mut counts: BTreeMap<StatsKey, usize> = BTreeMap::new();
    for inst in instances {
        let key = (
            inst.task_name.clone(),
            inst.display_signature(),
            inst.provenance.dataset.clone(),
            resolve_split(&inst.provenance, ratios),
        );
        *counts.entry(key).or_default() += 1;
    }
    CorpusStats::from_counts(counts)
}

/// Manifest of an export directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub seed: u64,
    pub files: BTreeMap<String, CorpusManifest>,
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), ExportError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| ExportError::Json {
        path: path.display().to_string(),
        line: 0,
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Writes `{split}.jsonl`, `{split}.constraints.jsonl`, `stats.json` and
/// `manifest.json` into `dir`. Constraint lines are looked up from the
/// instance sharing each example's provenance.
pub fn export_corpus(
    rendered: &[RenderedExample],
    instances: &[TaskInstance],
    dir: impl AsRef<Path>,
    plan: &SamplingPlan,
) -> Result<ExportManifest, ExportError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let by_key: HashMap<String, &TaskInstance> = instances.iter().map(|i| (i.provenance.key(), i)).collect();
    let records: Vec<ExportRecord> = rendered
        .iter()
        .map(|ex| ExportRecord::from_rendered(ex, &plan.split))
        .collect();

    let mut files = BTreeMap::new();
    for split in Split::ALL {
        let part: Vec<ExportRecord> = records.iter().filter(|r| r.split == split).cloned().collect();
        let name = format!("{}.jsonl", split.as_str());
        files.insert(name.clone(), export_jsonl(&part, dir.join(&name))?);

        let specs: Vec<_> = part
            .iter()
            .filter_map(|r| by_key.get(&r.provenance.key()))
            .map(|inst| extract_constraints(inst))
            .collect();
        let cname = format!("{}.constraints.jsonl", split.as_str());
        let bytes = write_jsonl(&specs, dir.join(&cname))?;
        files.insert(
            cname,
            CorpusManifest {
                dataset: files[&name].dataset.clone(),
                count: specs.len(),
                split: Some(split),
                checksum: sha256_hex(&bytes),
            },
        );
    }
    write_json(&CorpusStats::from_records(&records), &dir.join("stats.json"))?;
    let manifest = ExportManifest { seed: plan.seed, files };
    write_json(&manifest, &dir.join("manifest.json"))?;
    Ok(manifest)
}
