//! Corpus loading: the canonical line-delimited dialog format, per-dataset
//! adapters and a synthetic corpus generator.

mod adapters;
mod synth;

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{ComponentKind, Dialog, DialogItem, Split, Turn};
use crate::seed::sha256_hex;

pub use adapters::{family_component, AdapterSpec, ItemFamily};
pub use synth::{synth_corpus, SynthConfig, SynthFamily};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: missing or invalid field {field}")]
    Schema { line: usize, field: String },
    #[error("corpus {0} contains no records")]
    EmptyCorpus(String),
    #[error("unknown adapter {0:?}")]
    UnknownAdapter(String),
    #[error("adapter {adapter}: item family {kind:?} declared as {declared} but belongs to {expected}")]
    AdapterMapping {
        adapter: String,
        kind: String,
        declared: ComponentKind,
        expected: ComponentKind,
    },
}

impl IngestError {
    /// The offending field path for schema errors.
    pub fn field(&self) -> Option<&str> {
        match self {
            IngestError::Schema { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub dataset: String,
    pub count: usize,
    /// Shared split of every record, `None` when records span several splits.
    pub split: Option<Split>,
    pub checksum: String,
}

/// Loads a line-delimited corpus file through `adapter`.
pub fn load_corpus(
    path: impl AsRef<Path>,
    adapter: &AdapterSpec,
) -> Result<(Vec<Dialog>, CorpusManifest), IngestError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| IngestError::Parse {
        line: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    let dialogs = parse_corpus(&text, adapter, &path.display().to_string())?;
    let manifest = manifest_for(&dialogs, &bytes);
    Ok((dialogs, manifest))
}

/// Parses corpus text; `source` names the input in error messages.
pub fn parse_corpus(
    text: &str,
    adapter: &AdapterSpec,
    source: &str,
) -> Result<Vec<Dialog>, IngestError> {
    adapter.check()?;
    let mut dialogs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(raw).map_err(|e| IngestError::Parse {
            line,
            message: e.to_string(),
        })?;
        let dialog = adapter.convert(&value, line)?;
        if let Some(problem) = dialog.problems().into_iter().next() {
            return Err(IngestError::Schema {
                line,
                field: problem,
            });
        }
        if !seen.insert(dialog.dialog_id.clone()) {
            return Err(IngestError::Schema {
                line,
                field: format!("dialog_id (duplicate {:?})", dialog.dialog_id),
            });
        }
        dialogs.push(dialog);
    }
    if dialogs.is_empty() {
        return Err(IngestError::EmptyCorpus(source.to_string()));
    }
    Ok(dialogs)
}

pub fn manifest_for(dialogs: &[Dialog], bytes: &[u8]) -> CorpusManifest {
    let mut datasets: Vec<&str> = dialogs.iter().map(|d| d.dataset.as_str()).collect();
    datasets.sort();
    datasets.dedup();
    let first = dialogs.first().and_then(|d| d.split);
    let split = if dialogs.iter().all(|d| d.split == first) {
        first
    } else {
        None
    };
    CorpusManifest {
        dataset: datasets.join(","),
        count: dialogs.len(),
        split,
        checksum: sha256_hex(bytes),
    }
}

#[derive(Serialize)]
struct CanonicalItemOut<'a> {
    component: ComponentKind,
    kind: &'a str,
    value: &'a str,
}

#[derive(Serialize)]
struct CanonicalTurnOut<'a> {
    speaker: &'a str,
    text: &'a str,
    items: Vec<CanonicalItemOut<'a>>,
}

#[derive(Serialize)]
struct CanonicalRecordOut<'a> {
    dialog_id: &'a str,
    dataset: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<Split>,
    turns: Vec<CanonicalTurnOut<'a>>,
}

/// One canonical-schema line for `dialog`, without trailing newline.
pub fn to_canonical_line(dialog: &Dialog) -> String {
    let rec = CanonicalRecordOut {
        dialog_id: &dialog.dialog_id,
        dataset: &dialog.dataset,
        split: dialog.split,
        turns: dialog
            .turns
            .iter()
            .map(|t| CanonicalTurnOut {
                speaker: &t.speaker,
                text: &t.text,
                items: t
                    .items
                    .iter()
                    .map(|i| CanonicalItemOut {
                        component: i.component,
                        kind: &i.kind,
                        value: &i.value,
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string(&rec).expect("canonical record serializes")
}

/// Writes dialogs in the canonical schema and returns the file's manifest.
pub fn write_canonical(
    dialogs: &[Dialog],
    path: impl AsRef<Path>,
) -> Result<CorpusManifest, IngestError> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for d in dialogs {
        buf.extend_from_slice(to_canonical_line(d).as_bytes());
        buf.push(b'\n');
    }
    let io = |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(&buf).map_err(io)?;
    Ok(manifest_for(dialogs, &buf))
}

// Field extraction helpers producing precise schema paths.

pub(crate) fn req_str(v: &Value, key: &str, path: &str, line: usize) -> Result<String, IngestError> {
    match v.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        _ => Err(IngestError::Schema {
            line,
            field: join_path(path, key),
        }),
    }
}

pub(crate) fn opt_str(v: &Value, key: &str, path: &str, line: usize) -> Result<Option<String>, IngestError> {
    match v.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(IngestError::Schema {
            line,
            field: join_path(path, key),
        }),
    }
}

pub(crate) fn req_array<'a>(
    v: &'a Value,
    key: &str,
    path: &str,
    line: usize,
) -> Result<&'a Vec<Value>, IngestError> {
    match v.get(key) {
        Some(Value::Array(a)) => Ok(a),
        _ => Err(IngestError::Schema {
            line,
            field: join_path(path, key),
        }),
    }
}

pub(crate) fn opt_split(v: &Value, line: usize) -> Result<Option<Split>, IngestError> {
    match opt_str(v, "split", "", line)? {
        None => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|_| IngestError::Schema {
            line,
            field: "split".to_string(),
        }),
    }
}

pub(crate) fn join_path(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Parses one canonical-schema record.
pub(crate) fn parse_canonical(v: &Value, line: usize) -> Result<Dialog, IngestError> {
    let dialog_id = req_str(v, "dialog_id", "", line)?;
    let dataset = req_str(v, "dataset", "", line)?;
    let split = opt_split(v, line)?;
    let raw_turns = req_array(v, "turns", "", line)?;
    let mut turns = Vec::with_capacity(raw_turns.len());
    for (ti, rt) in raw_turns.iter().enumerate() {
        let tpath = format!("turns[{ti}]");
        let speaker = req_str(rt, "speaker", &tpath, line)?;
        let text = req_str(rt, "text", &tpath, line)?;
        let mut items = Vec::new();
        if let Some(raw_items) = rt.get("items") {
            let raw_items = raw_items.as_array().ok_or_else(|| IngestError::Schema {
                line,
                field: format!("{tpath}.items"),
            })?;
            for (ii, ri) in raw_items.iter().enumerate() {
                let ipath = format!("{tpath}.items[{ii}]");
                let comp = req_str(ri, "component", &ipath, line)?;
                let component = single_letter(&comp)
                    .filter(|c| c.is_grounding())
                    .ok_or_else(|| IngestError::Schema {
                        line,
                        field: format!("{ipath}.component"),
                    })?;
                let kind = req_str(ri, "kind", &ipath, line)?;
                let value = req_str(ri, "value", &ipath, line)?;
                items.push(DialogItem::new(component, kind, value, ti));
            }
        }
        turns.push(Turn { speaker, text, items });
    }
    Ok(Dialog {
        dialog_id,
        dataset,
        split,
        turns,
    })
}

fn single_letter(s: &str) -> Option<ComponentKind> {
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => ComponentKind::from_letter(c),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> AdapterSpec {
        AdapterSpec::canonical()
    }

    const THREE: &str = r#"{"dialog_id":"a","dataset":"demo","split":"train","turns":[{"speaker":"Speaker 1","text":"Hi there .","items":[]}]}
{"dialog_id":"b","dataset":"demo","split":"train","turns":[{"speaker":"Speaker 1","text":"Hello !","items":[{"component":"S","kind":"emotion","value":"happy"}]},{"speaker":"Speaker 2","text":"Hey .","items":[]}]}
{"dialog_id":"c","dataset":"demo","split":"train","turns":[{"speaker":"Speaker 1","text":"Bye .","items":[]}]}
"#;

    #[test]
    fn three_lines_three_dialogs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        fs::write(&p, THREE).unwrap();
        let (dialogs, manifest) = load_corpus(&p, &canonical()).unwrap();
        assert_eq!(dialogs.len(), 3);
        assert_eq!(manifest.count, 3);
        assert_eq!(manifest.split, Some(Split::Train));
        assert_eq!(manifest.dataset, "demo");
        assert_eq!(manifest.checksum, sha256_hex(THREE.as_bytes()));
        assert_eq!(dialogs[1].turns[0].items[0].turn_index, 0);
    }

    #[test]
    fn missing_turn_text_names_the_field() {
        let rec = r#"{"dialog_id":"a","dataset":"demo","turns":[{"speaker":"A","text":"x"},{"speaker":"B"}]}"#;
        let err = parse_corpus(rec, &canonical(), "mem").unwrap_err();
        assert_eq!(err.field(), Some("turns[1].text"));
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn parse_error_reports_line() {
        let text = format!("{}\n{{not json\n", THREE.lines().next().unwrap());
        match parse_corpus(&text, &canonical(), "mem").unwrap_err() {
            IngestError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            parse_corpus("\n\n", &canonical(), "mem"),
            Err(IngestError::EmptyCorpus(_))
        ));
    }

    #[test]
    fn duplicate_dialog_ids_are_rejected() {
        let line = THREE.lines().next().unwrap();
        let text = format!("{line}\n{line}\n");
        assert!(matches!(
            parse_corpus(&text, &canonical(), "mem"),
            Err(IngestError::Schema { line: 2, .. })
        ));
    }

    #[test]
    fn context_or_response_items_are_schema_errors() {
        let rec = r#"{"dialog_id":"a","dataset":"d","turns":[{"speaker":"A","text":"x","items":[{"component":"R","kind":"k","value":"v"}]}]}"#;
        let err = parse_corpus(rec, &canonical(), "mem").unwrap_err();
        assert_eq!(err.field(), Some("turns[0].items[0].component"));
    }

    #[test]
    fn unknown_kinds_are_preserved() {
        let rec = r#"{"dialog_id":"a","dataset":"d","turns":[{"speaker":"A","text":"x","items":[{"component":"E","kind":"weather","value":"rainy"}]}]}"#;
        let d = parse_corpus(rec, &canonical(), "mem").unwrap();
        assert_eq!(d[0].turns[0].items[0].kind, "weather");
        assert_eq!(d[0].turns[0].items[0].component, ComponentKind::Evidence);
    }

    #[test]
    fn canonical_roundtrip_is_identity() {
        let dialogs = parse_corpus(THREE, &canonical(), "mem").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.jsonl");
        let m = write_canonical(&dialogs, &p).unwrap();
        let (again, m2) = load_corpus(&p, &canonical()).unwrap();
        assert_eq!(again, dialogs);
        assert_eq!(m, m2);
    }
}
