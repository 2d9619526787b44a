use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::DialogItem;
use crate::text::oxford_join;

const DEFAULT_TABLE: &str = include_str!("../../data/phrases.toml");

#[derive(Debug, Error)]
pub enum PhraseTableError {
    #[error("cannot read phrase table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid phrase table: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Item kind to phrasing pattern, plus labels for the baseline composer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseTable {
    #[serde(default)]
    phrases: BTreeMap<String, String>,
    #[serde(default)]
    naive_labels: BTreeMap<String, String>,
}

impl Default for PhraseTable {
    fn default() -> Self {
        PhraseTable::parse(DEFAULT_TABLE).expect("bundled phrase table parses")
    }
}

impl PhraseTable {
    pub fn parse(text: &str) -> Result<Self, PhraseTableError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PhraseTableError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PhraseTableError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn pattern(&self, item: &DialogItem) -> Option<&str> {
        let qualified = format!("{}:{}", item.component.letter(), item.kind);
        self.phrases
            .get(&qualified)
            .or_else(|| self.phrases.get(&item.kind))
            .map(String::as_str)
    }

    /// Phrased line for `item`, or `None` when the kind has no entry.
    pub fn phrase(&self, item: &DialogItem) -> Option<String> {
        self.pattern(item).map(|p| fill(p, item))
    }

    /// Phrase with the generic `The <kind> is: <value>` fallback.
    pub fn phrase_or_generic(&self, item: &DialogItem) -> String {
        self.phrase(item)
            .unwrap_or_else(|| format!("The {} is: {}", item.kind.replace('_', " "), item.value))
    }

    /// Label for the baseline composer's `Label: value` lines.
    pub fn naive_label(&self, kind: &str) -> String {
        self.naive_labels.get(kind).cloned().unwrap_or_else(|| title_case(kind))
    }
}

fn fill(pattern: &str, item: &DialogItem) -> String {
    let mut out = pattern.replace("{kind}", &item.kind);
    if out.contains("{quoted_list}") {
        let quoted: Vec<String> = split_list(&item.value)
            .into_iter()
            .map(|k| format!("``{k}''"))
            .collect();
        out = out.replace("{quoted_list}", &oxford_join(&quoted));
    }
    out.replace("{value}", &item.value)
}

/// Splits a comma-joined list value into trimmed, non-empty entries.
pub fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn title_case(kind: &str) -> String {
    kind.split('_')
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut cs = w.chars();
            match cs.next() {
                Some(c) => c.to_uppercase().chain(cs).collect::<String>(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}
