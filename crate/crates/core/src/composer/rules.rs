use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ComponentKind, SignatureError, TaskSignature};

const DEFAULT_RULES: &str = include_str!("../../data/rules.csv");

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("cannot read rule file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("rule file: {0}")]
    Csv(#[from] csv::Error),
    #[error("rule {rule}: {message}")]
    Invalid { rule: String, message: String },
}

/// One row of the composition rule table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompositionRule {
    pub rule_id: String,
    pub sig_a: TaskSignature,
    pub sig_b: TaskSignature,
    /// Composed signature: the union of both groundings.
    pub composed: TaskSignature,
    /// Composed signature as written in the rule file.
    pub alias: String,
    /// Components both tasks must share ("dc" is the dialog context).
    pub common: BTreeSet<String>,
    pub target: ComponentKind,
}

impl CompositionRule {
    pub fn matches(&self, a: &TaskSignature, b: &TaskSignature) -> bool {
        (self.sig_a == *a && self.sig_b == *b) || (self.sig_a == *b && self.sig_b == *a)
    }
}

#[derive(Debug, Deserialize)]
struct RuleRow {
    rule_id: String,
    task_1: String,
    task_2: String,
    composed: String,
    common: String,
    target: String,
}

fn invalid(rule: &str, message: impl Into<String>) -> RuleError {
    RuleError::Invalid {
        rule: rule.to_string(),
        message: message.into(),
    }
}

impl TryFrom<RuleRow> for CompositionRule {
    type Error = RuleError;

    fn try_from(row: RuleRow) -> Result<Self, RuleError> {
        let id = row.rule_id.trim().to_string();
        let sig = |s: &str| -> Result<TaskSignature, RuleError> {
            s.trim()
                .parse()
                .map_err(|e: SignatureError| invalid(&id, format!("{s:?}: {e}")))
        };
        let sig_a = sig(&row.task_1)?;
        let sig_b = sig(&row.task_2)?;
        let alias_sig = sig(&row.composed)?;
        let target = row
            .target
            .trim()
            .to_uppercase()
            .chars()
            .next()
            .and_then(ComponentKind::from_letter)
            .filter(|_| row.target.trim().len() == 1)
            .ok_or_else(|| invalid(&id, format!("bad target {:?}", row.target)))?;
        if sig_a.target() != target || sig_b.target() != target || alias_sig.target() != target {
            return Err(invalid(&id, "task targets must equal the rule target"));
        }
        if sig_a.dimension() != 1 || sig_b.dimension() != 1 {
            return Err(invalid(&id, "rules pair one-dimensional tasks"));
        }
        let common: BTreeSet<String> = row
            .common
            .split(',')
            .map(|c| c.trim().to_lowercase())
            .filter(|c| !c.is_empty())
            .collect();
        if !common.contains("dc") {
            return Err(invalid(&id, "common components must include dc"));
        }
        let composed = sig_a
            .union(&sig_b, target)
            .map_err(|e| invalid(&id, e.to_string()))?;
        Ok(CompositionRule {
            rule_id: id,
            sig_a,
            sig_b,
            composed,
            alias: row.composed.trim().to_string(),
            common,
            target,
        })
    }
}

/// The loaded rule table; pairs are unordered and unique.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleSet {
    rules: Vec<CompositionRule>,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::parse(DEFAULT_RULES).expect("bundled rule table parses")
    }
}

impl RuleSet {
    pub fn parse(text: &str) -> Result<Self, RuleError> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rules: Vec<CompositionRule> = Vec::new();
        for row in reader.deserialize::<RuleRow>() {
            let rule = CompositionRule::try_from(row?)?;
            if rules.iter().any(|r| r.matches(&rule.sig_a, &rule.sig_b)) {
                return Err(invalid(&rule.rule_id, "duplicate task pair"));
            }
            rules.push(rule);
        }
        Ok(RuleSet { rules })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RuleError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RuleError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn rules(&self) -> &[CompositionRule] {
        &self.rules
    }

    pub fn lookup(&self, a: &TaskSignature, b: &TaskSignature) -> Option<&CompositionRule> {
        self.rules.iter().find(|r| r.matches(a, b))
    }
}
