use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{opt_split, opt_str, parse_canonical, req_array, IngestError};
use crate::model::{ComponentKind, Dialog, DialogItem, Turn};

/// Component assignment for well-known item families.
///
/// States describe the dialog so far (summaries, speaker intent, emotion),
/// evidences are external material (knowledge snippets, personas) and
/// actions constrain the response (dialog acts, style and surface
/// constraints).
pub fn family_component(kind: &str) -> Option<ComponentKind> {
    use ComponentKind::*;
    Some(match kind {
        "summary" | "intent" | "emotion" | "belief_state" | "candidates" => State,
        "persona" | "knowledge" | "document" | "evidence" => Evidence,
        "dialog_act" | "style" | "keywords" | "begins_with" | "ends_with" | "length_class"
        | "draft_response" | "slot_value" => Action,
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemFamily {
    pub kind: String,
    pub component: ComponentKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Shape {
    Canonical,
    ActEmotion,
    PersonaUtterances,
}

/// Describes how one source dataset maps onto dialogs and items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterSpec {
    pub name: String,
    pub dataset: String,
    pub field_mapping: String,
    pub families: Vec<ItemFamily>,
    shape: Shape,
}

impl AdapterSpec {
    pub fn canonical() -> Self {
        AdapterSpec {
            name: "canonical".into(),
            dataset: String::new(),
            field_mapping: "records already in the canonical schema".into(),
            families: Vec::new(),
            shape: Shape::Canonical,
        }
    }

    /// Per-turn dialog act and emotion labels (DailyDialog-like):
    /// `{"utterances": [..], "acts": [..], "emotions": [..]}`.
    pub fn daily_dialog() -> Self {
        AdapterSpec {
            name: "dailydialog".into(),
            dataset: "dailydialog".into(),
            field_mapping: "utterances[i] -> turns[i].text (speakers alternate); \
                            acts[i] -> A/dialog_act on turn i; emotions[i] -> S/emotion on turn i"
                .into(),
            families: vec![
                ItemFamily {
                    kind: "dialog_act".into(),
                    component: ComponentKind::Action,
                },
                ItemFamily {
                    kind: "emotion".into(),
                    component: ComponentKind::State,
                },
            ],
            shape: Shape::ActEmotion,
        }
    }

    /// Persona lists plus utterances (PersonaChat/ConvAI-like):
    /// `{"partner_persona": [..], "your_persona": [..], "utterances": [..], "knowledge": [..]}`.
    pub fn persona_chat() -> Self {
        AdapterSpec {
            name: "personachat".into(),
            dataset: "personachat".into(),
            field_mapping: "utterances alternate partner (Speaker 1) / you (Speaker 2); \
                            partner_persona -> E/persona on Speaker 1's first turn; \
                            your_persona -> E/persona on Speaker 2's first turn; \
                            knowledge[i] -> E/knowledge on turn i"
                .into(),
            families: vec![
                ItemFamily {
                    kind: "persona".into(),
                    component: ComponentKind::Evidence,
                },
                ItemFamily {
                    kind: "knowledge".into(),
                    component: ComponentKind::Evidence,
                },
            ],
            shape: Shape::PersonaUtterances,
        }
    }

    pub fn by_name(name: &str) -> Result<Self, IngestError> {
        match name {
            "canonical" => Ok(Self::canonical()),
            "dailydialog" | "daily_dialog" => Ok(Self::daily_dialog()),
            "personachat" | "persona_chat" | "convai" => Ok(Self::persona_chat()),
            other => Err(IngestError::UnknownAdapter(other.to_string())),
        }
    }

    pub fn builtin() -> Vec<AdapterSpec> {
        vec![Self::canonical(), Self::daily_dialog(), Self::persona_chat()]
    }

    /// Checks every declared family against the fixed component assignment.
    pub fn check(&self) -> Result<(), IngestError> {
        for fam in &self.families {
            if let Some(expected) = family_component(&fam.kind) {
                if expected != fam.component {
                    return Err(IngestError::AdapterMapping {
                        adapter: self.name.clone(),
                        kind: fam.kind.clone(),
                        declared: fam.component,
                        expected,
                    });
                }
            }
        }
        Ok(())
    }

    fn component_for(&self, kind: &str) -> ComponentKind {
        self.families
            .iter()
            .find(|f| f.kind == kind)
            .map(|f| f.component)
            .or_else(|| family_component(kind))
            .unwrap_or(ComponentKind::State)
    }

    pub(crate) fn convert(&self, v: &Value, line: usize) -> Result<Dialog, IngestError> {
        match self.shape {
            Shape::Canonical => parse_canonical(v, line),
            Shape::ActEmotion => self.convert_act_emotion(v, line),
            Shape::PersonaUtterances => self.convert_persona(v, line),
        }
    }

    fn header(&self, v: &Value, line: usize) -> Result<(String, String), IngestError> {
        let dataset = opt_str(v, "dataset", "", line)?.unwrap_or_else(|| self.dataset.clone());
        let dialog_id = opt_str(v, "dialog_id", "", line)?.unwrap_or_else(|| format!("{dataset}-{line}"));
        Ok((dialog_id, dataset))
    }

    fn utterances(v: &Value, line: usize) -> Result<Vec<String>, IngestError> {
        string_list(req_array(v, "utterances", "", line)?, "utterances", line)
    }

    fn convert_act_emotion(&self, v: &Value, line: usize) -> Result<Dialog, IngestError> {
        let (dialog_id, dataset) = self.header(v, line)?;
        let utterances = Self::utterances(v, line)?;
        let mut turns: Vec<Turn> = utterances
            .into_iter()
            .enumerate()
            .map(|(i, text)| Turn::new(alternating_speaker(i), text))
            .collect();
        for (field, kind) in [("acts", "dialog_act"), ("emotions", "emotion")] {
            let Some(raw) = v.get(field) else { continue };
            let raw = raw.as_array().ok_or_else(|| schema(line, field))?;
            if raw.len() != turns.len() {
                return Err(schema(line, field));
            }
            let labels = string_list(raw, field, line)?;
            let component = self.component_for(kind);
            for (i, label) in labels.into_iter().enumerate() {
                if !label.trim().is_empty() {
                    turns[i].items.push(DialogItem::new(component, kind, label, i));
                }
            }
        }
        Ok(Dialog {
            dialog_id,
            dataset,
            split: opt_split(v, line)?,
            turns,
        })
    }

    fn convert_persona(&self, v: &Value, line: usize) -> Result<Dialog, IngestError> {
        let (dialog_id, dataset) = self.header(v, line)?;
        let utterances = Self::utterances(v, line)?;
        let mut turns: Vec<Turn> = utterances
            .into_iter()
            .enumerate()
            .map(|(i, text)| Turn::new(alternating_speaker(i), text))
            .collect();
        let persona_component = self.component_for("persona");
        for (field, first_turn) in [("partner_persona", 0usize), ("your_persona", 1usize)] {
            let Some(raw) = v.get(field) else { continue };
            let raw = raw.as_array().ok_or_else(|| schema(line, field))?;
            let lines = string_list(raw, field, line)?;
            if first_turn >= turns.len() {
                continue;
            }
            for p in lines.into_iter().filter(|p| !p.trim().is_empty()) {
                turns[first_turn]
                    .items
                    .push(DialogItem::new(persona_component, "persona", p, first_turn));
            }
        }
        if let Some(raw) = v.get("knowledge") {
            let raw = raw.as_array().ok_or_else(|| schema(line, "knowledge"))?;
            if raw.len() != turns.len() {
                return Err(schema(line, "knowledge"));
            }
            let component = self.component_for("knowledge");
            for (i, k) in raw.iter().enumerate() {
                match k {
                    Value::Null => {}
                    Value::String(s) if s.trim().is_empty() => {}
                    Value::String(s) => turns[i]
                        .items
                        .push(DialogItem::new(component, "knowledge", s.clone(), i)),
                    _ => return Err(schema(line, &format!("knowledge[{i}]"))),
                }
            }
        }
        Ok(Dialog {
            dialog_id,
            dataset,
            split: opt_split(v, line)?,
            turns,
        })
    }
}

pub(crate) fn alternating_speaker(i: usize) -> String {
    if i.is_multiple_of(2) {
        "Speaker 1".to_string()
    } else {
        "Speaker 2".to_string()
    }
}

fn schema(line: usize, field: &str) -> IngestError {
    IngestError::Schema {
        line,
        field: field.to_string(),
    }
}

fn string_list(raw: &[Value], field: &str, line: usize) -> Result<Vec<String>, IngestError> {
    raw.iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| schema(line, &format!("{field}[{i}]")))
        })
        .collect()
}
