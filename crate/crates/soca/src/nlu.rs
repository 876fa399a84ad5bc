//! The markdown NLU training format.
//!
//! ```text
//! <!-- format: 1 -->
//! ## intent:find_obstacle
//! - What is [there](obstacle)?
//!
//! ## synonym:obstacle
//! - cone
//! ```
//!
//! `## intent:NAME` opens a block of `- example` lines. `[surface](entity)`
//! marks an entity span; whitespace between `]` and `(` is tolerated, and the
//! stored text keeps only the surface. `## synonym:VALUE` blocks list
//! alternative surfaces that map to VALUE. The format comment is optional.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

pub const NLU_FORMAT: u32 = 1;

/// The shipped training corpus.
pub const DEFAULT_NLU: &str = include_str!("../assets/nlu.md");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NluError {
    #[error("no intents")]
    NoIntents,
    #[error("line {line}: example before any intent header")]
    ExampleOutsideBlock { line: usize },
    #[error("line {line}: unbalanced brackets")]
    UnbalancedBrackets { line: usize },
    #[error("line {line}: duplicate intent header `{name}`")]
    DuplicateIntent { line: usize, name: String },
    #[error("line {line}: unknown section `{header}`")]
    UnknownSection { line: usize, header: String },
    #[error("unsupported NLU format {0}")]
    UnsupportedFormat(u32),
}

/// An entity annotation; `start..end` are byte offsets into the stored text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub entity: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleUtterance {
    pub text: String,
    pub entities: Vec<EntitySpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intent {
    pub name: String,
    pub examples: Vec<ExampleUtterance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synonym {
    pub value: String,
    pub surfaces: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NluTrainingData {
    /// In declaration order.
    pub intents: Vec<Intent>,
    pub synonyms: Vec<Synonym>,
}

impl NluTrainingData {
    pub fn intent(&self, name: &str) -> Option<&Intent> {
        self.intents.iter().find(|i| i.name == name)
    }

    pub fn intent_names(&self) -> impl Iterator<Item = &str> {
        self.intents.iter().map(|i| i.name.as_str())
    }

    /// Entity names in first-use order.
    pub fn entity_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in self.intents.iter().flat_map(|i| &i.examples).flat_map(|x| &x.entities) {
            if !out.contains(&e.entity) {
                out.push(e.entity.clone());
            }
        }
        out
    }
}

enum Section {
    None,
    Intent(usize),
    Synonym(usize),
}

fn parse_format(line: &str) -> Option<u32> {
    let inner = line.strip_prefix("<!--")?.strip_suffix("-->")?.trim();
    inner.strip_prefix("format:")?.trim().parse().ok()
}

pub fn parse_nlu(text: &str) -> Result<NluTrainingData, NluError> {
    let mut data = NluTrainingData::default();
    let mut section = Section::None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(version) = parse_format(line) {
            if version != NLU_FORMAT {
                return Err(NluError::UnsupportedFormat(version));
            }
            continue;
        }
        if let Some(header) = line.strip_prefix("##") {
            let header = header.trim();
            if let Some(name) = header.strip_prefix("intent:") {
                let name = name.trim().to_string();
                if data.intent(&name).is_some() {
                    return Err(NluError::DuplicateIntent { line: line_no, name });
                }
                data.intents.push(Intent { name, examples: Vec::new() });
                section = Section::Intent(data.intents.len() - 1);
            } else if let Some(value) = header.strip_prefix("synonym:") {
                data.synonyms.push(Synonym { value: value.trim().to_string(), surfaces: Vec::new() });
                section = Section::Synonym(data.synonyms.len() - 1);
            } else {
                return Err(NluError::UnknownSection { line: line_no, header: header.to_string() });
            }
            continue;
        }
        let Some(body) = line.strip_prefix('-') else {
            // Free prose between blocks is ignored, as in the markdown original.
            continue;
        };
        let body = body.trim();
        match section {
            Section::None => return Err(NluError::ExampleOutsideBlock { line: line_no }),
            Section::Intent(i) => {
                let example = parse_example(body).ok_or(NluError::UnbalancedBrackets { line: line_no })?;
                data.intents[i].examples.push(example);
            }
            Section::Synonym(i) => data.synonyms[i].surfaces.push(body.to_string()),
        }
    }
    if data.intents.is_empty() {
        return Err(NluError::NoIntents);
    }
    Ok(data)
}

/// Strips `[surface](entity)` markup, recording spans. `None` on unbalanced
/// or malformed brackets.
pub fn parse_example(body: &str) -> Option<ExampleUtterance> {
    let mut text = String::with_capacity(body.len());
    let mut entities = Vec::new();
    let mut rest = body;
    while let Some(open) = rest.find(['[', ']', '(', ')']) {
        let (before, tail) = rest.split_at(open);
        text.push_str(before);
        if !tail.starts_with('[') {
            return None;
        }
        let close = tail.find(']')?;
        let surface = &tail[1..close];
        if surface.contains(['[', '(', ')']) {
            return None;
        }
        let after = tail[close + 1..].trim_start();
        let after = after.strip_prefix('(')?;
        let end = after.find(')')?;
        let entity = after[..end].trim();
        if entity.is_empty() || entity.contains(['[', ']', '(']) {
            return None;
        }
        let start = text.len();
        text.push_str(surface);
        entities.push(EntitySpan {
            start,
            end: text.len(),
            surface: surface.to_string(),
            entity: entity.to_string(),
        });
        rest = &after[end + 1..];
    }
    text.push_str(rest);
    Some(ExampleUtterance { text, entities })
}

fn render_example(ex: &ExampleUtterance) -> String {
    let mut out = String::new();
    let mut at = 0;
    for span in &ex.entities {
        out.push_str(&ex.text[at..span.start]);
        let _ = write!(out, "[{}]({})", span.surface, span.entity);
        at = span.end;
    }
    out.push_str(&ex.text[at..]);
    out
}

/// Canonical text for `data`; parses back to an equal value.
pub fn serialize_nlu(data: &NluTrainingData) -> String {
    let mut out = format!("<!-- format: {NLU_FORMAT} -->\n");
    for intent in &data.intents {
        let _ = writeln!(out, "\n## intent:{}", intent.name);
        for ex in &intent.examples {
            let _ = writeln!(out, "- {}", render_example(ex));
        }
    }
    for syn in &data.synonyms {
        let _ = writeln!(out, "\n## synonym:{}", syn.value);
        for s in &syn.surfaces {
            let _ = writeln!(out, "- {s}");
        }
    }
    out
}
