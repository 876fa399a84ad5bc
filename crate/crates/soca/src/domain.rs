//! The domain file: intents, entities, actions, response templates, default
//! actions and stories, as TOML.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const DOMAIN_FORMAT: u32 = 1;

/// The shipped domain.
pub const DEFAULT_DOMAIN: &str = include_str!("../assets/domain.toml");

pub const FALLBACK_ACTION: &str = "utter_fallback";
pub const REPORT_OBSTACLES: &str = "action_report_obstacles";
pub const REPORT_DISTANCE: &str = "action_report_distance";

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("domain parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported domain format {0}")]
    UnsupportedFormat(u32),
    #[error("story `{story}` uses undeclared intent `{intent}`")]
    StoryIntent { story: String, intent: String },
    #[error("story `{story}` uses undeclared action `{action}`")]
    StoryAction { story: String, action: String },
    #[error("story `{0}` has no steps")]
    EmptyStory(String),
    #[error("template for undeclared action `{0}`")]
    TemplateAction(String),
    #[error("action `{0}` needs a template")]
    MissingTemplate(String),
    #[error("intent `{0}` has no default action")]
    MissingDefault(String),
    #[error("default for `{intent}` names undeclared action `{action}`")]
    DefaultAction { intent: String, action: String },
    #[error("default for undeclared intent `{0}`")]
    DefaultIntent(String),
    #[error("`{0}` declared twice")]
    Duplicate(String),
    #[error("fallback action `utter_fallback` is not declared")]
    NoFallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryStep {
    pub intent: String,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Story {
    pub name: String,
    pub steps: Vec<StoryStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub format: u32,
    pub intents: Vec<String>,
    pub entities: Vec<String>,
    pub actions: Vec<String>,
    /// Response text per `utter_*` action, with `{slot}` placeholders.
    #[serde(default)]
    pub templates: BTreeMap<String, String>,
    /// Action per intent when no story matches.
    #[serde(default)]
    pub defaults: BTreeMap<String, String>,
    #[serde(default)]
    pub stories: Vec<Story>,
}

fn check_unique(names: &[String]) -> Result<(), DomainError> {
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(DomainError::Duplicate(n.clone()));
        }
    }
    Ok(())
}

impl DomainSpec {
    pub fn from_toml(text: &str) -> Result<Self, DomainError> {
        let spec: DomainSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("domain serializes")
    }

    pub fn default_domain() -> Self {
        Self::from_toml(DEFAULT_DOMAIN).expect("shipped domain is valid")
    }

    pub fn has_intent(&self, name: &str) -> bool {
        self.intents.iter().any(|i| i == name)
    }

    pub fn has_action(&self, name: &str) -> bool {
        self.actions.iter().any(|a| a == name)
    }

    pub fn has_entity(&self, name: &str) -> bool {
        self.entities.iter().any(|e| e == name)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.format != DOMAIN_FORMAT {
            return Err(DomainError::UnsupportedFormat(self.format));
        }
        check_unique(&self.intents)?;
        check_unique(&self.entities)?;
        check_unique(&self.actions)?;
        if !self.has_action(FALLBACK_ACTION) {
            return Err(DomainError::NoFallback);
        }
        for story in &self.stories {
            if story.steps.is_empty() {
                return Err(DomainError::EmptyStory(story.name.clone()));
            }
            for step in &story.steps {
                if !self.has_intent(&step.intent) {
                    return Err(DomainError::StoryIntent { story: story.name.clone(), intent: step.intent.clone() });
                }
                if !self.has_action(&step.action) {
                    return Err(DomainError::StoryAction { story: story.name.clone(), action: step.action.clone() });
                }
            }
        }
        for action in self.templates.keys() {
            if !self.has_action(action) {
                return Err(DomainError::TemplateAction(action.clone()));
            }
        }
        for action in self.actions.iter().filter(|a| a.starts_with("utter_")) {
            if !self.templates.contains_key(action) {
                return Err(DomainError::MissingTemplate(action.clone()));
            }
        }
        for (intent, action) in &self.defaults {
            if !self.has_intent(intent) {
                return Err(DomainError::DefaultIntent(intent.clone()));
            }
            if !self.has_action(action) {
                return Err(DomainError::DefaultAction { intent: intent.clone(), action: action.clone() });
            }
        }
        if let Some(missing) = self.intents.iter().find(|i| !self.defaults.contains_key(*i)) {
            return Err(DomainError::MissingDefault(missing.clone()));
        }
        Ok(())
    }

    /// Longest story length; only that much intent history matters.
    pub fn max_story_len(&self) -> usize {
        self.stories.iter().map(|s| s.steps.len()).max().unwrap_or(0)
    }
}
