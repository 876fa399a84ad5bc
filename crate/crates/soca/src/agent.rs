//! Text in, text out: classify, pick an action, run it.

use crate::actions::{mentioned_kind, report_distance, report_obstacles};
use crate::classify::{Classifier, IntentPrediction, TokenF1Classifier};
use crate::dialogue::{next_action, render_template, DialogueError, DialogueState};
use crate::domain::{DomainError, DomainSpec, REPORT_DISTANCE, REPORT_OBSTACLES};
use crate::nlu::{parse_nlu, NluError, NluTrainingData, DEFAULT_NLU};
use serde::{Deserialize, Serialize};
use sidewalk_core::freepath::{FreePathAssessment, ReportEntry};
use sidewalk_core::ObstacleKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Nlu(#[from] NluError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("training data intent `{0}` is not declared in the domain")]
    UnknownIntent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub prediction: IntentPrediction,
    pub action: String,
    pub text: String,
    /// Set when the action produced a fresh obstacle report.
    pub report: Option<Vec<ReportEntry>>,
}

/// Shared, immutable conversational model; state lives in `DialogueState`.
#[derive(Debug, Clone)]
pub struct SocaAgent<C = TokenF1Classifier> {
    pub nlu: NluTrainingData,
    pub domain: DomainSpec,
    pub classifier: C,
}

impl SocaAgent<TokenF1Classifier> {
    pub fn new(nlu: NluTrainingData, domain: DomainSpec) -> Result<Self, LoadError> {
        domain.validate()?;
        if let Some(bad) = nlu.intent_names().find(|i| !domain.has_intent(i)) {
            return Err(LoadError::UnknownIntent(bad.to_string()));
        }
        let classifier = TokenF1Classifier::train(&nlu);
        Ok(Self { nlu, domain, classifier })
    }

    pub fn from_texts(nlu: &str, domain: &str) -> Result<Self, LoadError> {
        Self::new(parse_nlu(nlu)?, DomainSpec::from_toml(domain)?)
    }

    /// The shipped corpus and domain.
    pub fn shipped() -> Self {
        Self::from_texts(DEFAULT_NLU, crate::domain::DEFAULT_DOMAIN).expect("shipped assets load")
    }
}

impl<C: Classifier> SocaAgent<C> {
    /// Handles one utterance. `world` is the session's current assessment,
    /// `None` when the session is not bound to a walk.
    pub fn respond(
        &self,
        state: &mut DialogueState,
        utterance: &str,
        world: Option<&FreePathAssessment>,
    ) -> Result<Reply, DialogueError> {
        let prediction = self.classifier.classify(utterance);
        let action = next_action(state, &prediction, &self.domain)?;
        let mut report = None;
        let text = match action.as_str() {
            REPORT_OBSTACLES => {
                let (text, entries) = report_obstacles(world.ok_or(DialogueError::NoWorld)?);
                report = Some(entries);
                text
            }
            REPORT_DISTANCE => {
                let kind = prediction
                    .entities
                    .get("obstacle")
                    .and_then(|s| ObstacleKind::parse(s))
                    .or_else(|| mentioned_kind(utterance));
                report_distance(state.last_report.as_deref(), kind)
            }
            other => {
                let template =
                    self.domain.templates.get(other).ok_or_else(|| DialogueError::UndeclaredAction(other.to_string()))?;
                let mut slots = state.slots.clone();
                slots.extend(prediction.entities.clone());
                render_template(other, template, &slots)?
            }
        };
        state.record(&prediction, &action, &self.domain);
        if let Some(r) = &report {
            state.last_report = Some(r.clone());
        }
        Ok(Reply { prediction, action, text, report })
    }
}
