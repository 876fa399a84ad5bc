//! Per-session dialogue state and the story policy that picks the next action.

use crate::classify::IntentPrediction;
use crate::domain::{DomainSpec, FALLBACK_ACTION};
use serde::{Deserialize, Serialize};
use sidewalk_core::freepath::ReportEntry;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DialogueError {
    #[error("undeclared intent `{0}`")]
    UndeclaredIntent(String),
    #[error("undeclared action `{0}`")]
    UndeclaredAction(String),
    #[error("session has no world")]
    NoWorld,
    #[error("template for `{action}` references unknown slot `{slot}`")]
    UnfilledSlot { action: String, slot: String },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DialogueState {
    pub session_id: String,
    pub last_intent: Option<String>,
    /// Entity name to value; only declared entities are kept.
    pub slots: BTreeMap<String, String>,
    pub turn_count: u64,
    /// The action chosen on the latest turn.
    pub pending_action: Option<String>,
    /// Recognized intents, oldest first, trimmed to what the stories can use.
    pub intent_history: Vec<String>,
    /// The latest obstacle report given to the user.
    pub last_report: Option<Vec<ReportEntry>>,
}

impl DialogueState {
    pub fn new(session_id: impl Into<String>) -> Self {
        Self { session_id: session_id.into(), ..Self::default() }
    }

    /// Records a classified turn and the action chosen for it.
    pub fn record(&mut self, pred: &IntentPrediction, action: &str, domain: &DomainSpec) {
        self.turn_count += 1;
        self.pending_action = Some(action.to_string());
        if pred.is_fallback() {
            return;
        }
        self.last_intent = Some(pred.intent.clone());
        self.intent_history.push(pred.intent.clone());
        let keep = domain.max_story_len().max(1);
        if self.intent_history.len() > keep {
            self.intent_history.drain(..self.intent_history.len() - keep);
        }
        for (entity, value) in &pred.entities {
            if domain.has_entity(entity) {
                self.slots.insert(entity.clone(), value.clone());
            }
        }
    }
}

/// Picks the action for `pred` given the intents seen so far.
///
/// Appends the new intent to the history and looks for the story whose
/// longest prefix equals the tail of that history; its last matched step
/// gives the action. Ties go to the earlier story. Without a match the
/// intent's default action is used.
pub fn next_action(state: &DialogueState, pred: &IntentPrediction, domain: &DomainSpec) -> Result<String, DialogueError> {
    if pred.is_fallback() {
        return Ok(FALLBACK_ACTION.to_string());
    }
    if !domain.has_intent(&pred.intent) {
        return Err(DialogueError::UndeclaredIntent(pred.intent.clone()));
    }
    let history: Vec<&str> =
        state.intent_history.iter().map(String::as_str).chain(std::iter::once(pred.intent.as_str())).collect();
    let mut best: Option<(usize, &str)> = None;
    for story in &domain.stories {
        for len in (1..=story.steps.len().min(history.len())).rev() {
            let tail = &history[history.len() - len..];
            let matches = story.steps[..len].iter().zip(tail).all(|(step, intent)| step.intent == *intent);
            if matches {
                if best.is_none_or(|(l, _)| len > l) {
                    best = Some((len, story.steps[len - 1].action.as_str()));
                }
                break;
            }
        }
    }
    let action = match best {
        Some((_, action)) => action,
        None => domain.defaults.get(&pred.intent).map(String::as_str).unwrap_or(FALLBACK_ACTION),
    };
    Ok(action.to_string())
}

/// Fills `{slot}` placeholders. Unknown slots are an error rather than text
/// left in the reply.
pub fn render_template(action: &str, template: &str, slots: &BTreeMap<String, String>) -> Result<String, DialogueError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open + 1..];
        let Some(close) = tail.find('}') else {
            out.push_str(&rest[open..]);
            return Ok(out);
        };
        let name = &tail[..close];
        let value = slots
            .get(name)
            .ok_or_else(|| DialogueError::UnfilledSlot { action: action.to_string(), slot: name.to_string() })?;
        out.push_str(value);
        rest = &tail[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(intent: &str) -> IntentPrediction {
        IntentPrediction { intent: intent.into(), confidence: 1.0, entities: BTreeMap::new() }
    }

    fn run(intents: &[&str]) -> Vec<String> {
        let domain = DomainSpec::default_domain();
        let mut state = DialogueState::new("s");
        intents
            .iter()
            .map(|i| {
                let p = pred(i);
                let a = next_action(&state, &p, &domain).unwrap();
                state.record(&p, &a, &domain);
                a
            })
            .collect()
    }

    #[test]
    fn shipped_stories() {
        assert_eq!(run(&["greet"]), ["utter_greet"]);
        assert_eq!(run(&["greet", "greet_ask", "greet_normal"]), ["utter_greet", "utter_ready", "utter_start"]);
        assert_eq!(run(&["find_obstacle", "find_distance", "bye"]), [
            "action_report_obstacles",
            "action_report_distance",
            "utter_bye"
        ]);
    }

    #[test]
    fn fallback_and_undeclared() {
        let domain = DomainSpec::default_domain();
        let state = DialogueState::new("s");
        assert_eq!(next_action(&state, &IntentPrediction::fallback(0.1), &domain).unwrap(), "utter_fallback");
        assert_eq!(
            next_action(&state, &pred("dance"), &domain).unwrap_err(),
            DialogueError::UndeclaredIntent("dance".into())
        );
    }

    #[test]
    fn slots_only_from_declared_entities() {
        let domain = DomainSpec::default_domain();
        let mut state = DialogueState::new("s");
        let mut p = pred("find_distance");
        p.entities.insert("distance".into(), "far".into());
        p.entities.insert("colour".into(), "red".into());
        state.record(&p, "action_report_distance", &domain);
        assert_eq!(state.slots.len(), 1);
        assert_eq!(state.slots["distance"], "far");
    }

    #[test]
    fn history_is_bounded() {
        let domain = DomainSpec::default_domain();
        let mut state = DialogueState::new("s");
        for _ in 0..100 {
            state.record(&pred("greet"), "utter_greet", &domain);
        }
        assert_eq!(state.intent_history.len(), domain.max_story_len());
        assert_eq!(state.turn_count, 100);
    }

    #[test]
    fn templates_fill_or_fail() {
        let slots = BTreeMap::from([("obstacle".to_string(), "tree".to_string())]);
        assert_eq!(render_template("a", "a {obstacle} here", &slots).unwrap(), "a tree here");
        assert!(matches!(render_template("a", "{distance}", &slots), Err(DialogueError::UnfilledSlot { .. })));
    }
}
