//! The sidewalk obstacle conversation agent: NLU corpus parsing, intent
//! classification, a story-driven dialogue policy and actions that answer
//! from the walker's free-path assessment.

pub mod actions;
pub mod agent;
pub mod classify;
pub mod dialogue;
pub mod domain;
pub mod nlu;

pub use agent::{LoadError, Reply, SocaAgent};
pub use classify::{Classifier, IntentPrediction, TokenF1Classifier, FALLBACK_INTENT};
pub use dialogue::{next_action, DialogueError, DialogueState};
pub use domain::{DomainSpec, DEFAULT_DOMAIN};
pub use nlu::{parse_nlu, serialize_nlu, NluTrainingData, DEFAULT_NLU};
