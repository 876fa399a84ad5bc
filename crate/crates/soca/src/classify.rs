//! Intent classification by token-set overlap with the training examples.

use crate::nlu::NluTrainingData;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub const FALLBACK_INTENT: &str = "fallback";
pub const DEFAULT_FALLBACK_THRESHOLD: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentPrediction {
    pub intent: String,
    pub confidence: f64,
    /// Entity name to surface value.
    pub entities: BTreeMap<String, String>,
}

impl IntentPrediction {
    pub fn fallback(confidence: f64) -> Self {
        Self { intent: FALLBACK_INTENT.to_string(), confidence, entities: BTreeMap::new() }
    }

    pub fn is_fallback(&self) -> bool {
        self.intent == FALLBACK_INTENT
    }
}

/// Anything that maps an utterance to an intent.
pub trait Classifier {
    fn classify(&self, utterance: &str) -> IntentPrediction;
}

/// Lowercases, drops punctuation and splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect::<String>())
        .filter(|w| !w.is_empty())
        .collect()
}

/// F1 between two token sets; zero when either is empty.
pub fn token_set_f1(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let common = a.intersection(b).count();
    2.0 * common as f64 / (a.len() + b.len()) as f64
}

#[derive(Debug, Clone)]
struct EntityCue {
    entity: String,
    /// Normalized tokens of the annotated surface, then of each synonym.
    surfaces: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
struct IntentIndex {
    name: String,
    examples: Vec<BTreeSet<String>>,
    cues: Vec<EntityCue>,
}

#[derive(Debug, Clone)]
pub struct TokenF1Classifier {
    intents: Vec<IntentIndex>,
    pub threshold: f64,
}

impl TokenF1Classifier {
    pub fn train(data: &NluTrainingData) -> Self {
        Self::with_threshold(data, DEFAULT_FALLBACK_THRESHOLD)
    }

    pub fn with_threshold(data: &NluTrainingData, threshold: f64) -> Self {
        let intents = data
            .intents
            .iter()
            .map(|intent| {
                let examples = intent.examples.iter().map(|ex| tokenize(&ex.text).into_iter().collect()).collect();
                let mut cues: Vec<EntityCue> = Vec::new();
                for span in intent.examples.iter().flat_map(|ex| &ex.entities) {
                    let mut surfaces = vec![tokenize(&span.surface)];
                    for syn in data.synonyms.iter().filter(|s| s.value.eq_ignore_ascii_case(&span.surface)) {
                        surfaces.extend(syn.surfaces.iter().map(|s| tokenize(s)));
                    }
                    surfaces.retain(|s| !s.is_empty());
                    if !surfaces.is_empty() {
                        cues.push(EntityCue { entity: span.entity.clone(), surfaces });
                    }
                }
                IntentIndex { name: intent.name.clone(), examples, cues }
            })
            .collect();
        Self { intents, threshold }
    }

    pub fn intent_names(&self) -> impl Iterator<Item = &str> {
        self.intents.iter().map(|i| i.name.as_str())
    }
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

impl Classifier for TokenF1Classifier {
    fn classify(&self, utterance: &str) -> IntentPrediction {
        let tokens = tokenize(utterance);
        let set: BTreeSet<String> = tokens.iter().cloned().collect();
        let mut best: Option<(&IntentIndex, f64)> = None;
        for intent in &self.intents {
            let score = intent.examples.iter().map(|ex| token_set_f1(&set, ex)).fold(0.0, f64::max);
            // Strictly greater keeps the earlier-declared intent on ties.
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((intent, score));
            }
        }
        let Some((intent, confidence)) = best else {
            return IntentPrediction::fallback(0.0);
        };
        if confidence < self.threshold {
            return IntentPrediction::fallback(confidence);
        }
        let mut entities = BTreeMap::new();
        for cue in &intent.cues {
            if entities.contains_key(&cue.entity) {
                continue;
            }
            // Synonyms resolve to the annotated surface.
            if cue.surfaces.iter().any(|s| contains_run(&tokens, s)) {
                entities.insert(cue.entity.clone(), cue.surfaces[0].join(" "));
            }
        }
        IntentPrediction { intent: intent.name.clone(), confidence, entities }
    }
}
