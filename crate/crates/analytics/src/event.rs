//! Analytics events and their line-per-event JSON encoding.
//!
//! Each line is one object:
//!
//! ```text
//! {"ts":1700000000000,"session":"s1","kind":"conversation_text","payload":{"speaker":"user","text":"What is there?","intent":"find_obstacle"}}
//! {"ts":1700000010000,"session":"s1","kind":"keep_alive","payload":{}}
//! ```

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Agent,
}

/// Lifecycle and walk outcomes written as application log entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppEvent {
    SessionStart,
    SessionEnd,
    /// The walker reached the goal along a free path.
    GoalReached,
    Collision,
    Note,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    ConversationText {
        speaker: Speaker,
        text: String,
        /// Classified intent, on user lines.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        intent: Option<String>,
    },
    RecognizedObstacle {
        label: String,
        distance: f64,
    },
    UnrecognizedObstacle {
        distance: f64,
    },
    AppLog {
        event: AppEvent,
        #[serde(default, skip_serializing_if = "String::is_empty")]
        detail: String,
    },
    KeepAlive {},
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::ConversationText { .. } => "conversation_text",
            EventKind::RecognizedObstacle { .. } => "recognized_obstacle",
            EventKind::UnrecognizedObstacle { .. } => "unrecognized_obstacle",
            EventKind::AppLog { .. } => "app_log",
            EventKind::KeepAlive {} => "keep_alive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsEvent {
    /// Milliseconds since the Unix epoch.
    pub ts: u64,
    pub session: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl AnalyticsEvent {
    pub fn new(ts: u64, session: impl Into<String>, kind: EventKind) -> Self {
        Self { ts, session: session.into(), kind }
    }

    pub fn user(ts: u64, session: &str, text: &str, intent: Option<&str>) -> Self {
        Self::new(ts, session, EventKind::ConversationText {
            speaker: Speaker::User,
            text: text.into(),
            intent: intent.map(Into::into),
        })
    }

    pub fn agent(ts: u64, session: &str, text: &str) -> Self {
        Self::new(ts, session, EventKind::ConversationText { speaker: Speaker::Agent, text: text.into(), intent: None })
    }

    pub fn app(ts: u64, session: &str, event: AppEvent) -> Self {
        Self::new(ts, session, EventKind::AppLog { event, detail: String::new() })
    }

    pub fn keep_alive(ts: u64, session: &str) -> Self {
        Self::new(ts, session, EventKind::KeepAlive {})
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }
}
