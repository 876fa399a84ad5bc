//! Usage metrics inferred from the event log.
//!
//! Per session, in timestamp order:
//!
//! - deadlock: a user line opens a wait that the next agent line closes (or
//!   the session's last event, if no reply came). Waits longer than the
//!   deadlock threshold count in full.
//! - offline: gaps between consecutive keep-alives longer than the gap
//!   threshold count in full.
//! - task completion: from the session start (its `session_start` entry,
//!   else its first event) to the first `goal_reached`, else to
//!   `session_end`, else to its last event.
//! - user tries: runs of consecutive user lines with the same intent, each
//!   within the retry window of the run's first line; every run of two or
//!   more adds its length.
//!
//! Sessions per day divides the session count by the number of distinct
//! UTC days on which sessions started.

use crate::event::{AnalyticsEvent, AppEvent, EventKind, Speaker};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub const DAY_MS: u64 = 86_400_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub keep_alive_period_ms: u64,
    pub gap_threshold_ms: u64,
    pub deadlock_threshold_ms: u64,
    pub retry_window_ms: u64,
}

impl Thresholds {
    /// Defaults for a given keep-alive period: offline after three missed
    /// beats.
    pub fn with_period(keep_alive_period_ms: u64) -> Self {
        Self {
            keep_alive_period_ms,
            gap_threshold_ms: 3 * keep_alive_period_ms,
            deadlock_threshold_ms: 5_000,
            retry_window_ms: 30_000,
        }
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self::with_period(10_000)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub session: String,
    pub start_ms: u64,
    pub deadlock_ms: u64,
    pub offline_ms: u64,
    pub task_completion_ms: u64,
    /// Whether the walk reached its goal.
    pub completed: bool,
    pub user_tries: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UsageReport {
    pub deadlock_ms: u64,
    pub offline_ms: u64,
    pub sessions_per_day: f64,
    pub total_task_completion_ms: u64,
    pub mean_task_completion_ms: f64,
    pub user_tries: u64,
    pub sessions: BTreeMap<String, SessionMetrics>,
}

fn session_metrics(session: &str, events: &[&AnalyticsEvent], th: &Thresholds) -> SessionMetrics {
    let first_ts = events[0].ts;
    let last_ts = events[events.len() - 1].ts;
    let app = |wanted: AppEvent| {
        events.iter().find_map(|e| match e.kind {
            EventKind::AppLog { event, .. } if event == wanted => Some(e.ts),
            _ => None,
        })
    };

    let mut deadlock_ms = 0;
    let mut waiting_since: Option<u64> = None;
    let close_wait = |from: u64, to: u64, total: &mut u64| {
        let wait = to.saturating_sub(from);
        if wait > th.deadlock_threshold_ms {
            *total += wait;
        }
    };
    for e in events {
        if let EventKind::ConversationText { speaker, .. } = &e.kind {
            match (speaker, waiting_since) {
                (Speaker::User, None) => waiting_since = Some(e.ts),
                (Speaker::Agent, Some(from)) => {
                    close_wait(from, e.ts, &mut deadlock_ms);
                    waiting_since = None;
                }
                _ => {}
            }
        }
    }
    if let Some(from) = waiting_since {
        close_wait(from, last_ts, &mut deadlock_ms);
    }

    let beats: Vec<u64> =
        events.iter().filter(|e| matches!(e.kind, EventKind::KeepAlive {})).map(|e| e.ts).collect();
    let offline_ms = beats.windows(2).map(|w| w[1] - w[0]).filter(|&gap| gap > th.gap_threshold_ms).sum();

    let start_ms = app(AppEvent::SessionStart).unwrap_or(first_ts);
    let goal = events.iter().find_map(|e| match e.kind {
        EventKind::AppLog { event: AppEvent::GoalReached, .. } if e.ts >= start_ms => Some(e.ts),
        _ => None,
    });
    let end = goal.or_else(|| app(AppEvent::SessionEnd)).unwrap_or(last_ts);

    let intents: Vec<(u64, &str)> = events
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::ConversationText { speaker: Speaker::User, intent: Some(intent), .. } => {
                Some((e.ts, intent.as_str()))
            }
            _ => None,
        })
        .collect();
    let mut user_tries = 0;
    let mut i = 0;
    while i < intents.len() {
        let (t0, intent) = intents[i];
        let mut j = i + 1;
        while j < intents.len() && intents[j].1 == intent && intents[j].0 - t0 <= th.retry_window_ms {
            j += 1;
        }
        if j - i >= 2 {
            user_tries += (j - i) as u64;
        }
        i = j;
    }

    SessionMetrics {
        session: session.to_string(),
        start_ms,
        deadlock_ms,
        offline_ms,
        task_completion_ms: end.saturating_sub(start_ms),
        completed: goal.is_some(),
        user_tries,
    }
}

pub fn report(events: &[AnalyticsEvent], th: &Thresholds) -> UsageReport {
    let mut by_session: BTreeMap<&str, Vec<&AnalyticsEvent>> = BTreeMap::new();
    for e in events {
        by_session.entry(e.session.as_str()).or_default().push(e);
    }
    let mut out = UsageReport::default();
    for (session, mut evs) in by_session {
        evs.sort_by_key(|e| e.ts);
        out.sessions.insert(session.to_string(), session_metrics(session, &evs, th));
    }
    if out.sessions.is_empty() {
        return out;
    }
    let days: BTreeSet<u64> = out.sessions.values().map(|s| s.start_ms / DAY_MS).collect();
    out.sessions_per_day = out.sessions.len() as f64 / days.len() as f64;
    for s in out.sessions.values() {
        out.deadlock_ms += s.deadlock_ms;
        out.offline_ms += s.offline_ms;
        out.total_task_completion_ms += s.task_completion_ms;
        out.user_tries += s.user_tries;
    }
    out.mean_task_completion_ms = out.total_task_completion_ms as f64 / out.sessions.len() as f64;
    out
}

impl UsageReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per session.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for s in self.sessions.values() {
            w.serialize(s)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}
