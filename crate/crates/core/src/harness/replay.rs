//! Episode logs and deterministic replay.
//!
//! A log is JSON lines: a header carrying the scenario and episode seed, one
//! record per step, and an `end` trailer. Replaying rebuilds the world from
//! the header, re-applies the logged actions and checks every outcome.

use super::{EpisodeSummary, StepLog};
use crate::scenario::{build_world, ScenarioConfig, ScenarioError};
use crate::world::{Action, StepOutcome};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use thiserror::Error;

pub const LOG_FORMAT: u32 = 1;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("log is truncated: {0}")]
    Truncated(String),
    #[error("unsupported log format {0}")]
    UnsupportedFormat(u32),
    #[error("divergence at tick {tick}: logged {logged}, replayed {replayed}")]
    Divergence { tick: u64, logged: String, replayed: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogLine {
    Header { format: u32, episode_seed: u64, dt: f64, scenario: ScenarioConfig },
    Step { tick: u64, action: Action, reward: i32, collided: bool, reached_goal: bool, stalled: bool, terminal: bool },
    End { steps: u32, #[serde(rename = "return")] return_: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub scenario: ScenarioConfig,
    pub episode_seed: u64,
    pub dt: f64,
    pub steps: Vec<StepLog>,
}

impl EpisodeLog {
    pub fn from_summary(scenario: &ScenarioConfig, dt: f64, summary: &EpisodeSummary) -> Self {
        Self { scenario: scenario.clone(), episode_seed: summary.seed, dt, steps: summary.log.clone() }
    }

    pub fn total_return(&self) -> i64 {
        self.steps.iter().map(|s| s.reward as i64).sum()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), ReplayError> {
        let mut line = |l: &LogLine| -> Result<(), ReplayError> {
            writeln!(out, "{}", serde_json::to_string(l).expect("log line serializes"))?;
            Ok(())
        };
        line(&LogLine::Header {
            format: LOG_FORMAT,
            episode_seed: self.episode_seed,
            dt: self.dt,
            scenario: self.scenario.clone(),
        })?;
        for (i, s) in self.steps.iter().enumerate() {
            line(&LogLine::Step {
                tick: i as u64 + 1,
                action: s.action,
                reward: s.reward as i32,
                collided: s.collided,
                reached_goal: s.reached_goal,
                stalled: s.stalled,
                terminal: s.terminal,
            })?;
        }
        line(&LogLine::End { steps: self.steps.len() as u32, return_: self.total_return() })
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, ReplayError> {
        let mut header = None;
        let mut steps = Vec::new();
        let mut ended = None;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let n = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            if ended.is_some() {
                return Err(ReplayError::Parse { line: n, reason: "content after end record".into() });
            }
            let parsed: LogLine = serde_json::from_str(&line)
                .map_err(|e| ReplayError::Parse { line: n, reason: e.to_string() })?;
            match parsed {
                LogLine::Header { format, episode_seed, dt, scenario } => {
                    if header.is_some() {
                        return Err(ReplayError::Parse { line: n, reason: "second header".into() });
                    }
                    if format != LOG_FORMAT {
                        return Err(ReplayError::UnsupportedFormat(format));
                    }
                    header = Some((episode_seed, dt, scenario));
                }
                LogLine::Step { tick, action, reward, collided, reached_goal, stalled, terminal } => {
                    if header.is_none() {
                        return Err(ReplayError::Parse { line: n, reason: "step before header".into() });
                    }
                    if tick != steps.len() as u64 + 1 {
                        return Err(ReplayError::Parse {
                            line: n,
                            reason: format!("expected tick {}, found {tick}", steps.len() + 1),
                        });
                    }
                    steps.push(StepLog {
                        action,
                        reward: f64::from(reward),
                        collided,
                        reached_goal,
                        stalled,
                        terminal,
                    });
                }
                LogLine::End { steps: count, return_ } => ended = Some((n, count, return_)),
            }
        }
        let Some((episode_seed, dt, scenario)) = header else {
            return Err(ReplayError::Truncated("missing header".into()));
        };
        let Some((line, count, ret)) = ended else {
            return Err(ReplayError::Truncated(format!("no end record after {} steps", steps.len())));
        };
        let log = Self { scenario, episode_seed, dt, steps };
        if count as usize != log.steps.len() || ret != log.total_return() {
            return Err(ReplayError::Parse {
                line,
                reason: format!(
                    "end record says {count} steps / return {ret}, log has {} / {}",
                    log.steps.len(),
                    log.total_return()
                ),
            });
        }
        Ok(log)
    }
}

/// Walker position after each replayed tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayedStep {
    pub tick: u64,
    pub action: Action,
    pub x: f64,
    pub y: f64,
    pub outcome: StepOutcome,
}

/// Re-simulates the log and checks each logged outcome.
pub fn replay(log: &EpisodeLog) -> Result<Vec<ReplayedStep>, ReplayError> {
    let mut world = build_world(&log.scenario.with_seed(log.episode_seed))?;
    let mut out = Vec::with_capacity(log.steps.len());
    for (i, s) in log.steps.iter().enumerate() {
        let tick = i as u64 + 1;
        let logged = StepOutcome {
            reward: s.reward as i32,
            collided: s.collided,
            reached_goal: s.reached_goal,
            stalled: s.stalled,
            terminal: s.terminal,
        };
        let actual = world.step(s.action, log.dt).map_err(|e| ReplayError::Divergence {
            tick,
            logged: format!("{logged:?}"),
            replayed: e.to_string(),
        })?;
        if actual != logged {
            return Err(ReplayError::Divergence {
                tick,
                logged: format!("{logged:?}"),
                replayed: format!("{actual:?}"),
            });
        }
        let p = world.walker.position;
        out.push(ReplayedStep { tick, action: s.action, x: p.x, y: p.y, outcome: actual });
    }
    Ok(out)
}
