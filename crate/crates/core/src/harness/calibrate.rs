//! Fits per-kind dropout probabilities so a trained policy's evaluation
//! detection rates land on target percentages.
//!
//! Detection rate falls monotonically as a kind's dropout rises, and the
//! kinds barely interact, so every kind is bisected at once from shared
//! evaluation runs. The policy's reach depends on what it can see, so each
//! round retrains under the fitted dropouts before judging them.

use super::evaluate::{evaluate, DetectionTable};
use super::train::{train, HarnessError, TrainConfig, Validation};
use super::MAX_EPISODE_STEPS;
use crate::agents::Algorithm;
use crate::checkpoint::Checkpoint;
use crate::scenario::ScenarioConfig;
use crate::sensing::SensorConfig;
use crate::world::ObstacleKind;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Simulated per-episode detection percentages the shipped dropouts aim for.
pub fn reference_detection_pct() -> BTreeMap<ObstacleKind, f64> {
    use ObstacleKind::*;
    BTreeMap::from([
        (Pothole, 55.0),
        (ConstructionCone, 91.0),
        (FireHydrant, 92.0),
        (ElectricScooter, 74.0),
        (ElectricPole, 78.0),
        (Dumpster, 93.0),
        (Tree, 87.0),
    ])
}

/// Upper end of the dropout search; a kind that still exceeds its target
/// here is effectively invisible.
pub const MAX_DROPOUT: f64 = 0.999;

/// How the detection-table policy is trained: a DQN with periodic greedy
/// validation that keeps its best snapshot.
pub fn detection_train_config(episodes: u32, seed: u64, sensor: &SensorConfig) -> TrainConfig {
    let mut cfg = TrainConfig::new(Algorithm::Dqn, episodes, seed);
    cfg.sensor = sensor.clone();
    cfg.validation = Some(Validation { every: 100, episodes: 50 });
    cfg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub train_episodes: u32,
    /// One policy per seed; detection rates are pooled across them.
    pub train_seeds: Vec<u64>,
    pub eval_episodes: u32,
    pub eval_seed: u64,
    pub rounds: u32,
    pub iterations: u32,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            train_episodes: 2000,
            train_seeds: vec![11, 12, 13],
            eval_episodes: 1000,
            eval_seed: 2,
            rounds: 3,
            iterations: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub dropout: BTreeMap<ObstacleKind, f64>,
    /// Pooled evaluation of policies trained under `dropout`.
    pub table: DetectionTable,
    /// Largest distance from a target, in percentage points.
    pub max_error: f64,
}

fn detection_pct(table: &DetectionTable) -> BTreeMap<ObstacleKind, f64> {
    table.rows.iter().filter_map(|r| Some((r.kind, r.percent()?))).collect()
}

fn max_error(table: &DetectionTable, targets: &BTreeMap<ObstacleKind, f64>) -> f64 {
    let pct = detection_pct(table);
    targets
        .iter()
        .map(|(k, t)| pct.get(k).map_or(f64::INFINITY, |p| (p - t).abs()))
        .fold(0.0, f64::max)
}

fn train_policies(
    scenario: &ScenarioConfig,
    sensor: &SensorConfig,
    cfg: &CalibrationConfig,
) -> Result<Vec<Checkpoint>, HarnessError> {
    cfg.train_seeds
        .iter()
        .map(|&seed| Ok(train(&detection_train_config(cfg.train_episodes, seed, sensor), scenario)?.checkpoint))
        .collect()
}

fn pooled_table(
    policies: &[Checkpoint],
    scenario: &ScenarioConfig,
    sensor: &SensorConfig,
    cfg: &CalibrationConfig,
) -> Result<DetectionTable, HarnessError> {
    let mut records = Vec::new();
    for checkpoint in policies {
        let ev = evaluate(checkpoint, scenario, sensor, cfg.eval_episodes, cfg.eval_seed, MAX_EPISODE_STEPS)?;
        records.extend(ev.records);
    }
    Ok(DetectionTable::from_records(&records))
}

/// Trains one detection policy per seed in `cfg` under `sensor` and pools
/// their greedy evaluations into one table.
pub fn pooled_detection(
    scenario: &ScenarioConfig,
    sensor: &SensorConfig,
    cfg: &CalibrationConfig,
) -> Result<DetectionTable, HarnessError> {
    if cfg.train_seeds.is_empty() || cfg.eval_episodes == 0 {
        return Err(HarnessError::NoEpisodes);
    }
    pooled_table(&train_policies(scenario, sensor, cfg)?, scenario, sensor, cfg)
}

/// Alternates bisection against frozen policies with retraining under the
/// fitted dropouts, and keeps the round whose retrained policies land
/// closest to the targets.
pub fn calibrate(
    scenario: &ScenarioConfig,
    base: &SensorConfig,
    targets: &BTreeMap<ObstacleKind, f64>,
    cfg: &CalibrationConfig,
) -> Result<CalibrationResult, HarnessError> {
    if cfg.train_seeds.is_empty() || cfg.eval_episodes == 0 {
        return Err(HarnessError::NoEpisodes);
    }
    let mut sensor = base.clone();
    let mut policies = train_policies(scenario, &sensor, cfg)?;
    let mut best: Option<CalibrationResult> = None;
    for round in 0..cfg.rounds.max(1) {
        let mut bracket: BTreeMap<ObstacleKind, (f64, f64)> =
            targets.keys().map(|&k| (k, (0.0, MAX_DROPOUT))).collect();
        for _ in 0..cfg.iterations {
            for (&kind, &(lo, hi)) in &bracket {
                sensor.dropout.insert(kind, 0.5 * (lo + hi));
            }
            let pct = detection_pct(&pooled_table(&policies, scenario, &sensor, cfg)?);
            for (kind, b) in bracket.iter_mut() {
                let mid = 0.5 * (b.0 + b.1);
                match pct.get(kind) {
                    Some(&p) if p > targets[kind] => b.0 = mid,
                    _ => b.1 = mid,
                }
            }
        }
        for (&kind, &(lo, hi)) in &bracket {
            sensor.dropout.insert(kind, 0.5 * (lo + hi));
        }
        policies = train_policies(scenario, &sensor, cfg)?;
        let table = pooled_table(&policies, scenario, &sensor, cfg)?;
        let err = max_error(&table, targets);
        tracing::info!(round, max_error = err, average = ?table.average(), "calibration round finished");
        if best.as_ref().is_none_or(|b| err < b.max_error) {
            best = Some(CalibrationResult { dropout: sensor.dropout.clone(), table, max_error: err });
        }
    }
    Ok(best.expect("at least one round"))
}
