//! Frozen-policy evaluation over many episodes and the per-kind detection
//! table.

use super::sidewalk::SidewalkEnv;
use super::train::HarnessError;
use super::{episode_seed, run_episode, Mode};
use crate::agents::AgentRng;
use crate::checkpoint::Checkpoint;
use crate::scenario::ScenarioConfig;
use crate::sensing::SensorConfig;
use crate::world::ObstacleKind;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub steps: u32,
    #[serde(rename = "return")]
    pub return_: i64,
    pub collided: bool,
    pub reached_goal: bool,
    pub detections: BTreeMap<ObstacleKind, bool>,
    pub duration_ticks: u64,
}

impl EpisodeRecord {
    /// Every step pays +1 except a colliding final step, which pays -1.
    pub fn return_identity_holds(&self) -> bool {
        self.return_ == i64::from(self.steps) - if self.collided { 2 } else { 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub kind: ObstacleKind,
    /// Episodes whose world contained the kind.
    pub present: u32,
    pub detected: u32,
}

impl DetectionRow {
    /// `None` when the kind never appeared.
    pub fn percent(&self) -> Option<f64> {
        (self.present > 0).then(|| 100.0 * f64::from(self.detected) / f64::from(self.present))
    }
}

/// Detection percentages for the seven table kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionTable {
    pub rows: Vec<DetectionRow>,
}

impl DetectionTable {
    /// Independent of record order.
    pub fn from_records(records: &[EpisodeRecord]) -> Self {
        let rows = ObstacleKind::DETECTION_TABLE
            .iter()
            .map(|&kind| {
                let mut row = DetectionRow { kind, present: 0, detected: 0 };
                for r in records {
                    if let Some(&hit) = r.detections.get(&kind) {
                        row.present += 1;
                        row.detected += u32::from(hit);
                    }
                }
                row
            })
            .collect();
        Self { rows }
    }

    pub fn percent(&self, kind: ObstacleKind) -> Option<f64> {
        self.rows.iter().find(|r| r.kind == kind).and_then(DetectionRow::percent)
    }

    /// Mean over the kinds that were present.
    pub fn average(&self) -> Option<f64> {
        let pcts: Vec<f64> = self.rows.iter().filter_map(DetectionRow::percent).collect();
        (!pcts.is_empty()).then(|| pcts.iter().sum::<f64>() / pcts.len() as f64)
    }

    /// `kind,detected_pct`, with `not_present` for absent kinds.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "detected_pct"])?;
        for r in &self.rows {
            let pct = r.percent().map_or_else(|| "not_present".to_string(), |p| format!("{p:.2}"));
            w.write_record([r.kind.as_str(), &pct])?;
        }
        if let Some(avg) = self.average() {
            w.write_record(["average", &format!("{avg:.3}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub records: Vec<EpisodeRecord>,
    pub table: DetectionTable,
    pub mean_return: f64,
    pub collision_rate: f64,
    pub goal_rate: f64,
}

/// Runs `episodes` greedy episodes of the checkpointed policy in parallel.
/// Episode `i` uses seed `episode_seed(seed, i)`, so results do not depend
/// on scheduling.
pub fn evaluate(
    checkpoint: &Checkpoint,
    scenario: &ScenarioConfig,
    sensor: &SensorConfig,
    episodes: u32,
    seed: u64,
    max_steps: u32,
) -> Result<Evaluation, HarnessError> {
    if episodes == 0 {
        return Err(HarnessError::NoEpisodes);
    }
    let template = SidewalkEnv::new(scenario.clone(), sensor.clone())?;
    let policy = checkpoint.policy();
    let records: Vec<EpisodeRecord> = (0..episodes)
        .into_par_iter()
        .map_init(
            || (template.clone(), policy.clone()),
            |(env, policy), i| {
                let ep_seed = episode_seed(seed, u64::from(i));
                // Greedy episodes draw nothing from this stream.
                let mut rng = AgentRng::seed_from_u64(ep_seed);
                let s = run_episode(env, policy, ep_seed, Mode::Greedy, &mut rng, max_steps, false);
                EpisodeRecord {
                    seed: ep_seed,
                    steps: s.steps,
                    return_: s.total_reward as i64,
                    collided: s.collided,
                    reached_goal: s.reached_goal,
                    detections: env.detections(),
                    duration_ticks: env.world().tick,
                }
            },
        )
        .collect();
    let n = records.len() as f64;
    Ok(Evaluation {
        table: DetectionTable::from_records(&records),
        mean_return: records.iter().map(|r| r.return_ as f64).sum::<f64>() / n,
        collision_rate: records.iter().filter(|r| r.collided).count() as f64 / n,
        goal_rate: records.iter().filter(|r| r.reached_goal).count() as f64 / n,
        records,
    })
}
