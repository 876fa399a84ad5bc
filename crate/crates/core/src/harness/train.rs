//! Training runs on the sidewalk and their learning curves.

use super::sidewalk::SidewalkEnv;
use super::{
    episode_seed, mix, run_episode, train_learner, train_learner_with, EpisodeSummary, Mode, MAX_EPISODE_STEPS,
};
use crate::agents::AgentRng;
use rand::SeedableRng;
use crate::agents::{Algorithm, DqnConfig, DqnModel, EpsilonSchedule, Reinforce, TabularAgent, TdRule, FEATURE_LEN};
use crate::checkpoint::{Checkpoint, CheckpointError, Policy, CHECKPOINT_FORMAT};
use crate::scenario::{ScenarioConfig, ScenarioError};
use crate::sensing::SensorConfig;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("episode count must be at least 1")]
    NoEpisodes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub episodes: u32,
    pub seed: u64,
    pub epsilon: EpsilonSchedule,
    /// Tabular learning rate.
    pub alpha: f64,
    pub gamma: f64,
    pub dqn: DqnConfig,
    pub reinforce_learning_rate: f64,
    pub max_steps: u32,
    pub sensor: SensorConfig,
    /// Keep the best greedy snapshot instead of the final learner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<Validation>,
}

/// Periodic greedy validation during training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    /// Validate after every `every` training episodes.
    pub every: u32,
    pub episodes: u32,
}

impl Default for Validation {
    fn default() -> Self {
        Self { every: 100, episodes: 20 }
    }
}

impl TrainConfig {
    pub fn new(algorithm: Algorithm, episodes: u32, seed: u64) -> Self {
        Self {
            algorithm,
            episodes,
            seed,
            epsilon: EpsilonSchedule::default(),
            alpha: 0.3,
            gamma: 0.99,
            dqn: DqnConfig::default(),
            reinforce_learning_rate: 1e-3,
            max_steps: MAX_EPISODE_STEPS,
            sensor: SensorConfig::default(),
            validation: None,
        }
    }

    /// An untrained model of the configured algorithm.
    pub fn fresh_policy(&self) -> Policy {
        match self.algorithm {
            Algorithm::QLearning => {
                Policy::Tabular(TabularAgent::new(TdRule::QLearning, self.alpha, self.gamma))
            }
            Algorithm::Sarsa => Policy::Tabular(TabularAgent::new(TdRule::Sarsa, self.alpha, self.gamma)),
            Algorithm::Dqn => Policy::Dqn(Box::new(DqnModel::new(DqnConfig {
                gamma: self.gamma,
                seed: super::mix(self.seed, 0xd9a),
                ..self.dqn.clone()
            }))),
            Algorithm::Reinforce => {
                Policy::Reinforce(Reinforce::new(FEATURE_LEN, self.gamma, self.reinforce_learning_rate))
            }
        }
    }
}

/// Per-episode returns of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub algorithm: Algorithm,
    pub returns: Vec<f64>,
    pub smoothing_window: usize,
}

impl LearningCurve {
    pub fn new(algorithm: Algorithm, returns: Vec<f64>) -> Self {
        Self { algorithm, returns, smoothing_window: 10 }
    }

    /// Trailing moving average over `smoothing_window` episodes.
    pub fn smoothed(&self) -> Vec<f64> {
        let w = self.smoothing_window.max(1);
        (0..self.returns.len())
            .map(|i| {
                let lo = (i + 1).saturating_sub(w);
                let win = &self.returns[lo..=i];
                win.iter().sum::<f64>() / win.len() as f64
            })
            .collect()
    }

    /// Mean of the last `n` returns (all of them if fewer).
    pub fn mean_last(&self, n: usize) -> f64 {
        let tail = &self.returns[self.returns.len().saturating_sub(n)..];
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["episode", "return"])?;
        for (i, r) in self.returns.iter().enumerate() {
            w.write_record([i.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(algorithm: Algorithm, input: R) -> Result<Self, HarnessError> {
        let mut r = csv::Reader::from_reader(input);
        let returns = r
            .deserialize::<(usize, f64)>()
            .map(|row| row.map(|(_, v)| v))
            .collect::<Result<_, _>>()?;
        Ok(Self::new(algorithm, returns))
    }
}

/// Describes a run next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub command: String,
    pub algorithm: Algorithm,
    pub scenario: String,
    pub episodes: u32,
    pub seed: u64,
    pub version: String,
}

impl RunMetadata {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("metadata serializes")
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub checkpoint: Checkpoint,
    pub curve: LearningCurve,
    pub episodes: Vec<EpisodeSummary>,
}

impl TrainOutput {
    /// Writes `checkpoint.json`, `curve.csv` and `run.toml` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir)?;
        self.checkpoint.save(&dir.join("checkpoint.json"))?;
        self.curve.write_csv(std::fs::File::create(dir.join("curve.csv"))?)?;
        let meta = RunMetadata {
            command: "train".into(),
            algorithm: self.curve.algorithm,
            scenario: self.checkpoint.scenario.clone(),
            episodes: self.checkpoint.episodes,
            seed: self.checkpoint.seed,
            version: env!("CARGO_PKG_VERSION").into(),
        };
        std::fs::write(dir.join("run.toml"), meta.to_toml())?;
        Ok(())
    }
}

/// Mean greedy return over `episodes` validation walks on a copy of `env`.
fn validate(env: &SidewalkEnv, policy: &Policy, episodes: u32, seed: u64, max_steps: u32) -> f64 {
    let mut env = env.clone();
    let mut policy = policy.clone();
    let mut rng = AgentRng::seed_from_u64(0);
    let total: f64 = (0..episodes)
        .map(|i| {
            let ep_seed = episode_seed(mix(seed, VALIDATION_STREAM), u64::from(i));
            run_episode(&mut env, &mut policy, ep_seed, Mode::Greedy, &mut rng, max_steps, false).total_reward
        })
        .sum();
    total / f64::from(episodes.max(1))
}

const VALIDATION_STREAM: u64 = 0x7a11d;

/// Trains one learner on `scenario`. Deterministic in (config, scenario).
pub fn train(cfg: &TrainConfig, scenario: &ScenarioConfig) -> Result<TrainOutput, HarnessError> {
    if cfg.episodes == 0 {
        return Err(HarnessError::NoEpisodes);
    }
    let mut env = SidewalkEnv::new(scenario.clone(), cfg.sensor.clone())?;
    let mut policy = cfg.fresh_policy();
    let (episodes, policy) = match cfg.validation {
        None => {
            let episodes = train_learner(&mut env, &mut policy, cfg.episodes, cfg.epsilon, cfg.seed, cfg.max_steps);
            (episodes, policy)
        }
        Some(v) => {
            let mut best: Option<(f64, Policy)> = None;
            let episodes = train_learner_with(
                &mut env,
                &mut policy,
                cfg.episodes,
                cfg.epsilon,
                cfg.seed,
                cfg.max_steps,
                |e, env, learner| {
                    if (e + 1) % v.every.max(1) != 0 && e + 1 != cfg.episodes {
                        return;
                    }
                    let score = validate(env, learner, v.episodes, cfg.seed, cfg.max_steps);
                    tracing::debug!(episode = e + 1, score, "validation");
                    if best.as_ref().is_none_or(|(b, _)| score > *b) {
                        best = Some((score, learner.clone()));
                    }
                },
            );
            (episodes, best.map_or(policy, |(_, p)| p))
        }
    };
    tracing::debug!(algorithm = %cfg.algorithm, episodes = cfg.episodes, "training finished");
    let curve = LearningCurve::new(cfg.algorithm, episodes.iter().map(|e| e.total_reward).collect());
    let checkpoint = Checkpoint {
        format: CHECKPOINT_FORMAT,
        scenario: scenario.name.clone(),
        episodes: cfg.episodes,
        seed: cfg.seed,
        sensor: cfg.sensor.clone(),
        model: policy.record(),
    };
    Ok(TrainOutput { checkpoint, curve, episodes })
}
