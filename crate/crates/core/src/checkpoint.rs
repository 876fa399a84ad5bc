//! Versioned model checkpoints, stored as JSON. Floats are written with
//! shortest round-trip formatting, so a save/load cycle is bit-exact.

use crate::agents::dqn::DqnRecord;
use crate::agents::state::SidewalkObs;
use crate::agents::{
    ActionValues, AgentRng, Algorithm, DiscreteState, DqnModel, Learner, Reinforce, TabularAgent,
    Transition,
};
use crate::sensing::SensorConfig;
use crate::world::Action;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const CHECKPOINT_FORMAT: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint is not valid: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported checkpoint format {0} (expected {CHECKPOINT_FORMAT})")]
    UnsupportedFormat(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum ModelRecord {
    #[serde(rename = "qlearning")]
    QLearning { agent: TabularAgent<DiscreteState> },
    Sarsa { agent: TabularAgent<DiscreteState> },
    Dqn { model: DqnRecord },
    Reinforce { policy: Reinforce },
}

impl ModelRecord {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            ModelRecord::QLearning { .. } => Algorithm::QLearning,
            ModelRecord::Sarsa { .. } => Algorithm::Sarsa,
            ModelRecord::Dqn { .. } => Algorithm::Dqn,
            ModelRecord::Reinforce { .. } => Algorithm::Reinforce,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: u32,
    pub scenario: String,
    pub episodes: u32,
    pub seed: u64,
    /// Sensor the model was trained with.
    pub sensor: SensorConfig,
    pub model: ModelRecord,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        #[derive(Deserialize)]
        struct Header {
            format: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(CheckpointError::UnsupportedFormat(header.format));
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn policy(&self) -> Policy {
        match &self.model {
            ModelRecord::QLearning { agent } | ModelRecord::Sarsa { agent } => {
                Policy::Tabular(agent.clone())
            }
            ModelRecord::Dqn { model } => Policy::Dqn(Box::new(DqnModel::from_record(model.clone()))),
            ModelRecord::Reinforce { policy } => Policy::Reinforce(policy.clone()),
        }
    }
}

/// Any trained model, usable as a sidewalk learner.
#[derive(Debug, Clone)]
pub enum Policy {
    Tabular(TabularAgent<DiscreteState>),
    Dqn(Box<DqnModel>),
    Reinforce(Reinforce),
}

impl Policy {
    pub fn record(&self) -> ModelRecord {
        match self {
            Policy::Tabular(agent) => match agent.rule {
                crate::agents::TdRule::QLearning => ModelRecord::QLearning { agent: agent.clone() },
                crate::agents::TdRule::Sarsa => ModelRecord::Sarsa { agent: agent.clone() },
            },
            Policy::Dqn(m) => ModelRecord::Dqn { model: m.record() },
            Policy::Reinforce(p) => ModelRecord::Reinforce { policy: p.clone() },
        }
    }
}

impl Learner<SidewalkObs> for Policy {
    fn action_values(&self, obs: &SidewalkObs) -> ActionValues {
        match self {
            Policy::Tabular(a) => a.action_values(obs),
            Policy::Dqn(m) => m.action_values(obs),
            Policy::Reinforce(p) => p.action_values(obs),
        }
    }

    fn on_policy(&self) -> bool {
        match self {
            Policy::Tabular(a) => Learner::<SidewalkObs>::on_policy(a),
            _ => false,
        }
    }

    fn choose(&mut self, obs: &SidewalkObs, epsilon: f64, rng: &mut AgentRng) -> Action {
        match self {
            Policy::Tabular(a) => a.choose(obs, epsilon, rng),
            Policy::Dqn(m) => m.choose(obs, epsilon, rng),
            Policy::Reinforce(p) => p.choose(obs, epsilon, rng),
        }
    }

    fn learn(&mut self, tr: &Transition<SidewalkObs>, next_action: Option<Action>) {
        match self {
            Policy::Tabular(a) => a.learn(tr, next_action),
            Policy::Dqn(m) => m.learn(tr, next_action),
            Policy::Reinforce(p) => p.learn(tr, next_action),
        }
    }
}
