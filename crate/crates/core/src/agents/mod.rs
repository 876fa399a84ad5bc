//! Learners for the obstacle-avoidance task: tabular Q-learning and SARSA,
//! a DQN with a small multilayer perceptron, and an optional REINFORCE
//! policy. All of them plug into the training loop through [`Learner`].

pub mod dqn;
pub mod mlp;
pub mod policy;
pub mod reinforce;
pub mod state;
pub mod tabular;

use crate::world::Action;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub use dqn::{DqnConfig, DqnModel, ReplayBuffer};
pub use policy::{argmax, select_action, EpsilonSchedule};
pub use reinforce::Reinforce;
pub use state::{DiscreteState, FeatureVector, FEATURE_LEN};
pub use tabular::{q_update, sarsa_update, QTable, TabularAgent, TdRule};

/// Random stream used for action selection and minibatch sampling.
pub type AgentRng = ChaCha8Rng;

pub type ActionValues = [f64; Action::COUNT];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition<O> {
    pub state: O,
    pub action: Action,
    pub reward: f64,
    pub next_state: O,
    pub terminal: bool,
}

/// Observations usable as a tabular key.
pub trait HasKey<K> {
    fn key(&self) -> K;
}

/// Observations usable as network input.
pub trait HasFeatures {
    fn features(&self) -> &[f64];
}

impl HasKey<usize> for usize {
    fn key(&self) -> usize {
        *self
    }
}

impl HasFeatures for Vec<f64> {
    fn features(&self) -> &[f64] {
        self
    }
}

/// A value-based (or policy-based) learner over observations of type `O`.
pub trait Learner<O> {
    fn action_values(&self, obs: &O) -> ActionValues;

    /// Whether `learn` needs the next action the behavior policy takes.
    fn on_policy(&self) -> bool {
        false
    }

    /// Behavior policy. Value learners act ε-greedily on their action values.
    fn choose(&mut self, obs: &O, epsilon: f64, rng: &mut AgentRng) -> Action {
        select_action(&self.action_values(obs), epsilon, rng)
    }

    /// Greedy action, used for evaluation.
    fn greedy(&self, obs: &O) -> Action {
        argmax(&self.action_values(obs))
    }

    fn learn(&mut self, tr: &Transition<O>, next_action: Option<Action>);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    QLearning,
    Sarsa,
    Dqn,
    Reinforce,
}

impl Algorithm {
    /// The three learners of the comparison, in ascending expected score.
    pub const COMPARED: [Algorithm; 3] = [Algorithm::QLearning, Algorithm::Sarsa, Algorithm::Dqn];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::QLearning => "qlearning",
            Algorithm::Sarsa => "sarsa",
            Algorithm::Dqn => "dqn",
            Algorithm::Reinforce => "reinforce",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unknown algorithm {0:?} (expected qlearning, sarsa, dqn or reinforce)")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qlearning" | "q-learning" | "q" => Ok(Algorithm::QLearning),
            "sarsa" => Ok(Algorithm::Sarsa),
            "dqn" => Ok(Algorithm::Dqn),
            "reinforce" => Ok(Algorithm::Reinforce),
            _ => Err(UnknownAlgorithm(s.to_string())),
        }
    }
}
