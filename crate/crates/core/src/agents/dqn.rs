//! Deep Q-network: an MLP value function trained from an experience replay
//! buffer against a periodically synced target network.

use super::mlp::{td_loss_and_grad, Adam, Mlp, Sample};
use super::{ActionValues, AgentRng, HasFeatures, Learner, Transition};
use crate::world::Action;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqnConfig {
    pub inputs: usize,
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub learning_rate: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub train_interval: u64,
    pub target_sync: u64,
    pub seed: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            inputs: super::FEATURE_LEN,
            hidden: vec![64, 64],
            gamma: 0.99,
            learning_rate: 1e-3,
            replay_capacity: 10_000,
            batch_size: 32,
            train_interval: 4,
            target_sync: 500,
            seed: 0,
        }
    }
}

impl DqnConfig {
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.inputs];
        s.extend(&self.hidden);
        s.push(Action::COUNT);
        s
    }
}

/// Fixed-capacity FIFO ring.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: Vec<T>,
    next: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, items: Vec::with_capacity(capacity.min(4096)), next: 0 }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// Uniform draw with replacement.
    pub fn sample<'a, R: Rng + ?Sized>(&'a self, n: usize, rng: &mut R) -> Vec<&'a T> {
        (0..n).map(|_| &self.items[rng.random_range(0..self.items.len())]).collect()
    }
}

/// The persistent part of a [`DqnModel`]; replay and sampling state are not
/// saved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqnRecord {
    pub config: DqnConfig,
    pub network: Mlp,
    pub target_network: Mlp,
    pub steps: u64,
}

#[derive(Debug, Clone)]
pub struct DqnModel {
    pub config: DqnConfig,
    pub network: Mlp,
    pub target_network: Mlp,
    pub replay: ReplayBuffer<Transition<Vec<f64>>>,
    pub steps: u64,
    /// Gradient steps taken so far.
    pub updates: u64,
    optimizer: Adam,
    rng: AgentRng,
}

impl DqnModel {
    pub fn new(config: DqnConfig) -> Self {
        let mut rng = AgentRng::seed_from_u64(config.seed);
        let network = Mlp::new(&config.layer_sizes(), &mut rng);
        Self::assemble(config, network.clone(), network, 0, rng)
    }

    fn assemble(config: DqnConfig, network: Mlp, target: Mlp, steps: u64, rng: AgentRng) -> Self {
        Self {
            optimizer: Adam::new(config.learning_rate, network.param_count()),
            replay: ReplayBuffer::new(config.replay_capacity),
            config,
            network,
            target_network: target,
            steps,
            updates: 0,
            rng,
        }
    }

    pub fn record(&self) -> DqnRecord {
        DqnRecord {
            config: self.config.clone(),
            network: self.network.clone(),
            target_network: self.target_network.clone(),
            steps: self.steps,
        }
    }

    pub fn from_record(r: DqnRecord) -> Self {
        let rng = AgentRng::seed_from_u64(r.config.seed ^ r.steps);
        Self::assemble(r.config, r.network, r.target_network, r.steps, rng)
    }

    pub fn q_values(&self, features: &[f64]) -> ActionValues {
        let out = self.network.forward(features);
        let mut q = [0.0; Action::COUNT];
        q.copy_from_slice(&out);
        q
    }

    /// Stores the transition, trains every `train_interval` steps once the
    /// replay holds a full minibatch, and syncs the target network every
    /// `target_sync` steps.
    pub fn dqn_step(&mut self, tr: Transition<Vec<f64>>) {
        self.replay.push(tr);
        self.steps += 1;
        if self.steps % self.config.train_interval == 0 && self.replay.len() >= self.config.batch_size {
            self.train_minibatch();
        }
        if self.steps % self.config.target_sync == 0 {
            self.target_network = self.network.clone();
        }
    }

    fn train_minibatch(&mut self) {
        let batch = self.replay.sample(self.config.batch_size, &mut self.rng);
        let gamma = self.config.gamma;
        let samples: Vec<Sample> = batch
            .iter()
            .map(|t| {
                let bootstrap = if t.terminal {
                    0.0
                } else {
                    let q = self.target_network.forward(&t.next_state);
                    q.into_iter().fold(f64::NEG_INFINITY, f64::max)
                };
                Sample { input: &t.state, action: t.action.index(), target: t.reward + gamma * bootstrap }
            })
            .collect();
        let (_, grads) = td_loss_and_grad(&self.network, &samples);
        self.optimizer.step(&mut self.network, &grads);
        self.updates += 1;
    }
}

impl<O: HasFeatures> Learner<O> for DqnModel {
    fn action_values(&self, obs: &O) -> ActionValues {
        self.q_values(obs.features())
    }

    fn learn(&mut self, tr: &Transition<O>, _next_action: Option<Action>) {
        self.dqn_step(Transition {
            state: tr.state.features().to_vec(),
            action: tr.action,
            reward: tr.reward,
            next_state: tr.next_state.features().to_vec(),
            terminal: tr.terminal,
        });
    }
}
