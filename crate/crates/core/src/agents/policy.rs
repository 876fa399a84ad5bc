//! ε-greedy action selection and the exploration schedule.

use super::{ActionValues, AgentRng};
use crate::world::Action;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Index of the largest value; ties go to the earliest action in
/// stop < left < forward < right < backward.
pub fn argmax(values: &ActionValues) -> Action {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    Action::ALL[best]
}

/// With probability `epsilon` a uniformly random action, else the greedy one.
/// Always consumes one uniform draw, plus one more when exploring.
pub fn select_action(values: &ActionValues, epsilon: f64, rng: &mut AgentRng) -> Action {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    let u: f64 = rng.random();
    if u < epsilon {
        Action::ALL[rng.random_range(0..Action::COUNT)]
    } else {
        argmax(values)
    }
}

/// Linear decay from `start` to `end` over `decay_episodes`, then flat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_episodes: u32,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { start: 1.0, end: 0.05, decay_episodes: 150 }
    }
}

impl EpsilonSchedule {
    pub fn constant(epsilon: f64) -> Self {
        Self { start: epsilon, end: epsilon, decay_episodes: 0 }
    }

    pub fn at(&self, episode: u32) -> f64 {
        if episode >= self.decay_episodes {
            return self.end;
        }
        let frac = episode as f64 / self.decay_episodes as f64;
        self.start + (self.end - self.start) * frac
    }
}
