//! Monte-Carlo policy gradient with a linear softmax policy. Provided as an
//! alternative learner; the comparison uses the value-based ones.

use super::{ActionValues, AgentRng, HasFeatures, Learner, Transition};
use crate::world::Action;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reinforce {
    pub inputs: usize,
    /// `Action::COUNT × (inputs + 1)`, the last column is the bias.
    pub theta: Vec<f64>,
    pub gamma: f64,
    pub learning_rate: f64,
    #[serde(skip)]
    episode: Vec<(Vec<f64>, Action, f64)>,
}

impl Reinforce {
    pub fn new(inputs: usize, gamma: f64, learning_rate: f64) -> Self {
        Self {
            inputs,
            theta: vec![0.0; Action::COUNT * (inputs + 1)],
            gamma,
            learning_rate,
            episode: Vec::new(),
        }
    }

    fn logits(&self, x: &[f64]) -> ActionValues {
        let mut out = [0.0; Action::COUNT];
        let w = self.inputs + 1;
        for (a, o) in out.iter_mut().enumerate() {
            let row = &self.theta[a * w..(a + 1) * w];
            *o = row[self.inputs] + row.iter().zip(x).map(|(t, v)| t * v).sum::<f64>();
        }
        out
    }

    pub fn probabilities(&self, x: &[f64]) -> ActionValues {
        let z = self.logits(x);
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p = z.map(|v| (v - m).exp());
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
        p
    }

    fn finish_episode(&mut self) {
        let w = self.inputs + 1;
        let mut g = 0.0;
        let steps = std::mem::take(&mut self.episode);
        for (x, a, r) in steps.iter().rev() {
            g = r + self.gamma * g;
            let p = self.probabilities(x);
            for (b, pb) in p.iter().enumerate() {
                let coeff = self.learning_rate * g * (f64::from(u8::from(b == a.index())) - pb);
                let row = &mut self.theta[b * w..(b + 1) * w];
                row.iter_mut().zip(x.iter().chain([&1.0])).for_each(|(t, v)| *t += coeff * v);
            }
        }
    }
}

impl<O: HasFeatures> Learner<O> for Reinforce {
    fn action_values(&self, obs: &O) -> ActionValues {
        self.logits(obs.features())
    }

    /// Samples from the softmax policy; `epsilon` is ignored.
    fn choose(&mut self, obs: &O, _epsilon: f64, rng: &mut AgentRng) -> Action {
        let p = self.probabilities(obs.features());
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, pi) in p.iter().enumerate() {
            acc += pi;
            if u < acc {
                return Action::ALL[i];
            }
        }
        Action::Backward
    }

    fn learn(&mut self, tr: &Transition<O>, _next_action: Option<Action>) {
        self.episode.push((tr.state.features().to_vec(), tr.action, tr.reward));
        if tr.terminal {
            self.finish_episode();
        }
    }
}
