//! Small enumerable MDPs sharing the five-action interface. They exercise
//! the learners against exact dynamic-programming answers.

use super::{EnvStep, Environment};
use crate::world::Action;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One possible result of taking an action: probability, next state
/// (`None` ends the episode) and reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub prob: f64,
    pub next: Option<usize>,
    pub reward: f64,
}

impl Outcome {
    pub fn certain(next: Option<usize>, reward: f64) -> Self {
        Self { prob: 1.0, next, reward }
    }
}

#[derive(Debug, Clone)]
pub struct TabularMdp {
    /// `transitions[s][a]` lists the outcomes of action `a` in state `s`.
    pub transitions: Vec<[Vec<Outcome>; Action::COUNT]>,
    /// Fixed start state, or `None` for a uniformly random one.
    pub start: Option<usize>,
    state: usize,
    rng: ChaCha8Rng,
}

impl TabularMdp {
    pub fn new(transitions: Vec<[Vec<Outcome>; Action::COUNT]>, start: Option<usize>) -> Self {
        for (s, row) in transitions.iter().enumerate() {
            for outs in row {
                let total: f64 = outs.iter().map(|o| o.prob).sum();
                assert!((total - 1.0).abs() < 1e-9, "state {s}: probabilities sum to {total}");
                assert!(outs.iter().all(|o| o.next.is_none_or(|n| n < transitions.len())));
            }
        }
        Self { transitions, start, state: 0, rng: ChaCha8Rng::seed_from_u64(0) }
    }

    pub fn states(&self) -> usize {
        self.transitions.len()
    }

    /// Two states. In state 0 `forward` moves to state 1 for +1 and anything
    /// else stays put for 0. In state 1 `forward` ends the episode for +1,
    /// `backward` returns to state 0 for +1, and anything else ends it for -1.
    pub fn chain() -> Self {
        let stay0 = || vec![Outcome::certain(Some(0), 0.0)];
        let s0 = [stay0(), stay0(), vec![Outcome::certain(Some(1), 1.0)], stay0(), stay0()];
        let crash = || vec![Outcome::certain(None, -1.0)];
        let s1 = [
            crash(),
            crash(),
            vec![Outcome::certain(None, 1.0)],
            crash(),
            vec![Outcome::certain(Some(0), 1.0)],
        ];
        Self::new(vec![s0, s1], Some(0))
    }

    /// A `rows × cols` grid with +1 per surviving step. `forward` and
    /// `backward` move along the columns, `left` and `right` across rows,
    /// and `stop` stays. Walking off the side rows or into a hazard cell
    /// ends the episode with -1; stepping past the last column ends it with
    /// +1. Episodes start in a uniformly random cell.
    pub fn grid(rows: usize, cols: usize, hazards: &[(usize, usize)]) -> Self {
        let idx = |r: usize, c: usize| r * cols + c;
        let is_hazard = |r: usize, c: usize| hazards.contains(&(r, c));
        let mut transitions = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let to = |dr: isize, dc: isize| {
                    let (nr, nc) = (r as isize + dr, c as isize + dc);
                    if nr < 0 || nr >= rows as isize {
                        return vec![Outcome::certain(None, -1.0)];
                    }
                    if nc >= cols as isize {
                        return vec![Outcome::certain(None, 1.0)];
                    }
                    let (nr, nc) = (nr as usize, nc.max(0) as usize);
                    if is_hazard(nr, nc) {
                        vec![Outcome::certain(None, -1.0)]
                    } else {
                        vec![Outcome::certain(Some(idx(nr, nc)), 1.0)]
                    }
                };
                transitions.push([to(0, 0), to(-1, 0), to(0, 1), to(1, 0), to(0, -1)]);
            }
        }
        Self::new(transitions, None)
    }

    /// The standard 5 × 20 test grid.
    pub fn grid_5x20() -> Self {
        Self::grid(5, 20, &[(2, 4), (1, 9), (3, 9), (2, 14), (0, 17), (4, 17)])
    }
}

impl Environment for TabularMdp {
    type Obs = usize;

    fn reset(&mut self, seed: u64) -> usize {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.state = match self.start {
            Some(s) => s,
            None => self.rng.random_range(0..self.states()),
        };
        self.state
    }

    fn step(&mut self, action: Action) -> EnvStep<usize> {
        let outs = &self.transitions[self.state][action.index()];
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut chosen = outs[outs.len() - 1];
        for o in outs {
            acc += o.prob;
            if u < acc {
                chosen = *o;
                break;
            }
        }
        let terminal = chosen.next.is_none();
        if let Some(n) = chosen.next {
            self.state = n;
        }
        EnvStep {
            obs: self.state,
            reward: chosen.reward,
            terminal,
            collided: terminal && chosen.reward < 0.0,
            reached_goal: terminal && chosen.reward > 0.0,
            stalled: false,
        }
    }
}
