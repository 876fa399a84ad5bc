//! Episode loops shared by every environment and learner, plus the training,
//! evaluation and replay tooling built on them.

pub mod calibrate;
pub mod compare;
pub mod evaluate;
pub mod mdp;
pub mod replay;
pub mod sidewalk;
pub mod stats;
pub mod train;

use crate::agents::{AgentRng, Learner, Transition};
use crate::world::Action;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

pub use calibrate::{
    calibrate, detection_train_config, pooled_detection, reference_detection_pct, CalibrationConfig, CalibrationResult,
};
pub use compare::{compare, Comparison, SCORED_TAIL};
pub use evaluate::{evaluate, DetectionRow, DetectionTable, EpisodeRecord, Evaluation};
pub use sidewalk::SidewalkEnv;
pub use train::{train, LearningCurve, TrainConfig, TrainOutput, Validation};

/// Step cap per episode, about five simulated minutes.
pub const MAX_EPISODE_STEPS: u32 = 600;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep<O> {
    pub obs: O,
    pub reward: f64,
    pub terminal: bool,
    pub collided: bool,
    pub reached_goal: bool,
    pub stalled: bool,
}

pub trait Environment {
    type Obs: Clone;

    /// Starts a new episode; all randomness of the episode derives from `seed`.
    fn reset(&mut self, seed: u64) -> Self::Obs;

    /// Must not be called after a terminal step.
    fn step(&mut self, action: Action) -> EnvStep<Self::Obs>;
}

/// One step as logged by [`run_episode`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub action: Action,
    pub reward: f64,
    pub collided: bool,
    pub reached_goal: bool,
    pub stalled: bool,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub steps: u32,
    pub total_reward: f64,
    pub collided: bool,
    pub reached_goal: bool,
    pub stalled: bool,
    /// The step cap ended the episode.
    pub capped: bool,
    pub log: Vec<StepLog>,
}

/// How actions are picked during an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// ε-greedy behavior, updating the learner after every step.
    Learn { epsilon: f64 },
    /// Greedy, no updates.
    Greedy,
}

/// Runs one episode of `learner` in `env`.
///
/// On-policy learners get the next behavior action before their update;
/// the others choose it after, from the updated values.
pub fn run_episode<E, L>(
    env: &mut E,
    learner: &mut L,
    seed: u64,
    mode: Mode,
    rng: &mut AgentRng,
    max_steps: u32,
    keep_log: bool,
) -> EpisodeSummary
where
    E: Environment,
    L: Learner<E::Obs> + ?Sized,
{
    let mut summary = EpisodeSummary { seed, ..Default::default() };
    let mut obs = env.reset(seed);
    let pick = |l: &mut L, o: &E::Obs, rng: &mut AgentRng| match mode {
        Mode::Learn { epsilon } => l.choose(o, epsilon, rng),
        Mode::Greedy => l.greedy(o),
    };
    let mut action = pick(learner, &obs, rng);
    loop {
        let step = env.step(action);
        summary.steps += 1;
        summary.total_reward += step.reward;
        let capped = !step.terminal && summary.steps >= max_steps;
        let done = step.terminal || capped;
        if keep_log {
            summary.log.push(StepLog {
                action,
                reward: step.reward,
                collided: step.collided,
                reached_goal: step.reached_goal,
                stalled: step.stalled,
                terminal: step.terminal,
            });
        }
        let mut next = None;
        if let Mode::Learn { .. } = mode {
            if learner.on_policy() && !done {
                next = Some(pick(learner, &step.obs, rng));
            }
            let tr = Transition {
                state: obs,
                action,
                reward: step.reward,
                next_state: step.obs.clone(),
                terminal: done,
            };
            learner.learn(&tr, next);
        }
        if done {
            summary.collided = step.collided;
            summary.reached_goal = step.reached_goal;
            summary.stalled = step.stalled;
            summary.capped = capped;
            return summary;
        }
        obs = step.obs;
        action = match next {
            Some(a) => a,
            None => pick(learner, &obs, rng),
        };
    }
}

/// Trains `learner` for `episodes` episodes and returns their summaries.
pub fn train_learner<E, L>(
    env: &mut E,
    learner: &mut L,
    episodes: u32,
    schedule: crate::agents::EpsilonSchedule,
    seed: u64,
    max_steps: u32,
) -> Vec<EpisodeSummary>
where
    E: Environment,
    L: Learner<E::Obs> + ?Sized,
{
    train_learner_with(env, learner, episodes, schedule, seed, max_steps, |_, _, _| {})
}

/// `train_learner` with a hook run after every episode, given the episode
/// index, the environment and the learner.
pub fn train_learner_with<E, L, F>(
    env: &mut E,
    learner: &mut L,
    episodes: u32,
    schedule: crate::agents::EpsilonSchedule,
    seed: u64,
    max_steps: u32,
    mut after_episode: F,
) -> Vec<EpisodeSummary>
where
    E: Environment,
    L: Learner<E::Obs> + ?Sized,
    F: FnMut(u32, &E, &L),
{
    let mut rng = AgentRng::seed_from_u64(mix(seed, 0xac7));
    (0..episodes)
        .map(|e| {
            let mode = Mode::Learn { epsilon: schedule.at(e) };
            let summary = run_episode(env, learner, episode_seed(seed, e as u64), mode, &mut rng, max_steps, false);
            after_episode(e, env, learner);
            summary
        })
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministically combines two seeds.
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Seed of episode `index` in a run seeded with `run_seed`.
pub fn episode_seed(run_seed: u64, index: u64) -> u64 {
    mix(run_seed, index.wrapping_add(1))
}
