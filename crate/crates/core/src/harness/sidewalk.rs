//! The sidewalk world wrapped as a learning environment: every step senses,
//! assesses the free path and featurizes the result.

use super::{mix, EnvStep, Environment};
use crate::agents::state::SidewalkObs;
use crate::agents::{DiscreteState, FeatureVector};
use crate::freepath::{self, FreePathAssessment, DEFAULT_CORRIDOR_HALFWIDTH};
use crate::scenario::{build_world, ScenarioConfig, ScenarioError};
use crate::sensing::{scan, DetectionRule, DetectionTracker, RangeScan, SensorConfig};
use crate::world::{Action, ObstacleKind, SidewalkWorld, DEFAULT_DT};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct SidewalkEnv {
    scenario: ScenarioConfig,
    pub sensor: SensorConfig,
    pub rule: DetectionRule,
    pub dt: f64,
    world: SidewalkWorld,
    sense_rng: ChaCha8Rng,
    tracker: DetectionTracker,
    last_scan: RangeScan,
    assessment: FreePathAssessment,
}

impl SidewalkEnv {
    pub fn new(scenario: ScenarioConfig, sensor: SensorConfig) -> Result<Self, ScenarioError> {
        let world = build_world(&scenario)?;
        let mut env = Self {
            last_scan: RangeScan::empty(&sensor, 0),
            assessment: freepath::assess_clusters(vec![], 0.0, DEFAULT_CORRIDOR_HALFWIDTH),
            scenario,
            sensor,
            rule: DetectionRule::default(),
            dt: DEFAULT_DT,
            world,
            sense_rng: ChaCha8Rng::seed_from_u64(0),
            tracker: DetectionTracker::default(),
        };
        let seed = env.scenario.seed;
        env.start(seed);
        Ok(env)
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }

    pub fn world(&self) -> &SidewalkWorld {
        &self.world
    }

    pub fn last_scan(&self) -> &RangeScan {
        &self.last_scan
    }

    /// Latest assessment, with cluster labels taken from ground truth.
    pub fn assessment(&self) -> &FreePathAssessment {
        &self.assessment
    }

    /// Detection outcome so far for every kind present in the world.
    pub fn detections(&self) -> BTreeMap<ObstacleKind, bool> {
        self.tracker.by_kind(&self.world)
    }

    /// Disables or sets the idle budget of the current episode.
    pub fn set_idle_budget(&mut self, budget: Option<u32>) {
        self.world.idle_budget = budget;
    }

    fn start(&mut self, seed: u64) -> SidewalkObs {
        let scenario = self.scenario.with_seed(seed);
        // The scenario validated at construction; reseeding only moves
        // jittered obstacles, which build_world keeps inside the bounds.
        self.world = build_world(&scenario).expect("reseeded scenario stays valid");
        self.sense_rng = ChaCha8Rng::seed_from_u64(mix(seed, 0x5e45));
        self.tracker = DetectionTracker::new(self.rule);
        self.observe()
    }

    fn observe(&mut self) -> SidewalkObs {
        self.last_scan = scan(&self.world, &self.sensor, &mut self.sense_rng);
        self.tracker.observe(&self.last_scan);
        let heading = 0.0;
        let mut a = freepath::assess(&self.last_scan, heading, DEFAULT_CORRIDOR_HALFWIDTH);
        freepath::label_from_ground_truth(&mut a, &self.world);
        self.assessment = a;
        let walker = &self.world.walker;
        SidewalkObs {
            state: DiscreteState::from_assessment(&self.assessment, walker, self.world.width),
            features: FeatureVector::build(
                &self.last_scan,
                &self.assessment,
                walker,
                self.world.width,
                self.world.stall_pressure(),
            ),
        }
    }
}

impl Environment for SidewalkEnv {
    type Obs = SidewalkObs;

    fn reset(&mut self, seed: u64) -> SidewalkObs {
        self.start(seed)
    }

    fn step(&mut self, action: Action) -> EnvStep<SidewalkObs> {
        let out = self.world.step(action, self.dt).expect("episode loop stops at terminal steps");
        let obs = self.observe();
        EnvStep {
            obs,
            reward: f64::from(out.reward),
            terminal: out.terminal,
            collided: out.collided,
            reached_goal: out.reached_goal,
            stalled: out.stalled,
        }
    }
}
