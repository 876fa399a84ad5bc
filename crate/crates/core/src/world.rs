//! The sidewalk environment: a straight corridor populated with static and
//! moving obstacles, a walker that takes one of five actions per tick, and
//! the ±1 reward emitted after every step.

use crate::geometry::{Footprint, Rect, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Default time step in seconds. At 120 cm/s a forward step covers 0.6 m.
pub const DEFAULT_DT: f64 = 0.5;
/// Lateral displacement of a `left`/`right` sidestep, meters. A sidestep is
/// taken while walking, so it also covers one forward stride.
pub const LANE_UNIT: f64 = 0.5;
/// Radius of the walker's body disc, meters.
pub const WALKER_RADIUS: f64 = 0.25;
/// Comfortable adult walking band, cm/s.
pub const WALKING_SPEED_BAND: (f64, f64) = (100.0, 150.0);
/// Speed limit for moving obstacles, cm/s.
pub const MAX_OBSTACLE_SPEED: f64 = 300.0;

/// Largest heading change of a random-walk obstacle per tick, radians.
pub const RANDOM_WALK_TURN: f64 = 0.15;

/// Id reported when the walker steps off the left edge of the sidewalk.
pub const CURB_LEFT_ID: &str = "curb-left";
/// Id reported when the walker steps off the right edge of the sidewalk.
pub const CURB_RIGHT_ID: &str = "curb-right";

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("step called after the episode reached a terminal state")]
    StepAfterTerminal,
    #[error("time step must be positive, got {0}")]
    InvalidDt(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObstacleId(pub String);

impl ObstacleId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObstacleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    Pothole,
    ConstructionCone,
    FireHydrant,
    ElectricScooter,
    ElectricPole,
    Dumpster,
    Tree,
    Fence,
    Curb,
    Puddle,
    Bollard,
    Person,
    PersonWithBike,
    PersonWithPet,
}

impl ObstacleKind {
    pub const ALL: [ObstacleKind; 14] = [
        ObstacleKind::Pothole,
        ObstacleKind::ConstructionCone,
        ObstacleKind::FireHydrant,
        ObstacleKind::ElectricScooter,
        ObstacleKind::ElectricPole,
        ObstacleKind::Dumpster,
        ObstacleKind::Tree,
        ObstacleKind::Fence,
        ObstacleKind::Curb,
        ObstacleKind::Puddle,
        ObstacleKind::Bollard,
        ObstacleKind::Person,
        ObstacleKind::PersonWithBike,
        ObstacleKind::PersonWithPet,
    ];

    /// The seven kinds of the simulated detection table, in table order.
    pub const DETECTION_TABLE: [ObstacleKind; 7] = [
        ObstacleKind::Pothole,
        ObstacleKind::ConstructionCone,
        ObstacleKind::FireHydrant,
        ObstacleKind::ElectricScooter,
        ObstacleKind::ElectricPole,
        ObstacleKind::Dumpster,
        ObstacleKind::Tree,
    ];

    pub fn height_class(self) -> HeightClass {
        match self {
            ObstacleKind::Pothole | ObstacleKind::Puddle | ObstacleKind::Curb => {
                HeightClass::GroundLevel
            }
            _ => HeightClass::AboveGround,
        }
    }

    /// snake_case identifier, as used in files.
    pub fn as_str(self) -> &'static str {
        match self {
            ObstacleKind::Pothole => "pothole",
            ObstacleKind::ConstructionCone => "construction_cone",
            ObstacleKind::FireHydrant => "fire_hydrant",
            ObstacleKind::ElectricScooter => "electric_scooter",
            ObstacleKind::ElectricPole => "electric_pole",
            ObstacleKind::Dumpster => "dumpster",
            ObstacleKind::Tree => "tree",
            ObstacleKind::Fence => "fence",
            ObstacleKind::Curb => "curb",
            ObstacleKind::Puddle => "puddle",
            ObstacleKind::Bollard => "bollard",
            ObstacleKind::Person => "person",
            ObstacleKind::PersonWithBike => "person_with_bike",
            ObstacleKind::PersonWithPet => "person_with_pet",
        }
    }

    /// Spoken form, e.g. "fire hydrant".
    pub fn display_name(self) -> String {
        self.as_str().replace('_', " ")
    }

    pub fn parse(s: &str) -> Option<ObstacleKind> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        ObstacleKind::ALL.into_iter().find(|k| k.as_str() == norm)
    }
}

impl fmt::Display for ObstacleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeightClass {
    GroundLevel,
    AboveGround,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionPolicy {
    #[default]
    Stationary,
    LinearBounce,
    RandomWalk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub id: ObstacleId,
    pub kind: ObstacleKind,
    pub footprint: Footprint,
    pub height_class: HeightClass,
    /// cm/s; zero for static obstacles.
    pub velocity: Vec2,
    pub motion: MotionPolicy,
}

impl Obstacle {
    pub fn is_dynamic(&self) -> bool {
        self.motion != MotionPolicy::Stationary
    }

    /// Whether the walker, centered at `p`, collides with this obstacle.
    /// Ground hazards need the walker's center inside them; everything else
    /// collides on body overlap.
    pub fn collides_with_walker(&self, p: Vec2) -> bool {
        match self.height_class {
            HeightClass::GroundLevel => self.footprint.contains(p),
            HeightClass::AboveGround => self.footprint.overlaps_disc(p, WALKER_RADIUS),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Stop,
    Left,
    Forward,
    Right,
    Backward,
}

impl Action {
    /// Fixed order, also used to break argmax ties.
    pub const ALL: [Action; 5] =
        [Action::Stop, Action::Left, Action::Forward, Action::Right, Action::Backward];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Stop => "stop",
            Action::Left => "left",
            Action::Forward => "forward",
            Action::Right => "right",
            Action::Backward => "backward",
        }
    }

    pub fn parse(s: &str) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.as_str() == s.trim().to_ascii_lowercase())
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkerState {
    pub position: Vec2,
    /// Radians; zero faces down the sidewalk (+x).
    pub heading: f64,
    /// cm/s.
    pub speed: f64,
    pub alive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub reward: i32,
    pub collided: bool,
    pub reached_goal: bool,
    /// The walk used up its idle budget.
    pub stalled: bool,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct SidewalkWorld {
    pub length: f64,
    pub width: f64,
    /// The walker's center must stay strictly inside
    /// `(curb_margin, width - curb_margin)` laterally.
    pub curb_margin: f64,
    /// Sorted by id.
    pub obstacles: Vec<Obstacle>,
    pub walker: WalkerState,
    pub tick: u64,
    pub rng_seed: u64,
    /// Total ticks without new forward progress the walk may spend before it
    /// ends; `None` disables.
    pub idle_budget: Option<u32>,
    rng: ChaCha8Rng,
    best_x: f64,
    idle_ticks: u32,
    terminal: bool,
}

impl SidewalkWorld {
    pub fn new(
        length: f64,
        width: f64,
        curb_margin: f64,
        mut obstacles: Vec<Obstacle>,
        walker: WalkerState,
        rng_seed: u64,
        idle_budget: Option<u32>,
    ) -> Self {
        obstacles.sort_by(|a, b| a.id.cmp(&b.id));
        Self {
            length,
            width,
            curb_margin,
            obstacles,
            best_x: walker.position.x,
            walker,
            tick: 0,
            rng_seed,
            idle_budget,
            rng: ChaCha8Rng::seed_from_u64(rng_seed ^ 0x5eed_0f_d1ce),
            idle_ticks: 0,
            terminal: false,
        }
    }

    /// Fraction of the idle budget spent so far; zero when the budget is
    /// disabled.
    pub fn stall_pressure(&self) -> f64 {
        match self.idle_budget {
            Some(limit) if limit > 0 => (f64::from(self.idle_ticks) / f64::from(limit)).min(1.0),
            _ => 0.0,
        }
    }

    pub fn bounds(&self) -> Rect {
        Rect { min: Vec2::new(0.0, 0.0), max: Vec2::new(self.length, self.width) }
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn goal_distance(&self) -> f64 {
        (self.length - self.walker.position.x).max(0.0)
    }

    pub fn obstacle(&self, id: &ObstacleId) -> Option<&Obstacle> {
        self.obstacles.iter().find(|o| &o.id == id)
    }

    /// First obstacle (by id order) the walker currently collides with,
    /// including the synthetic curbs bounding the sidewalk.
    pub fn collision_check(&self) -> Option<ObstacleId> {
        let p = self.walker.position;
        let mut hits: Vec<ObstacleId> = self
            .obstacles
            .iter()
            .filter(|o| o.collides_with_walker(p))
            .map(|o| o.id.clone())
            .collect();
        if p.y <= self.curb_margin {
            hits.push(ObstacleId::new(CURB_LEFT_ID));
        }
        if p.y >= self.width - self.curb_margin {
            hits.push(ObstacleId::new(CURB_RIGHT_ID));
        }
        hits.into_iter().min()
    }

    /// Advances the world by one tick under `action`.
    pub fn step(&mut self, action: Action, dt: f64) -> Result<StepOutcome, WorldError> {
        if self.terminal || !self.walker.alive {
            return Err(WorldError::StepAfterTerminal);
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(WorldError::InvalidDt(dt));
        }

        let stride = self.walker.speed / 100.0 * dt;
        let heading = Vec2::from_polar(1.0, self.walker.heading);
        // y grows to the walker's right when facing +x.
        let lateral = Vec2::new(-heading.y, heading.x);
        let delta = match action {
            Action::Stop => Vec2::default(),
            Action::Forward => heading * stride,
            Action::Backward => heading * -stride,
            Action::Left => heading * stride + lateral * -LANE_UNIT,
            Action::Right => heading * stride + lateral * LANE_UNIT,
        };
        let target = self.walker.position + delta;
        self.walker.position = self.bounds().clamp(target);

        self.advance_obstacles(dt);

        let collided = self.collision_check().is_some();
        let reached_goal = !collided && target.x >= self.length;

        let x = self.walker.position.x;
        if x > self.best_x + 1e-9 {
            self.best_x = x;
        } else {
            self.idle_ticks += 1;
        }
        let stalled = !collided
            && !reached_goal
            && self.idle_budget.is_some_and(|budget| self.idle_ticks >= budget);

        self.tick += 1;
        self.terminal = collided || reached_goal || stalled;
        if collided {
            self.walker.alive = false;
        }
        Ok(StepOutcome {
            reward: if collided { -1 } else { 1 },
            collided,
            reached_goal,
            stalled,
            terminal: self.terminal,
        })
    }

    fn advance_obstacles(&mut self, dt: f64) {
        let (length, width) = (self.length, self.width);
        for obstacle in self.obstacles.iter_mut().filter(|o| o.is_dynamic()) {
            if obstacle.motion == MotionPolicy::RandomWalk {
                let turn: f64 = self.rng.random_range(-RANDOM_WALK_TURN..RANDOM_WALK_TURN);
                let (s, c) = turn.sin_cos();
                let v = obstacle.velocity;
                obstacle.velocity = Vec2::new(v.x * c - v.y * s, v.x * s + v.y * c);
            }
            let center = obstacle.footprint.centroid();
            let mut next = center + obstacle.velocity * (dt / 100.0);
            let mut v = obstacle.velocity;
            if next.x < 0.0 {
                next.x = -next.x;
                v.x = -v.x;
            } else if next.x > length {
                next.x = 2.0 * length - next.x;
                v.x = -v.x;
            }
            if next.y < 0.0 {
                next.y = -next.y;
                v.y = -v.y;
            } else if next.y > width {
                next.y = 2.0 * width - next.y;
                v.y = -v.y;
            }
            obstacle.velocity = v;
            obstacle.footprint.translate(next - center);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walker_at(x: f64, y: f64) -> WalkerState {
        WalkerState { position: Vec2::new(x, y), heading: 0.0, speed: 120.0, alive: true }
    }

    fn disc(id: &str, kind: ObstacleKind, x: f64, y: f64, r: f64) -> Obstacle {
        Obstacle {
            id: ObstacleId::new(id),
            kind,
            footprint: Footprint::Disc { center: Vec2::new(x, y), radius: r },
            height_class: kind.height_class(),
            velocity: Vec2::default(),
            motion: MotionPolicy::Stationary,
        }
    }

    fn world(obstacles: Vec<Obstacle>, walker: WalkerState) -> SidewalkWorld {
        SidewalkWorld::new(20.0, 3.0, 0.25, obstacles, walker, 1, None)
    }

    #[test]
    fn forward_in_free_space_pays_plus_one() {
        let mut w = world(vec![], walker_at(1.0, 1.5));
        let out = w.step(Action::Forward, DEFAULT_DT).unwrap();
        assert_eq!(out.reward, 1);
        assert!(!out.terminal);
        assert!((w.walker.position.x - 1.6).abs() < 1e-12);
    }

    #[test]
    fn forward_into_cone_is_a_terminal_collision() {
        let cone = disc("a", ObstacleKind::ConstructionCone, 1.7, 1.5, 0.18);
        let mut w = world(vec![cone], walker_at(1.0, 1.5));
        let out = w.step(Action::Forward, DEFAULT_DT).unwrap();
        assert_eq!((out.reward, out.collided, out.terminal), (-1, true, true));
        assert_eq!(w.step(Action::Stop, DEFAULT_DT), Err(WorldError::StepAfterTerminal));
    }

    #[test]
    fn stop_while_scooter_arrives_collides() {
        let mut scooter = disc("s", ObstacleKind::ElectricScooter, 3.0, 1.5, 0.3);
        scooter.velocity = Vec2::new(-250.0, 0.0);
        scooter.motion = MotionPolicy::LinearBounce;
        let mut w = world(vec![scooter], walker_at(1.0, 1.5));
        let mut outcomes = Vec::new();
        for _ in 0..4 {
            let o = w.step(Action::Stop, DEFAULT_DT).unwrap();
            outcomes.push(o);
            if o.terminal {
                break;
            }
        }
        let last = outcomes.last().unwrap();
        assert!(last.collided);
        assert_eq!(last.reward, -1);
        assert!(outcomes[..outcomes.len() - 1].iter().all(|o| o.reward == 1));
    }

    #[test]
    fn ground_hazards_need_center_containment() {
        let pothole = disc("p", ObstacleKind::Pothole, 2.0, 1.5, 0.3);
        let w = world(vec![pothole.clone()], walker_at(2.0, 2.0));
        // body overlaps the rim, center does not
        assert_eq!(w.collision_check(), None);
        let w = world(vec![pothole], walker_at(2.0, 1.7));
        assert_eq!(w.collision_check(), Some(ObstacleId::new("p")));
    }

    #[test]
    fn collision_check_reports_smallest_id() {
        let a = disc("b-tree", ObstacleKind::Tree, 2.0, 1.5, 0.5);
        let b = disc("a-pole", ObstacleKind::ElectricPole, 2.2, 1.5, 0.5);
        let w = world(vec![a, b], walker_at(2.1, 1.5));
        assert_eq!(w.collision_check(), Some(ObstacleId::new("a-pole")));
        let w = world(vec![], walker_at(2.1, 1.5));
        assert_eq!(w.collision_check(), None);
    }

    #[test]
    fn stepping_off_the_sidewalk_hits_the_curb() {
        let mut w = world(vec![], walker_at(1.0, 0.5));
        let out = w.step(Action::Left, DEFAULT_DT).unwrap();
        assert!(out.collided && out.terminal);
        assert_eq!(w.collision_check(), Some(ObstacleId::new(CURB_LEFT_ID)));
        assert!(w.bounds().contains(w.walker.position));

        let mut w = world(vec![], walker_at(1.0, 2.5));
        assert!(w.step(Action::Right, DEFAULT_DT).unwrap().collided);
    }

    #[test]
    fn sidesteps_keep_walking() {
        let mut w = world(vec![], walker_at(1.0, 1.5));
        w.step(Action::Left, DEFAULT_DT).unwrap();
        assert!((w.walker.position.x - 1.6).abs() < 1e-12);
        assert!((w.walker.position.y - 1.0).abs() < 1e-12);
        w.step(Action::Right, DEFAULT_DT).unwrap();
        w.step(Action::Right, DEFAULT_DT).unwrap();
        assert!((w.walker.position.x - 2.8).abs() < 1e-12);
        assert!((w.walker.position.y - 2.0).abs() < 1e-12);
        w.step(Action::Backward, DEFAULT_DT).unwrap();
        assert!((w.walker.position.x - 2.2).abs() < 1e-12);
    }

    #[test]
    fn crossing_far_end_reaches_goal() {
        let mut w = world(vec![], walker_at(19.7, 1.5));
        let out = w.step(Action::Forward, DEFAULT_DT).unwrap();
        assert!(out.reached_goal && out.terminal && !out.collided);
        assert_eq!(out.reward, 1);
    }

    #[test]
    fn idle_budget_ends_dawdling_walks() {
        let mut w = SidewalkWorld::new(20.0, 3.0, 0.25, vec![], walker_at(1.0, 1.5), 1, Some(3));
        assert!(!w.step(Action::Stop, DEFAULT_DT).unwrap().terminal);
        // progress does not refill the budget
        assert!(!w.step(Action::Forward, DEFAULT_DT).unwrap().terminal);
        assert!((w.stall_pressure() - 1.0 / 3.0).abs() < 1e-12);
        assert!(!w.step(Action::Backward, DEFAULT_DT).unwrap().terminal);
        // returning to the previous best x is not new progress
        let out = w.step(Action::Forward, DEFAULT_DT).unwrap();
        assert!(out.stalled && out.terminal && !out.collided);
        assert_eq!(out.reward, 1);
    }

    #[test]
    fn backward_at_start_is_clamped() {
        let mut w = world(vec![], walker_at(0.1, 1.5));
        let out = w.step(Action::Backward, DEFAULT_DT).unwrap();
        assert_eq!(out.reward, 1);
        assert_eq!(w.walker.position.x, 0.0);
    }

    #[test]
    fn rejects_non_positive_dt() {
        let mut w = world(vec![], walker_at(1.0, 1.5));
        assert_eq!(w.step(Action::Stop, 0.0), Err(WorldError::InvalidDt(0.0)));
    }

    #[test]
    fn linear_bounce_preserves_speed() {
        let mut o = disc("m", ObstacleKind::PersonWithBike, 19.5, 2.5, 0.3);
        o.velocity = Vec2::new(230.0, 170.0);
        o.motion = MotionPolicy::LinearBounce;
        let speed = o.velocity.norm();
        let mut w = world(vec![o], walker_at(1.0, 1.5));
        for _ in 0..200 {
            w.advance_obstacles(0.25);
            let v = w.obstacles[0].velocity.norm();
            assert!(((v - speed) / speed).abs() < 1e-9);
            assert!(w.bounds().contains(w.obstacles[0].footprint.centroid()));
        }
    }

    #[test]
    fn action_space_has_five_members() {
        assert_eq!(Action::ALL.len(), 5);
        for (i, a) in Action::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(Action::parse(a.as_str()), Some(*a));
        }
    }

    #[test]
    fn ground_kinds() {
        assert_eq!(ObstacleKind::Pothole.height_class(), HeightClass::GroundLevel);
        assert_eq!(ObstacleKind::Puddle.height_class(), HeightClass::GroundLevel);
        assert_eq!(ObstacleKind::Dumpster.height_class(), HeightClass::AboveGround);
        assert_eq!(ObstacleKind::parse("Fire Hydrant"), Some(ObstacleKind::FireHydrant));
    }
}
