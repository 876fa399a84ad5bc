//! Sidewalk navigation simulator with reinforcement-learning obstacle
//! avoidance agents and a point-cloud free-path assessor.

pub mod agents;
pub mod checkpoint;
pub mod freepath;
pub mod geometry;
pub mod harness;
pub mod scenario;
pub mod sensing;
pub mod world;

pub use geometry::{Footprint, Vec2};
pub use world::{Action, ObstacleId, ObstacleKind, SidewalkWorld, StepOutcome};
