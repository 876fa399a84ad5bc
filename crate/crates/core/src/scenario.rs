//! Scenario files and world construction.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! format = 1
//! name = "standard"
//! length_m = 152.4
//! width_m = 3.0
//! seed = 7
//!
//! [[obstacles]]
//! kind = "construction_cone"
//! x = 12.0
//! y = 1.5
//! radius = 0.18
//! ```
//!
//! Obstacle records take either `radius` (disc) or `polygon` (vertex offsets
//! relative to `x`, `y`), plus optional `vx`, `vy` (cm/s), `motion`, `id` and
//! `jitter` (uniform placement noise in meters, drawn from `seed`).

use crate::geometry::{Footprint, Vec2};
use crate::world::{
    MotionPolicy, Obstacle, ObstacleId, ObstacleKind, SidewalkWorld, WalkerState,
    MAX_OBSTACLE_SPEED, WALKING_SPEED_BAND,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const SCENARIO_FORMAT: u32 = 1;

/// The 500 ft evaluation sidewalk with its full obstacle inventory.
pub const STANDARD_SCENARIO: &str = include_str!("../scenarios/standard.toml");
/// The same sidewalk with nothing on it.
pub const EMPTY_SCENARIO: &str = include_str!("../scenarios/empty.toml");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario: {0}")]
    Malformed(String),
    #[error("unsupported scenario format {0} (expected {SCENARIO_FORMAT})")]
    UnsupportedFormat(u32),
    #[error("obstacle {id} lies outside the sidewalk")]
    OutOfBounds { id: String },
    #[error("invalid obstacle {id}: {reason}")]
    InvalidObstacle { id: String, reason: String },
    #[error("cannot read scenario {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub kind: ObstacleKind,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polygon: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub vy: f64,
    #[serde(default)]
    pub motion: MotionPolicy,
    #[serde(default)]
    pub jitter: f64,
}

fn default_curb_margin() -> f64 {
    0.25
}

fn default_speed() -> f64 {
    120.0
}

fn default_start_x() -> f64 {
    0.5
}

fn default_idle_budget() -> u32 {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub format: u32,
    #[serde(default)]
    pub name: String,
    pub length_m: f64,
    pub width_m: f64,
    pub seed: u64,
    #[serde(default = "default_curb_margin")]
    pub curb_margin_m: f64,
    #[serde(default = "default_speed")]
    pub walker_speed_cm_s: f64,
    /// Allow walker speeds outside the comfortable walking band.
    #[serde(default)]
    pub allow_any_speed: bool,
    #[serde(default = "default_start_x")]
    pub start_x_m: f64,
    /// Defaults to the sidewalk's center line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_y_m: Option<f64>,
    /// Total ticks without new forward progress a walk may spend; 0 disables.
    #[serde(default = "default_idle_budget")]
    pub idle_budget: u32,
    #[serde(default)]
    pub obstacles: Vec<ObstacleRecord>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| ScenarioError::Malformed(e.to_string()))?;
        if cfg.format != SCENARIO_FORMAT {
            return Err(ScenarioError::UnsupportedFormat(cfg.format));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn standard() -> Self {
        Self::parse(STANDARD_SCENARIO).expect("bundled standard scenario parses")
    }

    pub fn empty() -> Self {
        Self::parse(EMPTY_SCENARIO).expect("bundled empty scenario parses")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn kinds_present(&self) -> Vec<ObstacleKind> {
        let mut kinds: Vec<ObstacleKind> = self.obstacles.iter().map(|o| o.kind).collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }
}

/// Builds the world described by `scenario`. Deterministic in the scenario
/// (including its seed).
pub fn build_world(scenario: &ScenarioConfig) -> Result<SidewalkWorld, ScenarioError> {
    let malformed = |msg: String| Err(ScenarioError::Malformed(msg));
    if !(scenario.length_m > 0.0 && scenario.length_m.is_finite()) {
        return malformed(format!("length_m must be positive, got {}", scenario.length_m));
    }
    if !(scenario.width_m > 0.0 && scenario.width_m.is_finite()) {
        return malformed(format!("width_m must be positive, got {}", scenario.width_m));
    }
    if !(scenario.curb_margin_m >= 0.0 && 2.0 * scenario.curb_margin_m < scenario.width_m) {
        return malformed(format!("curb_margin_m {} does not fit the width", scenario.curb_margin_m));
    }
    let speed = scenario.walker_speed_cm_s;
    let (lo, hi) = WALKING_SPEED_BAND;
    if !(speed > 0.0 && (scenario.allow_any_speed || (lo..=hi).contains(&speed))) {
        return malformed(format!("walker speed {speed} cm/s outside [{lo}, {hi}]"));
    }

    let bounds = crate::geometry::Rect {
        min: Vec2::new(0.0, 0.0),
        max: Vec2::new(scenario.length_m, scenario.width_m),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut obstacles = Vec::with_capacity(scenario.obstacles.len());
    for (index, rec) in scenario.obstacles.iter().enumerate() {
        let id = rec.id.clone().unwrap_or_else(|| format!("{index:03}-{}", rec.kind));
        let invalid = |reason: &str| ScenarioError::InvalidObstacle {
            id: id.clone(),
            reason: reason.to_string(),
        };
        // Always draw, so adding jitter to one record leaves the others alone.
        let (jx, jy): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if !(rec.jitter >= 0.0 && rec.jitter.is_finite()) {
            return Err(invalid("jitter must be non-negative"));
        }
        let anchor = Vec2::new(rec.x + jx * rec.jitter, rec.y + jy * rec.jitter);
        let footprint = match (rec.radius, &rec.polygon) {
            (Some(radius), None) => Footprint::Disc { center: anchor, radius },
            (None, Some(poly)) => Footprint::Polygon {
                vertices: poly.iter().map(|[dx, dy]| anchor + Vec2::new(*dx, *dy)).collect(),
            },
            _ => return Err(invalid("exactly one of radius or polygon is required")),
        };
        footprint.validate().map_err(|r| invalid(&r))?;
        if !footprint.intersects_rect(&bounds) {
            return Err(ScenarioError::OutOfBounds { id });
        }
        let velocity = Vec2::new(rec.vx, rec.vy);
        match rec.motion {
            MotionPolicy::Stationary if velocity.norm() > 0.0 => {
                return Err(invalid("stationary obstacle with non-zero velocity"));
            }
            MotionPolicy::LinearBounce | MotionPolicy::RandomWalk if velocity.norm() == 0.0 => {
                return Err(invalid("moving obstacle needs a velocity"));
            }
            _ => {}
        }
        if velocity.norm() > MAX_OBSTACLE_SPEED {
            return Err(invalid("speed above 300 cm/s"));
        }
        obstacles.push(Obstacle {
            id: ObstacleId(id),
            kind: rec.kind,
            footprint,
            height_class: rec.kind.height_class(),
            velocity,
            motion: rec.motion,
        });
    }
    let mut ids: Vec<&ObstacleId> = obstacles.iter().map(|o| &o.id).collect();
    ids.sort();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return malformed(format!("duplicate obstacle id {}", w[0]));
    }

    let start = Vec2::new(
        scenario.start_x_m,
        scenario.start_y_m.unwrap_or(scenario.width_m / 2.0),
    );
    if !bounds.contains(start) {
        return malformed("walker start lies outside the sidewalk".into());
    }
    let walker = WalkerState { position: start, heading: 0.0, speed, alive: true };
    let idle_budget = (scenario.idle_budget > 0).then_some(scenario.idle_budget);
    Ok(SidewalkWorld::new(
        scenario.length_m,
        scenario.width_m,
        scenario.curb_margin_m,
        obstacles,
        walker,
        scenario.seed,
        idle_budget,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_scenario_has_full_inventory() {
        let cfg = ScenarioConfig::standard();
        let world = build_world(&cfg).unwrap();
        assert!(world.obstacles.len() >= 11);
        assert!((world.length - 152.4).abs() < 1e-9);
        for kind in [
            ObstacleKind::Tree,
            ObstacleKind::ElectricPole,
            ObstacleKind::Pothole,
            ObstacleKind::Dumpster,
            ObstacleKind::Fence,
            ObstacleKind::Curb,
            ObstacleKind::Bollard,
            ObstacleKind::FireHydrant,
            ObstacleKind::ElectricScooter,
            ObstacleKind::ConstructionCone,
            ObstacleKind::Puddle,
        ] {
            assert!(world.obstacles.iter().any(|o| o.kind == kind), "missing {kind}");
        }
        assert_eq!(world.walker.position, Vec2::new(cfg.start_x_m, cfg.width_m / 2.0));
        assert!(world.collision_check().is_none());
    }

    #[test]
    fn empty_straight_scenario() {
        let text = "format = 1\nlength_m = 10.0\nwidth_m = 3.0\nseed = 1\n";
        let world = build_world(&ScenarioConfig::parse(text).unwrap()).unwrap();
        assert!(world.obstacles.is_empty());
        assert_eq!(world.length, 10.0);
    }

    #[test]
    fn same_seed_same_placements() {
        let cfg = ScenarioConfig::standard().with_seed(99);
        let a = build_world(&cfg).unwrap();
        let b = build_world(&cfg).unwrap();
        assert_eq!(a.obstacles, b.obstacles);
        let c = build_world(&cfg.with_seed(100)).unwrap();
        assert_ne!(a.obstacles, c.obstacles);
    }

    #[test]
    fn rejects_out_of_bounds_obstacle() {
        let text = r#"
format = 1
length_m = 10.0
width_m = 3.0
seed = 1
[[obstacles]]
kind = "tree"
x = 5.0
y = 9.0
radius = 0.3
"#;
        let err = build_world(&ScenarioConfig::parse(text).unwrap()).unwrap_err();
        assert!(matches!(err, ScenarioError::OutOfBounds { .. }), "{err}");
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(matches!(ScenarioConfig::parse("format = 1\nlength_m = "), Err(ScenarioError::Malformed(_))));
        assert!(matches!(
            ScenarioConfig::parse("format = 2\nlength_m = 1.0\nwidth_m = 1.0\nseed = 0"),
            Err(ScenarioError::UnsupportedFormat(2))
        ));
        let both = "format = 1\nlength_m = 10.0\nwidth_m = 3.0\nseed = 1\n[[obstacles]]\nkind = \"tree\"\nx = 1.0\ny = 1.0\n";
        assert!(matches!(
            build_world(&ScenarioConfig::parse(both).unwrap()),
            Err(ScenarioError::InvalidObstacle { .. })
        ));
    }

    #[test]
    fn rejects_speed_outside_walking_band_unless_overridden() {
        let text = "format = 1\nlength_m = 10.0\nwidth_m = 3.0\nseed = 1\nwalker_speed_cm_s = 300.0\n";
        assert!(build_world(&ScenarioConfig::parse(text).unwrap()).is_err());
        let text = format!("{text}allow_any_speed = true\n");
        assert!(build_world(&ScenarioConfig::parse(&text).unwrap()).is_ok());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig::standard();
        assert_eq!(ScenarioConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }
}
