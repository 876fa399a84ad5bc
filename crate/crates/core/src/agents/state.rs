//! What the learners see: a 48-state discretization for the tabular methods
//! and a 24-component feature vector for the network.

use super::{HasFeatures, HasKey};
use crate::freepath::{Cluster, FreePathAssessment};
use crate::sensing::RangeScan;
use crate::world::WalkerState;
use serde::{Deserialize, Serialize};

pub const SECTORS: usize = 21;
pub const FEATURE_LEN: usize = SECTORS + 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceBucket {
    None,
    Far,
    Mid,
    Near,
}

impl DistanceBucket {
    pub fn from_distance(d: Option<f64>) -> Self {
        match d {
            Some(d) if d < 1.5 => DistanceBucket::Near,
            Some(d) if d < 4.0 => DistanceBucket::Mid,
            Some(d) if d < 8.0 => DistanceBucket::Far,
            _ => DistanceBucket::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Left,
    Ahead,
    Right,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LateralBucket {
    LeftEdge,
    Center,
    RightEdge,
}

impl LateralBucket {
    pub fn from_position(y: f64, width: f64) -> Self {
        if y < width / 3.0 {
            LateralBucket::LeftEdge
        } else if y > 2.0 * width / 3.0 {
            LateralBucket::RightEdge
        } else {
            LateralBucket::Center
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DiscreteState {
    pub distance: DistanceBucket,
    pub sector: Sector,
    pub lateral: LateralBucket,
}

impl DiscreteState {
    pub const COUNT: usize = 48;

    /// Describes the nearest cluster that reaches within
    /// [`RELEVANCE_HALFWIDTH`] of the walker's line of travel. Its side is
    /// taken from the lateral offset of its centroid: within
    /// [`AHEAD_HALFWIDTH`] it is dead ahead.
    pub fn from_assessment(a: &FreePathAssessment, walker: &WalkerState, width: f64) -> Self {
        let lateral = LateralBucket::from_position(walker.position.y, width);
        let relevant = a.clusters.iter().find(|c| reaches_path(c, RELEVANCE_HALFWIDTH));
        let (distance, sector) = match relevant {
            Some(c) => {
                let offset = c.centroid().y;
                let sector = if offset < -AHEAD_HALFWIDTH {
                    Sector::Left
                } else if offset > AHEAD_HALFWIDTH {
                    Sector::Right
                } else {
                    Sector::Ahead
                };
                (DistanceBucket::from_distance(Some(c.centroid_range)), sector)
            }
            None => (DistanceBucket::None, Sector::None),
        };
        let sector = if distance == DistanceBucket::None { Sector::None } else { sector };
        Self { distance, sector, lateral }
    }

    pub fn index(&self) -> usize {
        (self.distance as usize * 4 + self.sector as usize) * 3 + self.lateral as usize
    }

    pub fn all() -> impl Iterator<Item = DiscreteState> {
        use DistanceBucket as D;
        use LateralBucket as L;
        use Sector as S;
        [D::None, D::Far, D::Mid, D::Near].into_iter().flat_map(|distance| {
            [S::Left, S::Ahead, S::Right, S::None].into_iter().flat_map(move |sector| {
                [L::LeftEdge, L::Center, L::RightEdge]
                    .into_iter()
                    .map(move |lateral| DiscreteState { distance, sector, lateral })
            })
        })
    }
}

/// Clusters farther than this from the walker's line of travel cannot be
/// reached with one sidestep and are left out of the discrete state, meters.
pub const RELEVANCE_HALFWIDTH: f64 = 1.0;
/// Lateral centroid offset under which a cluster counts as dead ahead, meters.
pub const AHEAD_HALFWIDTH: f64 = 0.15;

/// Whether any point of the cluster lies ahead within `halfwidth` of the
/// walker's line of travel.
pub fn reaches_path(c: &Cluster, halfwidth: f64) -> bool {
    c.points.iter().any(|p| {
        let v = p.cartesian();
        v.x > 0.0 && v.y.abs() < halfwidth
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_LEN]);

impl FeatureVector {
    /// Min-pooled normalized ranges over 21 equal bearing sectors, then
    /// lateral position, stall pressure and nearest threat.
    ///
    /// The walker never turns, so the slot a heading would occupy carries
    /// how much of the idle budget the walk has spent.
    pub fn build(
        scan: &RangeScan,
        assessment: &FreePathAssessment,
        walker: &WalkerState,
        width: f64,
        stall_pressure: f64,
    ) -> Self {
        let mut v = [1.0f64; FEATURE_LEN];
        for p in &scan.points {
            let frac = (p.bearing + scan.fov / 2.0) / scan.fov;
            let sector = ((frac * SECTORS as f64).floor().max(0.0) as usize).min(SECTORS - 1);
            v[sector] = v[sector].min((p.range / scan.max_range).clamp(0.0, 1.0));
        }
        v[SECTORS] = (walker.position.y / width).clamp(0.0, 1.0);
        v[SECTORS + 1] = stall_pressure.clamp(0.0, 1.0);
        v[SECTORS + 2] = assessment.max_threat().clamp(0.0, 1.0);
        FeatureVector(v)
    }
}

/// What the sidewalk environment hands a learner each step.
#[derive(Debug, Clone, PartialEq)]
pub struct SidewalkObs {
    pub state: DiscreteState,
    pub features: FeatureVector,
}

impl HasKey<DiscreteState> for SidewalkObs {
    fn key(&self) -> DiscreteState {
        self.state
    }
}

impl HasFeatures for SidewalkObs {
    fn features(&self) -> &[f64] {
        &self.features.0
    }
}

impl HasFeatures for FeatureVector {
    fn features(&self) -> &[f64] {
        &self.0
    }
}
