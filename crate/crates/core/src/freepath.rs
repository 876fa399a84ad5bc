//! Free-path assessment: cluster a scan's points, rate each cluster's threat
//! by its distance, and decide whether the corridor along a direction of
//! interest is clear.

use crate::geometry::Vec2;
use crate::sensing::{RangeScan, ScanPoint};
use crate::world::{HeightClass, ObstacleKind, SidewalkWorld};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;

pub const DEFAULT_LINKAGE_EPS: f64 = 0.3;
pub const DEFAULT_MIN_POINTS: usize = 2;
/// Half-width of the "ahead" bearing band, radians.
pub const AHEAD_BAND: f64 = 0.26;
pub const DEFAULT_TOP_K: usize = 5;
/// Corridor half-width used by the agents: walker radius plus a margin.
pub const DEFAULT_CORRIDOR_HALFWIDTH: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub points: Vec<ScanPoint>,
    /// dᵢ: the smallest range among member points.
    pub centroid_range: f64,
    /// Bearing of the Cartesian centroid of the members.
    pub centroid_bearing: f64,
    pub height_class: HeightClass,
    pub label_guess: Option<ObstacleKind>,
}

impl Cluster {
    /// Cartesian centroid in the sensor frame.
    pub fn centroid(&self) -> Vec2 {
        let sum = self.points.iter().fold(Vec2::default(), |acc, p| acc + p.cartesian());
        sum * (1.0 / self.points.len() as f64)
    }

    /// Threat level, inversely proportional to distance (κ = 1 m).
    pub fn threat(&self) -> f64 {
        1.0 / self.centroid_range
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreePathAssessment {
    /// Ascending by distance.
    pub clusters: Vec<Cluster>,
    pub threats: BTreeMap<usize, f64>,
    pub free: bool,
    pub direction_of_interest: f64,
    pub corridor_halfwidth: f64,
}

impl FreePathAssessment {
    pub fn nearest(&self) -> Option<&Cluster> {
        self.clusters.first()
    }

    pub fn max_threat(&self) -> f64 {
        self.threats.values().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BearingWord {
    Left,
    Ahead,
    Right,
}

impl BearingWord {
    pub fn from_bearing(bearing: f64) -> Self {
        if bearing < -AHEAD_BAND {
            BearingWord::Left
        } else if bearing > AHEAD_BAND {
            BearingWord::Right
        } else {
            BearingWord::Ahead
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BearingWord::Left => "left",
            BearingWord::Ahead => "ahead",
            BearingWord::Right => "right",
        }
    }
}

impl fmt::Display for BearingWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One line of the obstacle report given to the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub label: Option<ObstacleKind>,
    /// Meters, rounded to 0.1.
    pub distance: f64,
    pub bearing_word: BearingWord,
}

impl ReportEntry {
    /// The label as spoken, `"?"` when unknown.
    pub fn label_text(&self) -> String {
        self.label.map_or_else(|| "?".to_string(), |k| k.display_name())
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Single-linkage clustering of the scan in the sensor's Cartesian frame.
///
/// Two points link when their distance is at most `linkage_eps`. Groups
/// smaller than `min_points` are dropped as noise. Clusters are numbered by
/// ascending centroid bearing, and members are ordered by bearing then range,
/// so the result does not depend on the order of the input points.
pub fn cluster_points(points: &[ScanPoint], linkage_eps: f64, min_points: usize) -> Vec<Cluster> {
    assert!(linkage_eps > 0.0, "linkage_eps must be positive");
    let xy: Vec<Vec2> = points.iter().map(ScanPoint::cartesian).collect();
    let mut order: Vec<usize> = (0..xy.len()).collect();
    order.sort_by(|&a, &b| xy[a].x.total_cmp(&xy[b].x));
    let mut parent: Vec<usize> = (0..xy.len()).collect();
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if xy[j].x - xy[i].x > linkage_eps {
                break;
            }
            if xy[i].distance(xy[j]) <= linkage_eps {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..xy.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let mut clusters: Vec<Cluster> = groups
        .into_values()
        .filter(|members| members.len() >= min_points.max(1))
        .map(|members| {
            let mut pts: Vec<ScanPoint> = members.iter().map(|&i| points[i].clone()).collect();
            pts.sort_by(|a, b| {
                a.bearing.total_cmp(&b.bearing).then(a.range.total_cmp(&b.range))
            });
            build_cluster(pts)
        })
        .collect();
    clusters.sort_by(|a, b| {
        a.centroid_bearing
            .total_cmp(&b.centroid_bearing)
            .then(a.centroid_range.total_cmp(&b.centroid_range))
    });
    for (i, c) in clusters.iter_mut().enumerate() {
        c.id = i;
    }
    clusters
}

fn build_cluster(points: Vec<ScanPoint>) -> Cluster {
    let d = points.iter().map(|p| p.range).fold(f64::INFINITY, f64::min);
    let ground = points.iter().filter(|p| p.height_class == HeightClass::GroundLevel).count();
    let height_class = if 2 * ground > points.len() {
        HeightClass::GroundLevel
    } else {
        HeightClass::AboveGround
    };
    let mut c = Cluster {
        id: 0,
        points,
        centroid_range: d,
        centroid_bearing: 0.0,
        height_class,
        label_guess: None,
    };
    let centroid = c.centroid();
    c.centroid_bearing = centroid.y.atan2(centroid.x);
    c
}

pub fn cluster_scan(scan: &RangeScan, linkage_eps: f64) -> Vec<Cluster> {
    cluster_points(&scan.points, linkage_eps, DEFAULT_MIN_POINTS)
}

fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = (a + std::f64::consts::PI).rem_euclid(tau) - std::f64::consts::PI;
    if r < -std::f64::consts::PI { r + tau } else { r }
}

/// Whether a point in the sensor frame lies inside the corridor of
/// half-width `halfwidth` along `direction`.
pub fn in_corridor(p: Vec2, direction: f64, halfwidth: f64) -> bool {
    let r = p.norm();
    if r == 0.0 {
        return true;
    }
    let off = wrap_angle(p.y.atan2(p.x) - direction).abs();
    off <= (halfwidth / r).atan()
}

/// Clusters the scan, rates threats, and checks the corridor.
pub fn assess(scan: &RangeScan, direction: f64, corridor_halfwidth: f64) -> FreePathAssessment {
    assess_clusters(cluster_scan(scan, DEFAULT_LINKAGE_EPS), direction, corridor_halfwidth)
}

pub fn assess_clusters(
    mut clusters: Vec<Cluster>,
    direction: f64,
    corridor_halfwidth: f64,
) -> FreePathAssessment {
    assert!(corridor_halfwidth > 0.0, "corridor_halfwidth must be positive");
    clusters.sort_by(|a, b| a.centroid_range.total_cmp(&b.centroid_range).then(a.id.cmp(&b.id)));
    let threats = clusters.iter().map(|c| (c.id, c.threat())).collect();
    let free = !clusters.iter().any(|c| in_corridor(c.centroid(), direction, corridor_halfwidth));
    FreePathAssessment {
        clusters,
        threats,
        free,
        direction_of_interest: direction,
        corridor_halfwidth,
    }
}

/// Fills `label_guess` from the ground-truth sources of the member points:
/// the majority kind when it holds more than half the points, else unknown.
/// Mixed clusters (say a scooter parked against a fence) stay unlabeled or
/// take the dominant kind.
pub fn label_from_ground_truth(assessment: &mut FreePathAssessment, world: &SidewalkWorld) {
    for c in &mut assessment.clusters {
        let mut votes: BTreeMap<ObstacleKind, usize> = BTreeMap::new();
        for p in &c.points {
            if let Some(kind) = p.source.as_ref().and_then(|id| world.obstacle(id)).map(|o| o.kind) {
                *votes.entry(kind).or_default() += 1;
            }
        }
        c.label_guess = votes
            .into_iter()
            .find(|&(_, n)| 2 * n > c.points.len())
            .map(|(k, _)| k);
    }
}

/// The `k` nearest clusters as report entries.
pub fn top_k_report(assessment: &FreePathAssessment, k: usize) -> Vec<ReportEntry> {
    assessment
        .clusters
        .iter()
        .take(k.max(1))
        .map(|c| ReportEntry {
            label: c.label_guess,
            distance: (c.centroid_range * 10.0).round() / 10.0,
            bearing_word: BearingWord::from_bearing(c.centroid_bearing),
        })
        .collect()
}
