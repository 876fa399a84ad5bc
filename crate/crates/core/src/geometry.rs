//! Planar geometry used by the world and the sensor: points, discs and
//! convex polygons, with ray casting and overlap predicates.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// A point or vector in the sidewalk frame, in meters.
///
/// `x` runs along the sidewalk (walking direction), `y` runs across it from
/// the left edge (`y = 0`) to the right edge (`y = width`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn from_polar(range: f64, angle: f64) -> Self {
        Self::new(range * angle.cos(), range * angle.sin())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

/// Axis-aligned rectangle `[min.x, max.x] x [min.y, max.y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(self.min.x, self.max.x), p.y.clamp(self.min.y, self.max.y))
    }

    fn corners(&self) -> [Vec2; 4] {
        [
            self.min,
            Vec2::new(self.max.x, self.min.y),
            self.max,
            Vec2::new(self.min.x, self.max.y),
        ]
    }
}

/// Obstacle footprint: a disc or a convex polygon with counter-clockwise or
/// clockwise vertex order (either is accepted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Footprint {
    Disc { center: Vec2, radius: f64 },
    Polygon { vertices: Vec<Vec2> },
}

impl Footprint {
    pub fn centroid(&self) -> Vec2 {
        match self {
            Footprint::Disc { center, .. } => *center,
            Footprint::Polygon { vertices } => {
                let n = vertices.len() as f64;
                let sum = vertices.iter().fold(Vec2::default(), |acc, v| acc + *v);
                sum * (1.0 / n)
            }
        }
    }

    /// Largest distance from the centroid to any point of the footprint.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Footprint::Disc { radius, .. } => *radius,
            Footprint::Polygon { vertices } => {
                let c = self.centroid();
                vertices.iter().map(|v| v.distance(c)).fold(0.0, f64::max)
            }
        }
    }

    pub fn translate(&mut self, delta: Vec2) {
        match self {
            Footprint::Disc { center, .. } => *center = *center + delta,
            Footprint::Polygon { vertices } => {
                for v in vertices.iter_mut() {
                    *v = *v + delta;
                }
            }
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            Footprint::Disc { center, radius } => p.distance(*center) <= *radius,
            Footprint::Polygon { vertices } => {
                let n = vertices.len();
                let mut sign = 0.0_f64;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let c = (b - a).cross(p - a);
                    if c.abs() <= 1e-12 {
                        continue;
                    }
                    if sign == 0.0 {
                        sign = c.signum();
                    } else if c.signum() != sign {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Euclidean distance from `p` to the footprint boundary.
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        match self {
            Footprint::Disc { center, radius } => (p.distance(*center) - radius).abs(),
            Footprint::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| segment_distance(p, vertices[i], vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Distance from `p` to the footprint (zero when inside).
    pub fn distance_to(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            self.boundary_distance(p)
        }
    }

    /// True when a disc of `radius` around `center` overlaps the footprint.
    pub fn overlaps_disc(&self, center: Vec2, radius: f64) -> bool {
        self.distance_to(center) < radius
    }

    /// Distance along the ray `origin + t * dir` (with `dir` unit length) to
    /// the first boundary crossing at `t > 0`, if any.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        match self {
            Footprint::Disc { center, radius } => ray_disc(origin, dir, *center, *radius),
            Footprint::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .filter_map(|i| ray_segment(origin, dir, vertices[i], vertices[(i + 1) % n]))
                    .fold(None, |best: Option<f64>, t| Some(best.map_or(t, |b| b.min(t))))
            }
        }
    }

    pub fn intersects_rect(&self, rect: &Rect) -> bool {
        match self {
            Footprint::Disc { center, radius } => rect.clamp(*center).distance(*center) <= *radius,
            Footprint::Polygon { vertices } => {
                if vertices.iter().any(|v| rect.contains(*v)) {
                    return true;
                }
                if rect.corners().iter().any(|c| self.contains(*c)) {
                    return true;
                }
                let corners = rect.corners();
                let n = vertices.len();
                (0..n).any(|i| {
                    (0..4).any(|j| {
                        segments_intersect(
                            vertices[i],
                            vertices[(i + 1) % n],
                            corners[j],
                            corners[(j + 1) % 4],
                        )
                    })
                })
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Footprint::Disc { radius, center } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(format!("disc radius must be positive, got {radius}"));
                }
                if !(center.x.is_finite() && center.y.is_finite()) {
                    return Err("disc center must be finite".into());
                }
                Ok(())
            }
            Footprint::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err("polygon needs at least 3 vertices".into());
                }
                if vertices.iter().any(|v| !(v.x.is_finite() && v.y.is_finite())) {
                    return Err("polygon vertices must be finite".into());
                }
                let n = vertices.len();
                let mut sign = 0.0_f64;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let c = vertices[(i + 2) % n];
                    let turn = (b - a).cross(c - b);
                    if turn.abs() <= 1e-12 {
                        continue;
                    }
                    if sign == 0.0 {
                        sign = turn.signum();
                    } else if turn.signum() != sign {
                        return Err("polygon must be convex".into());
                    }
                }
                if sign == 0.0 {
                    return Err("polygon is degenerate".into());
                }
                Ok(())
            }
        }
    }
}

pub fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn ray_disc(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let oc = origin - center;
    let b = oc.dot(dir);
    let c = oc.dot(oc) - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = -b - sq;
    let t1 = -b + sq;
    if t0 > 0.0 {
        Some(t0)
    } else if t1 > 0.0 {
        Some(t1)
    } else {
        None
    }
}

fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let ab = b - a;
    let denom = dir.cross(ab);
    if denom.abs() < 1e-15 {
        return None;
    }
    let ao = a - origin;
    let t = ao.cross(ab) / denom;
    let u = ao.cross(dir) / denom;
    if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u) {
        Some(t)
    } else {
        None
    }
}

fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = (q2 - q1).cross(p1 - q1);
    let d2 = (q2 - q1).cross(p2 - q1);
    let d3 = (p2 - p1).cross(q1 - p1);
    let d4 = (p2 - p1).cross(q2 - p1);
    (d1 * d2 <= 0.0) && (d3 * d4 <= 0.0)
}
