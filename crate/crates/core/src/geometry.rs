//! Planar primitives and the overlap tests every validity check is built on.
//!
//! All distances are meters, all angles radians. Overlap tests are strict:
//! shapes that only touch (distance exactly equal to the radius sum) do not
//! overlap.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("disc radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("obstacle height must be non-negative, got {0}")]
    NegativeHeight(f64),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not strictly convex and counterclockwise at vertex {0}")]
    NotConvexCcw(usize),
    #[error("rectangle is degenerate: min {min:?} max {max:?}")]
    DegenerateRect { min: Point2, max: Point2 },
}

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn distance_sq(self, o: Point2) -> f64 {
        (self - o).norm_sq()
    }

    /// Counterclockwise rotation about the origin.
    #[inline]
    pub fn rotated(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        self.rotated_sc(s, c)
    }

    #[inline]
    pub(crate) fn rotated_sc(self, s: f64, c: f64) -> Point2 {
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    #[inline]
    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Point2::new(a[0], a[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point2 {
    #[inline]
    fn add_assign(&mut self, o: Point2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// A circular footprint. For obstacles `height` is the obstacle height;
/// zero means the obstacle is taller than anything in the scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disc {
    pub center: Point2,
    pub radius: f64,
    #[serde(default)]
    pub height: f64,
}

impl Disc {
    pub fn new(center: Point2, radius: f64) -> Self {
        Self { center, radius, height: 0.0 }
    }

    pub fn with_height(center: Point2, radius: f64, height: f64) -> Self {
        Self { center, radius, height }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !self.center.is_finite() || !self.radius.is_finite() || !self.height.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if self.radius <= 0.0 {
            return Err(GeometryError::NonPositiveRadius(self.radius));
        }
        if self.height < 0.0 {
            return Err(GeometryError::NegativeHeight(self.height));
        }
        Ok(())
    }

    /// True when the obstacle blocks everything regardless of height.
    #[inline]
    pub fn blocks_all(&self) -> bool {
        self.height == 0.0
    }
}

/// Convex polygon with counterclockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "Vec<Point2>")]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) <= 0.0 {
                return Err(GeometryError::NotConvexCcw((i + 1) % n));
            }
        }
        // A star polygon passes the local turn test but winds more than once.
        let winding: f64 = (0..n)
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                let c = vertices[(i + 2) % n];
                (b - a).cross(c - b).atan2((b - a).dot(c - b))
            })
            .sum();
        if (winding - std::f64::consts::TAU).abs() > 1e-6 {
            return Err(GeometryError::NotConvexCcw(0));
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle centered on the origin.
    pub fn centered_rectangle(width: f64, height: f64) -> Result<Self, GeometryError> {
        let (hw, hh) = (width / 2.0, height / 2.0);
        Self::new(vec![
            Point2::new(-hw, -hh),
            Point2::new(hw, -hh),
            Point2::new(hw, hh),
            Point2::new(-hw, hh),
        ])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Closed containment test.
    pub fn contains(&self, q: Point2) -> bool {
        self.edges().all(|(a, b)| (b - a).cross(q - a) >= 0.0)
    }

    /// Distance from `q` to the polygon boundary.
    pub fn boundary_distance(&self, q: Point2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(q, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `q` to the closed polygon (zero inside).
    pub fn distance(&self, q: Point2) -> f64 {
        if self.contains(q) {
            0.0
        } else {
            self.boundary_distance(q)
        }
    }

    /// Largest vertex distance from the origin of the polygon's frame.
    pub fn reach(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Image under rotation by `angle` about the origin followed by `translation`.
    pub fn transformed(&self, angle: f64, translation: Point2) -> ConvexPolygon {
        let (s, c) = angle.sin_cos();
        ConvexPolygon {
            vertices: self
                .vertices
                .iter()
                .map(|v| v.rotated_sc(s, c) + translation)
                .collect(),
        }
    }
}

impl From<ConvexPolygon> for Vec<Point2> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices
    }
}

impl<'de> Deserialize<'de> for ConvexPolygon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let vertices = Vec::<Point2>::deserialize(d)?;
        ConvexPolygon::new(vertices).map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned rectangle, `min` inclusive to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Result<Self, GeometryError> {
        let r = Rect { min, max };
        r.validate()?;
        Ok(r)
    }

    /// `[0, width] x [0, height]`.
    pub fn sized(width: f64, height: f64) -> Result<Self, GeometryError> {
        Rect::new(Point2::ORIGIN, Point2::new(width, height))
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if !(self.max.x > self.min.x && self.max.y > self.min.y) {
            return Err(GeometryError::DegenerateRect { min: self.min, max: self.max });
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, q: Point2) -> bool {
        q.x >= self.min.x && q.x <= self.max.x && q.y >= self.min.y && q.y <= self.max.y
    }

    /// Signed distance from `q` to the nearest side, positive inside.
    #[inline]
    pub fn inner_clearance(&self, q: Point2) -> f64 {
        (q.x - self.min.x)
            .min(self.max.x - q.x)
            .min(q.y - self.min.y)
            .min(self.max.y - q.y)
    }

    /// True when the whole disc lies inside the rectangle (touching the sides is allowed).
    #[inline]
    pub fn contains_disc(&self, center: Point2, radius: f64) -> bool {
        self.inner_clearance(center) >= radius
    }
}

pub fn point_segment_distance(q: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return q.distance(a);
    }
    let t = ((q - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    q.distance(a + ab * t)
}

/// Strict overlap of two discs; tangency is not an overlap.
#[inline]
pub fn disc_disc_overlap(a: &Disc, b: &Disc) -> bool {
    let r = a.radius + b.radius;
    a.center.distance_sq(b.center) < r * r
}

/// Open disc against closed convex polygon.
pub fn disc_polygon_overlap(d: &Disc, g: &ConvexPolygon) -> bool {
    g.contains(d.center) || g.boundary_distance(d.center) < d.radius
}

/// Rotates `q` about `pivot` by `angle` (counterclockwise), then translates.
pub fn transform_point(q: Point2, pivot: Point2, angle: f64, translation: Point2) -> Point2 {
    pivot + (q - pivot).rotated(angle) + translation
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_square() -> ConvexPolygon {
        ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap()
    }

    fn close(a: Point2, b: Point2) -> bool {
        a.distance(b) < 1e-12
    }

    #[test]
    fn disc_disc_cases() {
        let d = |x, y, r| Disc::new(Point2::new(x, y), r);
        assert!(!disc_disc_overlap(&d(0.0, 0.0, 1.0), &d(3.0, 0.0, 1.0)));
        assert!(disc_disc_overlap(&d(0.0, 0.0, 0.1), &d(0.0, 0.0, 0.1)));
        // exact tangency
        assert!(!disc_disc_overlap(&d(0.0, 0.0, 1.0), &d(2.0, 0.0, 1.0)));
    }

    #[test]
    fn disc_polygon_cases() {
        let sq = unit_square();
        assert!(disc_polygon_overlap(&Disc::new(Point2::new(0.5, 0.5), 0.1), &sq));
        assert!(!disc_polygon_overlap(&Disc::new(Point2::new(3.0, 0.5), 0.1), &sq));
        assert!(disc_polygon_overlap(&Disc::new(Point2::new(1.05, 0.5), 0.1), &sq));
        // tangent to the right edge
        assert!(!disc_polygon_overlap(&Disc::new(Point2::new(1.1, 0.5), 0.1), &sq));
    }

    #[test]
    fn transform_cases() {
        let o = Point2::ORIGIN;
        assert!(close(transform_point(Point2::new(1.0, 0.0), o, PI / 2.0, o), Point2::new(0.0, 1.0)));
        assert!(close(
            transform_point(Point2::new(1.0, 1.0), Point2::new(1.0, 1.0), 2.7, Point2::new(3.0, 4.0)),
            Point2::new(4.0, 5.0)
        ));
        assert!(close(transform_point(Point2::new(2.0, 0.0), Point2::new(1.0, 0.0), PI, o), o));
    }

    #[test]
    fn polygon_rejects_bad_input() {
        assert_eq!(
            ConvexPolygon::new(vec![Point2::ORIGIN, Point2::new(1.0, 0.0)]),
            Err(GeometryError::TooFewVertices(2))
        );
        // clockwise
        let cw = ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
        ]);
        assert!(matches!(cw, Err(GeometryError::NotConvexCcw(_))));
        // collinear vertex is not strictly convex
        let flat = ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.5, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ]);
        assert!(flat.is_err());
        // pentagram: every turn is left but it winds twice
        let star: Vec<Point2> = (0..5)
            .map(|k| Point2::new(1.0, 0.0).rotated(k as f64 * 4.0 * PI / 5.0))
            .collect();
        assert!(ConvexPolygon::new(star).is_err());
    }

    #[test]
    fn rect_disc_containment() {
        let r = Rect::sized(10.0, 10.0).unwrap();
        assert!(r.contains_disc(Point2::new(0.35, 5.0), 0.35));
        assert!(!r.contains_disc(Point2::new(0.34, 5.0), 0.35));
        assert!(Rect::sized(0.0, 1.0).is_err());
    }
}
