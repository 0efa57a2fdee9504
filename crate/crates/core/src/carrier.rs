//! Carrier models: what besides the robots must stay clear of obstacles.
//!
//! The sheet carrier reduces the deformable sheet to a point payload hung from
//! the robots' grip points by inextensible virtual cables. The payload rests
//! at the lowest point of the intersection of the cable balls, which is the
//! minimum of a linear objective over an intersection of balls. That optimum
//! always has at most three active constraints, so it is found exactly by
//! enumerating the lowest point of each ball, the lowest point of each
//! pairwise intersection circle and the lower intersection points of each
//! triple of spheres.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formation::SystemPose;
use crate::geometry::{disc_disc_overlap, ConvexPolygon, Disc, Point2};
use crate::scenario::Scenario;
use crate::validity::Validator;

/// Feasibility slack on the ball constraints.
const BALL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CarrierError {
    #[error("sheet equilibrium needs at least 3 anchors, got {0}")]
    TooFewAnchors(usize),
    #[error("{anchors} anchors but {cables} cable lengths")]
    CableCount { anchors: usize, cables: usize },
    #[error("cable length {0} is not positive")]
    BadCable(f64),
    #[error("cables are too short: no point is reachable by every cable")]
    Infeasible,
    #[error("unknown formation `{0}`")]
    UnknownFormation(String),
}

/// How the robots are coupled to the transported object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CarrierModel {
    /// The robots themselves; only robot footprints are checked.
    #[default]
    FormationOnly,
    /// An object rigidly attached to the formation. The footprint is given in
    /// the formation frame (center-relative, angle 0).
    RigidObject { object_footprint: ConvexPolygon },
    /// A payload hanging from a sheet held at `grip_height`. Every formation
    /// must carry cable lengths.
    SheetPayload { grip_height: f64, payload_radius: f64 },
}

/// Equilibrium of the hanging payload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayloadState {
    /// Plan-view position.
    pub position: Point2,
    /// Height above ground.
    pub z: f64,
    /// Plan-view position relative to the anchors' centroid.
    pub offset: Point2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Vec3 {
    x: f64,
    y: f64,
    z: f64,
}

impl Vec3 {
    fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }
    fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
    fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }
    fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

const DOWN: Vec3 = Vec3 { x: 0.0, y: 0.0, z: -1.0 };

/// Lowest point reachable by every cable.
///
/// `anchors` are plan positions with grip heights. If the lowest reachable
/// point is below ground the payload rests on the ground at the same plan
/// position (z clamped to 0).
pub fn sheet_equilibrium(
    anchors: &[(Point2, f64)],
    cable_lengths: &[f64],
) -> Result<PayloadState, CarrierError> {
    if anchors.len() < 3 {
        return Err(CarrierError::TooFewAnchors(anchors.len()));
    }
    if anchors.len() != cable_lengths.len() {
        return Err(CarrierError::CableCount {
            anchors: anchors.len(),
            cables: cable_lengths.len(),
        });
    }
    if let Some(&bad) = cable_lengths.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(CarrierError::BadCable(bad));
    }
    let centers: Vec<Vec3> = anchors.iter().map(|(p, h)| Vec3::new(p.x, p.y, *h)).collect();
    let q = lowest_common_point(&centers, cable_lengths).ok_or(CarrierError::Infeasible)?;

    let n = anchors.len() as f64;
    let centroid = anchors.iter().fold(Point2::ORIGIN, |a, (p, _)| a + *p) * (1.0 / n);
    let position = Point2::new(q.x, q.y);
    Ok(PayloadState {
        position,
        z: q.z.max(0.0),
        offset: position - centroid,
    })
}

fn lowest_common_point(centers: &[Vec3], radii: &[f64]) -> Option<Vec3> {
    let n = centers.len();
    let feasible = |q: Vec3| {
        centers
            .iter()
            .zip(radii)
            .all(|(c, r)| (q - *c).norm() <= r + BALL_TOLERANCE)
    };
    let mut best: Option<Vec3> = None;
    let mut consider = |q: Vec3| {
        if q.z.is_finite() && best.is_none_or(|b| q.z < b.z) && feasible(q) {
            best = Some(q);
        }
    };

    for i in 0..n {
        consider(centers[i] + DOWN * radii[i]);
    }
    for i in 0..n {
        for j in i + 1..n {
            for q in circle_lowest_points(centers[i], radii[i], centers[j], radii[j]) {
                consider(q);
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for q in trilaterate(
                    [centers[i], centers[j], centers[k]],
                    [radii[i], radii[j], radii[k]],
                )
                .into_iter()
                .flatten()
                {
                    consider(q);
                }
            }
        }
    }
    best
}

/// Lowest point(s) on the intersection circle of two spheres.
fn circle_lowest_points(a: Vec3, ra: f64, b: Vec3, rb: f64) -> Vec<Vec3> {
    let ab = b - a;
    let d = ab.norm();
    if d == 0.0 || d > ra + rb + BALL_TOLERANCE || d < (ra - rb).abs() - BALL_TOLERANCE {
        return Vec::new();
    }
    let u = ab * (1.0 / d);
    let t = (d * d + ra * ra - rb * rb) / (2.0 * d);
    let rho = (ra * ra - t * t).max(0.0).sqrt();
    let center = a + u * t;
    // downward direction projected into the circle's plane
    let w = DOWN - u * DOWN.dot(u);
    let wn = w.norm();
    if wn > 1e-12 {
        return vec![center + w * (rho / wn)];
    }
    // horizontal circle: every point is equally low
    let e1 = if u.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    let e1 = e1 - u * e1.dot(u);
    let e1 = e1 * (1.0 / e1.norm());
    let e2 = u.cross(e1);
    (0..8)
        .map(|k| {
            let ang = std::f64::consts::TAU * k as f64 / 8.0;
            center + (e1 * ang.cos() + e2 * ang.sin()) * rho
        })
        .collect()
}

/// The two intersection points of three spheres, if they meet.
fn trilaterate(c: [Vec3; 3], r: [f64; 3]) -> [Option<Vec3>; 2] {
    let ab = c[1] - c[0];
    let d = ab.norm();
    if d == 0.0 {
        return [None, None];
    }
    let ex = ab * (1.0 / d);
    let ac = c[2] - c[0];
    let i = ex.dot(ac);
    let ey = ac - ex * i;
    let eyn = ey.norm();
    if eyn < 1e-12 {
        return [None, None];
    }
    let ey = ey * (1.0 / eyn);
    let ez = ex.cross(ey);
    let j = ey.dot(ac);
    let x = (r[0] * r[0] - r[1] * r[1] + d * d) / (2.0 * d);
    let y = (r[0] * r[0] - r[2] * r[2] + i * i + j * j) / (2.0 * j) - i / j * x;
    let z2 = r[0] * r[0] - x * x - y * y;
    if z2 < -1e-12 {
        return [None, None];
    }
    let z = z2.max(0.0).sqrt();
    let base = c[0] + ex * x + ey * y;
    [Some(base + ez * z), Some(base - ez * z)]
}

/// Whether an obstacle stops the hanging payload: plan-view overlap with an
/// obstacle that is at least as tall as the payload hangs (or blocks all).
pub fn payload_blocked(state: &PayloadState, payload_radius: f64, ob: &Disc) -> bool {
    let payload = Disc::new(state.position, payload_radius);
    disc_disc_overlap(&payload, ob) && height_blocks(ob.height, state.z)
}

#[inline]
pub(crate) fn height_blocks(obstacle_height: f64, payload_z: f64) -> bool {
    obstacle_height == 0.0 || obstacle_height >= payload_z
}

/// Validity of one configuration of `formation_id` at `pose`.
///
/// Builds a fresh [`Validator`]; callers checking many configurations should
/// build one and reuse it.
pub fn config_valid(
    scenario: &Scenario,
    formation_id: &str,
    pose: &SystemPose,
) -> Result<bool, CarrierError> {
    let idx = scenario
        .formation_index(formation_id)
        .ok_or_else(|| CarrierError::UnknownFormation(formation_id.to_string()))?;
    Ok(Validator::new(scenario).is_valid(idx, pose))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize, circumradius: f64, h: f64) -> Vec<(Point2, f64)> {
        (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                (Point2::new(circumradius * a.cos(), circumradius * a.sin()), h)
            })
            .collect()
    }

    #[test]
    fn equilateral_analytic() {
        let d: f64 = 1.2;
        let anchors = ring(3, d / 3f64.sqrt(), 1.0);
        let s = sheet_equilibrium(&anchors, &[1.0; 3]).unwrap();
        let want = 1.0 - (1.0 - d * d / 3.0).sqrt();
        assert!((s.z - want).abs() < 1e-9, "{} vs {want}", s.z);
        assert!((want - 0.2789).abs() < 1e-4);
        assert!(s.position.norm() < 1e-9);
        assert!(s.offset.norm() < 1e-9);
    }

    #[test]
    fn square_analytic() {
        let anchors = ring(4, 1.1314 / 2f64.sqrt(), 1.0);
        let s = sheet_equilibrium(&anchors, &[1.0; 4]).unwrap();
        assert!((s.z - 0.4).abs() < 1e-4, "{}", s.z);
        assert!(s.position.norm() < 1e-6);
    }

    #[test]
    fn single_common_point() {
        let target = Vec3::new(0.3, -0.2, 0.25);
        let anchors = vec![
            (Point2::new(0.0, 0.0), 1.0),
            (Point2::new(1.0, 0.2), 0.9),
            (Point2::new(0.1, -1.1), 1.2),
        ];
        let cables: Vec<f64> = anchors
            .iter()
            .map(|(p, h)| (Vec3::new(p.x, p.y, *h) - target).norm())
            .collect();
        let s = sheet_equilibrium(&anchors, &cables).unwrap();
        assert!((s.z - target.z).abs() < 1e-7);
        assert!(s.position.distance(Point2::new(target.x, target.y)) < 1e-6);
    }

    #[test]
    fn infeasible_and_bad_input() {
        let anchors = ring(3, 2.0, 1.0);
        assert_eq!(sheet_equilibrium(&anchors, &[1.0; 3]), Err(CarrierError::Infeasible));
        assert_eq!(
            sheet_equilibrium(&anchors[..2], &[1.0; 2]),
            Err(CarrierError::TooFewAnchors(2))
        );
        assert!(matches!(
            sheet_equilibrium(&anchors, &[1.0; 2]),
            Err(CarrierError::CableCount { .. })
        ));
        assert_eq!(
            sheet_equilibrium(&anchors, &[1.0, 0.0, 1.0]),
            Err(CarrierError::BadCable(0.0))
        );
    }

    #[test]
    fn long_cables_rest_on_ground() {
        let anchors = ring(3, 0.5, 1.0);
        let s = sheet_equilibrium(&anchors, &[3.0; 3]).unwrap();
        assert_eq!(s.z, 0.0);
    }

    #[test]
    fn blocking_by_height() {
        let state = PayloadState {
            position: Point2::ORIGIN,
            z: 0.2789,
            offset: Point2::ORIGIN,
        };
        let at = |h| Disc::with_height(Point2::new(0.1, 0.0), 0.1, h);
        assert!(!payload_blocked(&state, 0.1, &at(0.25)));
        assert!(payload_blocked(&state, 0.1, &at(0.42)));
        assert!(payload_blocked(&state, 0.1, &at(0.0)));
        // equal height blocks
        assert!(payload_blocked(&state, 0.1, &at(0.2789)));
        let far = Disc::with_height(Point2::new(5.0, 0.0), 0.1, 1.0);
        assert!(!payload_blocked(&state, 0.1, &far));
    }
}
