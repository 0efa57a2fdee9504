//! Formation shapes, placement of robots from a system pose, and the
//! interpolated sweeps used to check moves, rotations and formation switches.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;

/// Offsets must average to the center within this distance.
const CENTROID_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormationError {
    #[error("formation `{0}` has no robots")]
    Empty(String),
    #[error("formation `{id}`: offsets sum to ({x}, {y}), expected the zero vector")]
    NotCentered { id: String, x: f64, y: f64 },
    #[error("formation `{id}`: preference weight must be positive and finite, got {weight}")]
    BadWeight { id: String, weight: f64 },
    #[error("formation `{id}`: {got} cable lengths for {expected} robots")]
    CableCount { id: String, expected: usize, got: usize },
    #[error("formation `{id}`: cable length {length} is not positive")]
    BadCable { id: String, length: f64 },
    #[error("formation `{0}` has a non-finite offset")]
    NonFinite(String),
    #[error("robot count mismatch: {0} vs {1}")]
    RobotCountMismatch(usize, usize),
    #[error("sweep needs at least one step")]
    ZeroSteps,
}

/// A rigid arrangement of robots around the system center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Formation {
    pub id: String,
    /// Robot positions relative to the center at angle 0.
    pub offsets: Vec<Point2>,
    /// Multiplies move and rotate edge costs; smaller means preferred.
    pub preference_weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cable_lengths: Option<Vec<f64>>,
}

impl Formation {
    pub fn new(
        id: impl Into<String>,
        offsets: Vec<Point2>,
        preference_weight: f64,
    ) -> Result<Self, FormationError> {
        let f = Formation {
            id: id.into(),
            offsets,
            preference_weight,
            cable_lengths: None,
        };
        f.validate()?;
        Ok(f)
    }

    /// Regular polygon with side length `side`, counterclockwise, with a
    /// flat bottom edge at angle 0 (a square is axis-aligned).
    pub fn regular_polygon(
        id: impl Into<String>,
        robots: usize,
        side: f64,
        preference_weight: f64,
    ) -> Result<Self, FormationError> {
        let offsets = match robots {
            0 => Vec::new(),
            1 => vec![Point2::ORIGIN],
            2 => vec![Point2::new(side / 2.0, 0.0), Point2::new(-side / 2.0, 0.0)],
            n => {
                let circumradius = side / (2.0 * (PI / n as f64).sin());
                let start = -PI / 2.0 + PI / n as f64;
                (0..n)
                    .map(|k| {
                        let a = start + TAU * k as f64 / n as f64;
                        Point2::new(circumradius * a.cos(), circumradius * a.sin())
                    })
                    .collect()
            }
        };
        Formation::new(id, offsets, preference_weight)
    }

    pub fn with_cables(mut self, lengths: Vec<f64>) -> Result<Self, FormationError> {
        self.cable_lengths = Some(lengths);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), FormationError> {
        if self.offsets.is_empty() {
            return Err(FormationError::Empty(self.id.clone()));
        }
        if self.offsets.iter().any(|o| !o.is_finite()) {
            return Err(FormationError::NonFinite(self.id.clone()));
        }
        let sum = self.offsets.iter().fold(Point2::ORIGIN, |acc, &o| acc + o);
        if sum.norm() > CENTROID_TOLERANCE * self.offsets.len() as f64 {
            return Err(FormationError::NotCentered {
                id: self.id.clone(),
                x: sum.x,
                y: sum.y,
            });
        }
        if !(self.preference_weight > 0.0 && self.preference_weight.is_finite()) {
            return Err(FormationError::BadWeight {
                id: self.id.clone(),
                weight: self.preference_weight,
            });
        }
        if let Some(cables) = &self.cable_lengths {
            if cables.len() != self.offsets.len() {
                return Err(FormationError::CableCount {
                    id: self.id.clone(),
                    expected: self.offsets.len(),
                    got: cables.len(),
                });
            }
            if let Some(&bad) = cables.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
                return Err(FormationError::BadCable {
                    id: self.id.clone(),
                    length: bad,
                });
            }
        }
        Ok(())
    }

    pub fn robot_count(&self) -> usize {
        self.offsets.len()
    }

    /// Largest robot distance from the center.
    pub fn reach(&self) -> f64 {
        self.offsets.iter().map(|o| o.norm()).fold(0.0, f64::max)
    }
}

/// Position of the system center and the shape angle in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawPose", into = "RawPose")]
pub struct SystemPose {
    pub p: Point2,
    pub theta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPose {
    p: Point2,
    theta: f64,
}

impl From<RawPose> for SystemPose {
    fn from(r: RawPose) -> Self {
        SystemPose::new(r.p, r.theta)
    }
}

impl From<SystemPose> for RawPose {
    fn from(s: SystemPose) -> Self {
        RawPose { p: s.p, theta: s.theta }
    }
}

impl SystemPose {
    pub fn new(p: Point2, theta: f64) -> Self {
        SystemPose {
            p,
            theta: normalize_angle(theta),
        }
    }

    pub fn at(x: f64, y: f64, theta: f64) -> Self {
        SystemPose::new(Point2::new(x, y), theta)
    }
}

/// Maps any finite angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid rounds tiny negatives up to exactly TAU
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Signed shorter-arc difference `to - from` in `(-π, π]`.
pub fn angle_delta(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

pub fn pairwise_distances(f: &Formation) -> Vec<Vec<f64>> {
    f.offsets
        .iter()
        .map(|a| f.offsets.iter().map(|b| a.distance(*b)).collect())
        .collect()
}

/// Robot positions for a formation at a pose.
pub fn place(f: &Formation, pose: &SystemPose) -> Vec<Point2> {
    let (s, c) = pose.theta.sin_cos();
    f.offsets.iter().map(|o| pose.p + o.rotated_sc(s, c)).collect()
}

/// Pose at fraction `t` of the way from `a` to `b`: center linear, angle
/// along the shorter arc.
pub fn interpolate_pose(a: &SystemPose, b: &SystemPose, t: f64) -> SystemPose {
    SystemPose::new(a.p.lerp(b.p, t), a.theta + angle_delta(a.theta, b.theta) * t)
}

/// `steps + 1` robot sets linearly interpolating each robot from its slot in
/// `from` to its slot in `to` at the same pose.
pub fn switch_sweep(
    from: &Formation,
    to: &Formation,
    pose: &SystemPose,
    steps: usize,
) -> Result<Vec<Vec<Point2>>, FormationError> {
    if from.robot_count() != to.robot_count() {
        return Err(FormationError::RobotCountMismatch(
            from.robot_count(),
            to.robot_count(),
        ));
    }
    if steps == 0 {
        return Err(FormationError::ZeroSteps);
    }
    let a = place(from, pose);
    let b = place(to, pose);
    let mut out = Vec::with_capacity(steps + 1);
    for i in 0..steps {
        let t = i as f64 / steps as f64;
        out.push(a.iter().zip(&b).map(|(p, q)| p.lerp(*q, t)).collect());
    }
    out.push(b);
    Ok(out)
}

/// `steps + 1` placements of `f` along the interpolated pose path.
pub fn pose_sweep(
    f: &Formation,
    from: &SystemPose,
    to: &SystemPose,
    steps: usize,
) -> Result<Vec<Vec<Point2>>, FormationError> {
    if steps == 0 {
        return Err(FormationError::ZeroSteps);
    }
    let mut out: Vec<Vec<Point2>> = (0..steps)
        .map(|i| place(f, &interpolate_pose(from, to, i as f64 / steps as f64)))
        .collect();
    out.push(place(f, to));
    Ok(out)
}
