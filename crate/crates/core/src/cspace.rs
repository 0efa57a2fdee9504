//! Discretized configuration space.
//!
//! Centers live on a square lattice of pitch `g` (coarse) plus, near the
//! free-space boundary, a global lattice of pitch `g_min` (densified).
//! Angles are `k * alpha` for `k` in `0..n_angles`. Every stored
//! configuration is valid.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formation::SystemPose;
use crate::geometry::{Point2, Rect};
use crate::scenario::Scenario;
use crate::validity::Validator;

/// Positions closer than this are the same lattice point.
const KEY_QUANTUM: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ScaleError {
    #[error("scale {0} must be finite and positive")]
    NonPositive(&'static str),
    #[error("g_min ({g_min}) exceeds g ({g})")]
    FinerThanCoarse { g: f64, g_min: f64 },
    #[error("alpha must lie in (0, pi], got {0}")]
    AlphaRange(f64),
    #[error("alpha {0} does not close the angle lattice (2*pi/alpha must be within 0.5 of an integer)")]
    AlphaLattice(f64),
}

/// Planar pitches and angle step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationScales {
    pub g: f64,
    pub g_min: f64,
    pub alpha: f64,
}

impl DiscretizationScales {
    pub fn new(g: f64, g_min: f64, alpha: f64) -> Result<Self, ScaleError> {
        let s = DiscretizationScales { g, g_min, alpha };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScaleError> {
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(ScaleError::NonPositive("g"));
        }
        if !(self.g_min > 0.0 && self.g_min.is_finite()) {
            return Err(ScaleError::NonPositive("g_min"));
        }
        if self.g_min > self.g {
            return Err(ScaleError::FinerThanCoarse {
                g: self.g,
                g_min: self.g_min,
            });
        }
        if !(self.alpha > 0.0 && self.alpha <= PI) {
            return Err(ScaleError::AlphaRange(self.alpha));
        }
        let k = TAU / self.alpha;
        if (k - k.round()).abs() > 0.5 || k.round() < 2.0 {
            return Err(ScaleError::AlphaLattice(self.alpha));
        }
        Ok(())
    }

    /// Number of lattice angles, `round(2π / alpha)`.
    pub fn n_angles(&self) -> usize {
        (TAU / self.alpha).round() as usize
    }

    pub fn angle(&self, k: usize) -> f64 {
        k as f64 * self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    Coarse,
    Densified,
}

/// A stored configuration. `formation` indexes the scenario's formation list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub p: Point2,
    pub theta: f64,
    pub angle_index: usize,
    pub formation: usize,
    pub stratum: Stratum,
}

impl Configuration {
    pub fn pose(&self) -> SystemPose {
        SystemPose {
            p: self.p,
            theta: self.theta,
        }
    }
}

/// Which coarse configurations trigger densification of their cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryRule {
    /// Any of the six axis neighbors (±g in x, ±g in y, ±alpha) is invalid
    /// or outside the workspace. Near obstacles almost every cell qualifies,
    /// so the refined grid approaches the full `g_min` lattice.
    AxisNeighbors,
    /// The center has some valid angle while a planar axis neighbor has none
    /// (or lies outside the workspace). Refines only where the projection of
    /// free space onto the plane ends.
    #[default]
    PlanarProjection,
}

impl fmt::Display for BoundaryRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryRule::AxisNeighbors => "axis_neighbors",
            BoundaryRule::PlanarProjection => "planar_projection",
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct GridPoint {
    p: Point2,
    stratum: Stratum,
    /// Coarse lattice indices (only meaningful for coarse points).
    ix: u32,
    iy: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Slot {
    angle: u16,
    formation: u16,
}

/// All valid configurations found at one center.
struct PointConfigs {
    point: GridPoint,
    slots: Vec<Slot>,
    clearance: Vec<f64>,
}

/// The set of stored configurations, grouped by center.
///
/// Vertices are numbered in canonical order: centers by `(y, x)`, then angle
/// index, then formation index.
#[derive(Debug, Clone)]
pub struct ConfigGrid {
    scales: DiscretizationScales,
    workspace: Rect,
    n_angles: usize,
    n_formations: usize,
    /// Coarse lattice extent (point counts along x and y).
    coarse_dims: (usize, usize),
    points: Vec<GridPoint>,
    /// Vertices of point `i` are `point_start[i]..point_start[i + 1]`.
    point_start: Vec<u32>,
    vertex_point: Vec<u32>,
    slots: Vec<Slot>,
    clearance: Vec<f64>,
    lookup: HashMap<(i64, i64), u32>,
}

fn key_of(ws: &Rect, p: Point2) -> (i64, i64) {
    (
        ((p.x - ws.min.x) / KEY_QUANTUM).round() as i64,
        ((p.y - ws.min.y) / KEY_QUANTUM).round() as i64,
    )
}

fn lattice_count(extent: f64, pitch: f64) -> usize {
    (extent / pitch + 1e-9).floor() as usize + 1
}

impl ConfigGrid {
    fn assemble(
        scenario: &Scenario,
        mut pts: Vec<PointConfigs>,
        coarse_dims: (usize, usize),
    ) -> ConfigGrid {
        pts.retain(|pc| !pc.slots.is_empty());
        pts.sort_by(|a, b| {
            a.point
                .p
                .y
                .total_cmp(&b.point.p.y)
                .then(a.point.p.x.total_cmp(&b.point.p.x))
        });
        let total: usize = pts.iter().map(|pc| pc.slots.len()).sum();
        let mut grid = ConfigGrid {
            scales: scenario.scales,
            workspace: scenario.workspace,
            n_angles: scenario.scales.n_angles(),
            n_formations: scenario.formations.len(),
            coarse_dims,
            points: Vec::with_capacity(pts.len()),
            point_start: Vec::with_capacity(pts.len() + 1),
            vertex_point: Vec::with_capacity(total),
            slots: Vec::with_capacity(total),
            clearance: Vec::with_capacity(total),
            lookup: HashMap::with_capacity(pts.len()),
        };
        grid.point_start.push(0);
        for (i, pc) in pts.into_iter().enumerate() {
            grid.lookup.insert(key_of(&grid.workspace, pc.point.p), i as u32);
            grid.points.push(pc.point);
            grid.vertex_point.extend(std::iter::repeat_n(i as u32, pc.slots.len()));
            grid.slots.extend(pc.slots);
            grid.clearance.extend(pc.clearance);
            grid.point_start.push(grid.slots.len() as u32);
        }
        grid
    }

    pub fn scales(&self) -> &DiscretizationScales {
        &self.scales
    }

    pub fn workspace(&self) -> &Rect {
        &self.workspace
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn n_formations(&self) -> usize {
        self.n_formations
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn count(&self, stratum: Stratum) -> usize {
        (0..self.points.len())
            .filter(|&i| self.points[i].stratum == stratum)
            .map(|i| self.point_vertices(i).len())
            .sum()
    }

    pub fn config(&self, v: usize) -> Configuration {
        let pt = &self.points[self.vertex_point[v] as usize];
        let s = self.slots[v];
        Configuration {
            p: pt.p,
            theta: self.scales.angle(s.angle as usize),
            angle_index: s.angle as usize,
            formation: s.formation as usize,
            stratum: pt.stratum,
        }
    }

    pub fn configs(&self) -> impl Iterator<Item = Configuration> + '_ {
        (0..self.len()).map(|v| self.config(v))
    }

    /// Clearance lower bound recorded when the configuration was validated.
    pub fn clearance(&self, v: usize) -> f64 {
        self.clearance[v]
    }

    pub fn point(&self, i: usize) -> Point2 {
        self.points[i].p
    }

    pub fn point_stratum(&self, i: usize) -> Stratum {
        self.points[i].stratum
    }

    pub fn point_of(&self, v: usize) -> usize {
        self.vertex_point[v] as usize
    }

    pub(crate) fn point_vertices(&self, i: usize) -> std::ops::Range<usize> {
        self.point_start[i] as usize..self.point_start[i + 1] as usize
    }

    pub(crate) fn slot(&self, v: usize) -> (usize, usize) {
        (self.slots[v].angle as usize, self.slots[v].formation as usize)
    }

    pub fn point_index(&self, p: Point2) -> Option<usize> {
        self.lookup.get(&key_of(&self.workspace, p)).map(|&i| i as usize)
    }

    /// Vertex stored at center index `i` with the given angle and formation.
    pub fn vertex_at(&self, i: usize, angle: usize, formation: usize) -> Option<usize> {
        let r = self.point_vertices(i);
        let want = Slot {
            angle: angle as u16,
            formation: formation as u16,
        };
        self.slots[r.clone()].binary_search(&want).ok().map(|k| r.start + k)
    }

    /// Vertex for an exact `(p, angle index, formation)` triple.
    pub fn find(&self, p: Point2, angle: usize, formation: usize) -> Option<usize> {
        self.vertex_at(self.point_index(p)?, angle, formation)
    }

    fn coarse_point(&self, ix: i64, iy: i64) -> Option<Point2> {
        let (nx, ny) = self.coarse_dims;
        if ix < 0 || iy < 0 || ix as usize >= nx || iy as usize >= ny {
            return None;
        }
        Some(coarse_position(&self.workspace, self.scales.g, ix as usize, iy as usize))
    }
}

fn coarse_position(ws: &Rect, g: f64, ix: usize, iy: usize) -> Point2 {
    Point2::new(ws.min.x + ix as f64 * g, ws.min.y + iy as f64 * g)
}

fn map_point(v: &Validator<'_>, point: GridPoint, n_angles: usize, alpha: f64) -> PointConfigs {
    let nf = v.scenario().formations.len();
    let mut slots = Vec::new();
    let mut clearance = Vec::new();
    for a in 0..n_angles {
        let pose = SystemPose {
            p: point.p,
            theta: a as f64 * alpha,
        };
        for f in 0..nf {
            if let Some(c) = v.clearance(f, &pose) {
                slots.push(Slot {
                    angle: a as u16,
                    formation: f as u16,
                });
                clearance.push(c);
            }
        }
    }
    PointConfigs {
        point,
        slots,
        clearance,
    }
}

/// Maps every coarse lattice center to its valid configurations.
pub fn enumerate_coarse(scenario: &Scenario) -> ConfigGrid {
    enumerate_with(&Validator::new(scenario))
}

pub fn enumerate_with(v: &Validator<'_>) -> ConfigGrid {
    let scenario = v.scenario();
    let sc = scenario.scales;
    let ws = scenario.workspace;
    let (nx, ny) = coarse_dims(&ws, sc.g);
    let n_angles = sc.n_angles();
    let pts: Vec<PointConfigs> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (ix, iy) = (k % nx, k / nx);
            let point = GridPoint {
                p: coarse_position(&ws, sc.g, ix, iy),
                stratum: Stratum::Coarse,
                ix: ix as u32,
                iy: iy as u32,
            };
            map_point(v, point, n_angles, sc.alpha)
        })
        .collect();
    ConfigGrid::assemble(scenario, pts, (nx, ny))
}

/// Coarse lattice point counts along x and y.
pub fn coarse_dims(ws: &Rect, g: f64) -> (usize, usize) {
    (lattice_count(ws.width(), g), lattice_count(ws.height(), g))
}

/// Lattice angle indices at which formation `f` is valid with center `p`.
pub fn valid_angles(scenario: &Scenario, f: usize, p: Point2) -> Vec<usize> {
    let v = Validator::new(scenario);
    let sc = scenario.scales;
    (0..sc.n_angles())
        .filter(|&a| v.is_valid(f, &SystemPose { p, theta: sc.angle(a) }))
        .collect()
}

/// Whether a configuration at a planar neighbor center is valid, looking it
/// up in the grid when the neighbor is a coarse lattice point.
fn neighbor_valid(grid: &ConfigGrid, v: &Validator<'_>, q: Option<Point2>, angle: usize, f: usize) -> bool {
    match q {
        None => false,
        Some(q) => match grid.point_index(q) {
            Some(i) => grid.vertex_at(i, angle, f).is_some(),
            None => {
                grid.workspace.contains(q)
                    && v.is_valid(f, &SystemPose { p: q, theta: grid.scales.angle(angle) })
            }
        },
    }
}

/// Six-neighbor boundary test for coarse vertex `vtx`.
pub fn boundary_detect(grid: &ConfigGrid, vtx: usize, scenario: &Scenario) -> bool {
    boundary_detect_with(grid, vtx, &Validator::new(scenario))
}

fn boundary_detect_with(grid: &ConfigGrid, vtx: usize, v: &Validator<'_>) -> bool {
    let pt = &grid.points[grid.point_of(vtx)];
    debug_assert_eq!(pt.stratum, Stratum::Coarse);
    let (angle, f) = grid.slot(vtx);
    let (ix, iy) = (pt.ix as i64, pt.iy as i64);
    for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
        if !neighbor_valid(grid, v, grid.coarse_point(ix + dx, iy + dy), angle, f) {
            return true;
        }
    }
    let n = grid.n_angles;
    let i = grid.point_of(vtx);
    grid.vertex_at(i, (angle + 1) % n, f).is_none() || grid.vertex_at(i, (angle + n - 1) % n, f).is_none()
}

fn planar_boundary(grid: &ConfigGrid, i: usize) -> bool {
    let pt = &grid.points[i];
    let (ix, iy) = (pt.ix as i64, pt.iy as i64);
    [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|(dx, dy)| {
        match grid.coarse_point(ix + dx, iy + dy) {
            None => true,
            Some(q) => grid.point_index(q).is_none(),
        }
    })
}

/// Coarse centers whose cells get re-sampled under `rule`.
pub fn boundary_points(grid: &ConfigGrid, v: &Validator<'_>, rule: BoundaryRule) -> Vec<usize> {
    (0..grid.points.len())
        .into_par_iter()
        .filter(|&i| {
            grid.points[i].stratum == Stratum::Coarse
                && match rule {
                    BoundaryRule::AxisNeighbors => grid
                        .point_vertices(i)
                        .any(|vtx| boundary_detect_with(grid, vtx, v)),
                    BoundaryRule::PlanarProjection => planar_boundary(grid, i),
                }
        })
        .collect()
}

/// Re-samples the cells of boundary centers at pitch `g_min` and adds the
/// valid configurations found there.
pub fn densify_boundary(grid: &ConfigGrid, scenario: &Scenario) -> ConfigGrid {
    densify_with(grid, &Validator::new(scenario), BoundaryRule::default())
}

pub fn densify_with(grid: &ConfigGrid, v: &Validator<'_>, rule: BoundaryRule) -> ConfigGrid {
    let scenario = v.scenario();
    let sc = grid.scales;
    let ws = grid.workspace;
    let boundary = boundary_points(grid, v, rule);
    let half = sc.g / 2.0 + 1e-9;
    let mut fine: Vec<(i64, i64)> = Vec::new();
    for &i in &boundary {
        let c = grid.points[i].p;
        let lo_x = ((c.x - half - ws.min.x) / sc.g_min).ceil().max(0.0) as i64;
        let hi_x = ((c.x + half - ws.min.x) / sc.g_min).floor() as i64;
        let lo_y = ((c.y - half - ws.min.y) / sc.g_min).ceil().max(0.0) as i64;
        let hi_y = ((c.y + half - ws.min.y) / sc.g_min).floor() as i64;
        for jy in lo_y..=hi_y {
            for jx in lo_x..=hi_x {
                fine.push((jx, jy));
            }
        }
    }
    fine.sort_unstable();
    fine.dedup();

    // coarse lattice points (stored or not) are never duplicated as fine ones
    let (nx, ny) = grid.coarse_dims;
    let on_coarse = |p: Point2| {
        let fx = (p.x - ws.min.x) / sc.g;
        let fy = (p.y - ws.min.y) / sc.g;
        let (rx, ry) = (fx.round(), fy.round());
        rx >= 0.0
            && ry >= 0.0
            && (rx as usize) < nx
            && (ry as usize) < ny
            && key_of(&ws, coarse_position(&ws, sc.g, rx as usize, ry as usize)) == key_of(&ws, p)
    };
    let n_angles = grid.n_angles;
    let new_pts: Vec<PointConfigs> = fine
        .into_par_iter()
        .filter_map(|(jx, jy)| {
            let p = Point2::new(ws.min.x + jx as f64 * sc.g_min, ws.min.y + jy as f64 * sc.g_min);
            if !ws.contains(p) || on_coarse(p) {
                return None;
            }
            let point = GridPoint {
                p,
                stratum: Stratum::Densified,
                ix: u32::MAX,
                iy: u32::MAX,
            };
            Some(map_point(v, point, n_angles, sc.alpha))
        })
        .collect();

    let mut all: Vec<PointConfigs> = (0..grid.points.len())
        .map(|i| {
            let r = grid.point_vertices(i);
            PointConfigs {
                point: grid.points[i],
                slots: grid.slots[r.clone()].to_vec(),
                clearance: grid.clearance[r].to_vec(),
            }
        })
        .collect();
    all.extend(new_pts);
    ConfigGrid::assemble(scenario, all, grid.coarse_dims)
}
