//! Configuration and sweep validity for one scenario.
//!
//! [`Validator`] indexes the obstacles once and answers validity queries for
//! configurations and for the sampled sweeps between neighbouring
//! configurations. Besides the yes/no answer it reports a clearance: a lower
//! bound on how far every body can move before touching a blocking obstacle
//! or leaving the workspace. Clearance lets most sweep checks finish without
//! sampling, because no point of a body moving less than the clearance can
//! reach an obstacle.

use crate::carrier::{height_blocks, sheet_equilibrium, CarrierModel, PayloadState};
use crate::formation::{angle_delta, interpolate_pose, place, Formation, SystemPose};
use crate::geometry::{ConvexPolygon, Disc, Point2, Rect};
use crate::scenario::Scenario;

/// Cell pitch of the obstacle index, meters.
const INDEX_CELL: f64 = 0.1;

/// Obstacles bucketed by the cells they can reach.
///
/// Cell `c` lists every obstacle whose disc comes within `reach` of some
/// point of `c`. An obstacle missing from a cell's list is farther than
/// `reach` from every point of the cell.
#[derive(Debug, Clone)]
pub(crate) struct DiscIndex {
    origin: Point2,
    nx: usize,
    ny: usize,
    offsets: Vec<u32>,
    items: Vec<u32>,
    all: Vec<u32>,
}

impl DiscIndex {
    pub(crate) fn new(obstacles: &[Disc], bounds: Rect, reach: f64) -> Self {
        let pad = 1.0;
        let origin = Point2::new(bounds.min.x - pad, bounds.min.y - pad);
        let nx = ((bounds.width() + 2.0 * pad) / INDEX_CELL).ceil() as usize + 1;
        let ny = ((bounds.height() + 2.0 * pad) / INDEX_CELL).ceil() as usize + 1;
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); nx * ny];
        for (k, o) in obstacles.iter().enumerate() {
            let r = reach + o.radius;
            let lo_x = (((o.center.x - r - origin.x) / INDEX_CELL).floor().max(0.0)) as usize;
            let lo_y = (((o.center.y - r - origin.y) / INDEX_CELL).floor().max(0.0)) as usize;
            let hi_x = (((o.center.x + r - origin.x) / INDEX_CELL).floor().max(0.0) as usize).min(nx - 1);
            let hi_y = (((o.center.y + r - origin.y) / INDEX_CELL).floor().max(0.0) as usize).min(ny - 1);
            for iy in lo_y..=hi_y {
                for ix in lo_x..=hi_x {
                    let x0 = origin.x + ix as f64 * INDEX_CELL;
                    let y0 = origin.y + iy as f64 * INDEX_CELL;
                    let dx = (x0 - o.center.x).max(o.center.x - x0 - INDEX_CELL).max(0.0);
                    let dy = (y0 - o.center.y).max(o.center.y - y0 - INDEX_CELL).max(0.0);
                    if dx * dx + dy * dy <= r * r {
                        buckets[iy * nx + ix].push(k as u32);
                    }
                }
            }
        }
        let mut offsets = Vec::with_capacity(nx * ny + 1);
        let mut items = Vec::new();
        offsets.push(0);
        for b in buckets {
            items.extend(b);
            offsets.push(items.len() as u32);
        }
        DiscIndex {
            origin,
            nx,
            ny,
            offsets,
            items,
            all: (0..obstacles.len() as u32).collect(),
        }
    }

    #[inline]
    pub(crate) fn candidates(&self, q: Point2) -> &[u32] {
        let fx = (q.x - self.origin.x) / INDEX_CELL;
        let fy = (q.y - self.origin.y) / INDEX_CELL;
        if fx < 0.0 || fy < 0.0 {
            return &self.all;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        if ix >= self.nx || iy >= self.ny {
            return &self.all;
        }
        let c = iy * self.nx + ix;
        &self.items[self.offsets[c] as usize..self.offsets[c + 1] as usize]
    }
}

#[derive(Debug, Clone)]
struct FormationModel {
    /// False when no pose can be valid (robots overlap each other, or the
    /// sheet cables cannot meet).
    usable: bool,
    /// Payload equilibrium at the identity pose.
    payload: Option<PayloadState>,
    robot_reach: f64,
    /// Farthest body point or body center from the system center, used to
    /// bound how far anything moves under rotation.
    body_reach: f64,
}

/// Validity oracle for one scenario.
pub struct Validator<'s> {
    scenario: &'s Scenario,
    slack: f64,
    robot_index: DiscIndex,
    /// Used for both payload discs and object footprints.
    carrier_index: Option<DiscIndex>,
    models: Vec<FormationModel>,
}

impl<'s> Validator<'s> {
    pub fn new(scenario: &'s Scenario) -> Self {
        let max_reach = scenario
            .formations
            .iter()
            .map(|f| f.reach() + scenario.robot_radius)
            .fold(0.0, f64::max);
        let sc = &scenario.scales;
        let slack = 1.5 * sc.g.max(1.5 * sc.alpha * max_reach) + 0.005;
        Self::with_slack(scenario, slack)
    }

    /// `slack` caps reported clearances; larger values let more sweeps skip
    /// sampling at the price of longer candidate lists.
    pub fn with_slack(scenario: &'s Scenario, slack: f64) -> Self {
        let r = scenario.robot_radius;
        let robot_index = DiscIndex::new(&scenario.obstacles, scenario.workspace, r + slack);
        let mut carrier_index = None;
        let models = scenario
            .formations
            .iter()
            .map(|f| {
                let robot_reach = f.reach();
                let mut usable = robots_separated(&place(f, &SystemPose::at(0.0, 0.0, 0.0)), r);
                let mut payload = None;
                let mut body_reach = robot_reach;
                match &scenario.carrier {
                    CarrierModel::FormationOnly => {}
                    CarrierModel::RigidObject { object_footprint } => {
                        body_reach = body_reach.max(object_footprint.reach());
                    }
                    CarrierModel::SheetPayload { grip_height, .. } => {
                        let anchors: Vec<(Point2, f64)> =
                            f.offsets.iter().map(|o| (*o, *grip_height)).collect();
                        let cables = f.cable_lengths.as_deref().unwrap_or(&[]);
                        match sheet_equilibrium(&anchors, cables) {
                            Ok(state) => {
                                body_reach = body_reach.max(state.offset.norm());
                                payload = Some(state);
                            }
                            Err(_) => usable = false,
                        }
                    }
                }
                FormationModel {
                    usable,
                    payload,
                    robot_reach,
                    body_reach,
                }
            })
            .collect();
        match &scenario.carrier {
            CarrierModel::FormationOnly => {}
            CarrierModel::RigidObject { object_footprint } => {
                carrier_index = Some(DiscIndex::new(
                    &scenario.obstacles,
                    scenario.workspace,
                    object_footprint.reach() + slack,
                ));
            }
            CarrierModel::SheetPayload { payload_radius, .. } => {
                carrier_index = Some(DiscIndex::new(
                    &scenario.obstacles,
                    scenario.workspace,
                    payload_radius + slack,
                ));
            }
        }
        Validator {
            scenario,
            slack,
            robot_index,
            carrier_index,
            models,
        }
    }

    pub fn scenario(&self) -> &'s Scenario {
        self.scenario
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn formation(&self, f: usize) -> &'s Formation {
        &self.scenario.formations[f]
    }

    /// Payload equilibrium of formation `f` at `pose` (sheet carrier only).
    pub fn payload_at(&self, f: usize, pose: &SystemPose) -> Option<PayloadState> {
        self.models[f].payload.map(|s| {
            let offset = s.offset.rotated(pose.theta);
            PayloadState {
                position: pose.p + offset,
                z: s.z,
                offset,
            }
        })
    }

    /// Largest distance of a robot center from the system center.
    pub fn robot_reach(&self, f: usize) -> f64 {
        self.models[f].robot_reach
    }

    pub fn is_valid(&self, f: usize, pose: &SystemPose) -> bool {
        self.clearance(f, pose).is_some()
    }

    /// `None` when the configuration is invalid, otherwise a lower bound on
    /// the clearance of every body (capped at the slack).
    pub fn clearance(&self, f: usize, pose: &SystemPose) -> Option<f64> {
        let model = &self.models[f];
        if !model.usable {
            return None;
        }
        let (s, c) = pose.theta.sin_cos();
        let mut best = self.slack;
        for o in &self.scenario.formations[f].offsets {
            best = best.min(self.robot_clearance(pose.p + o.rotated_sc(s, c))?);
        }
        best = best.min(self.carrier_clearance(pose, model.payload.map(|st| {
            (pose.p + st.offset.rotated_sc(s, c), st.z)
        }))?);
        Some(best)
    }

    /// Clearance for explicit robot positions (not necessarily a rigid
    /// placement). The sheet payload is re-solved from the positions.
    pub fn positions_clearance(&self, robots: &[Point2], pose: &SystemPose, f: usize) -> Option<f64> {
        if !robots_separated(robots, self.scenario.robot_radius) {
            return None;
        }
        let mut best = self.slack;
        for r in robots {
            best = best.min(self.robot_clearance(*r)?);
        }
        let payload = match &self.scenario.carrier {
            CarrierModel::SheetPayload { grip_height, .. } => {
                let anchors: Vec<(Point2, f64)> = robots.iter().map(|r| (*r, *grip_height)).collect();
                let cables = self.scenario.formations[f].cable_lengths.as_deref()?;
                let st = sheet_equilibrium(&anchors, cables).ok()?;
                Some((st.position, st.z))
            }
            _ => None,
        };
        best = best.min(self.carrier_clearance(pose, payload)?);
        Some(best)
    }

    #[inline]
    fn robot_clearance(&self, c: Point2) -> Option<f64> {
        let r = self.scenario.robot_radius;
        let wall = self.scenario.workspace.inner_clearance(c) - r;
        if wall < 0.0 {
            return None;
        }
        let mut best = wall;
        for &k in self.robot_index.candidates(c) {
            let o = &self.scenario.obstacles[k as usize];
            let sum = r + o.radius;
            let d2 = c.distance_sq(o.center);
            if d2 < sum * sum {
                return None;
            }
            best = best.min(d2.sqrt() - sum);
        }
        Some(best.max(0.0))
    }

    /// Object footprint or payload clearance. `payload` is the payload plan
    /// position and height when the carrier is a sheet.
    fn carrier_clearance(&self, pose: &SystemPose, payload: Option<(Point2, f64)>) -> Option<f64> {
        let index = match &self.carrier_index {
            Some(i) => i,
            None => return Some(f64::INFINITY),
        };
        let mut best = f64::INFINITY;
        match &self.scenario.carrier {
            CarrierModel::FormationOnly => {}
            CarrierModel::RigidObject { object_footprint } => {
                let (s, c) = (-pose.theta).sin_cos();
                for &k in index.candidates(pose.p) {
                    let o = &self.scenario.obstacles[k as usize];
                    let local = (o.center - pose.p).rotated_sc(s, c);
                    let d = footprint_distance(object_footprint, local);
                    if d < o.radius {
                        return None;
                    }
                    best = best.min(d - o.radius);
                }
            }
            CarrierModel::SheetPayload { payload_radius, .. } => {
                let (pos, z) = payload?;
                for &k in index.candidates(pos) {
                    let o = &self.scenario.obstacles[k as usize];
                    if !height_blocks(o.height, z) {
                        continue;
                    }
                    let sum = payload_radius + o.radius;
                    let d2 = pos.distance_sq(o.center);
                    if d2 < sum * sum {
                        return None;
                    }
                    best = best.min(d2.sqrt() - sum);
                }
            }
        }
        Some(best.max(0.0))
    }

    /// Sampled check of a move or rotation of formation `f` between two
    /// valid poses. `known` may carry the clearance of either endpoint.
    pub fn sweep_clear(
        &self,
        f: usize,
        a: &SystemPose,
        b: &SystemPose,
        step: f64,
        known: Option<f64>,
    ) -> bool {
        let model = &self.models[f];
        if !model.usable {
            return false;
        }
        let formation = &self.scenario.formations[f];
        let shift = a.p.distance(b.p);
        let turn = angle_delta(a.theta, b.theta).abs();

        let chord = |rho: f64| shift.max(2.0 * rho * (turn / 2.0).sin());
        let max_disp = formation
            .offsets
            .iter()
            .map(|o| chord(o.norm()))
            .fold(0.0, f64::max)
            .max(model.payload.map_or(0.0, |s| chord(s.offset.norm())));
        let n = sample_count(max_disp, step);

        // margin covering the motion between consecutive samples
        let interval = |rho: f64| (shift + rho * turn) / n as f64;
        let sagitta = |rho: f64| rho * (1.0 - (turn / (2.0 * n as f64)).cos());
        let disc_margin = |radius: f64, rho: f64| {
            let l = interval(rho);
            (radius * radius + l * l / 4.0).sqrt() - radius + sagitta(rho)
        };
        let mut margin = disc_margin(self.scenario.robot_radius, model.robot_reach);
        match &self.scenario.carrier {
            CarrierModel::FormationOnly => {}
            CarrierModel::RigidObject { object_footprint } => {
                margin = margin.max(interval(object_footprint.reach()) / 2.0);
            }
            CarrierModel::SheetPayload { payload_radius, .. } => {
                let rho = model.payload.map_or(0.0, |s| s.offset.norm());
                margin = margin.max(disc_margin(*payload_radius, rho));
            }
        }

        // every body point travels at most this far over the whole sweep
        let travel = shift + model.body_reach * turn;
        if let Some(c) = known {
            if c - travel >= margin {
                return true;
            }
        }
        (0..=n).all(|i| {
            let pose = if i == n {
                *b
            } else {
                interpolate_pose(a, b, i as f64 / n as f64)
            };
            self.clearance(f, &pose).is_some_and(|c| c >= margin)
        })
    }

    /// Sampled check of switching from formation `fa` to `fb` at `pose`,
    /// each robot moving on a straight line.
    pub fn switch_clear(&self, fa: usize, fb: usize, pose: &SystemPose, step: f64) -> bool {
        let (from, to) = (&self.scenario.formations[fa], &self.scenario.formations[fb]);
        if from.robot_count() != to.robot_count() {
            return false;
        }
        let a = place(from, pose);
        let b = place(to, pose);
        let r = self.scenario.robot_radius;
        if !segments_separated(&a, &b, r) {
            return false;
        }
        let max_disp = a
            .iter()
            .zip(&b)
            .map(|(p, q)| p.distance(*q))
            .fold(0.0, f64::max);
        let n = sample_count(max_disp, step);
        let l = max_disp / n as f64;
        let robot_margin = (r * r + l * l / 4.0).sqrt() - r;
        let sets: Vec<Vec<Point2>> = (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                a.iter().zip(&b).map(|(p, q)| if i == n { *q } else { p.lerp(*q, t) }).collect()
            })
            .collect();
        match &self.scenario.carrier {
            CarrierModel::SheetPayload {
                payload_radius,
                grip_height,
            } => {
                // cables keep their lengths when both formations agree; otherwise
                // they are blended linearly
                let ca = from.cable_lengths.as_deref().unwrap_or(&[]);
                let cb = to.cable_lengths.as_deref().unwrap_or(&[]);
                if ca.len() != cb.len() {
                    return false;
                }
                let mut states = Vec::with_capacity(n + 1);
                for (i, set) in sets.iter().enumerate() {
                    let t = i as f64 / n as f64;
                    let cables: Vec<f64> = ca.iter().zip(cb).map(|(x, y)| x + (y - x) * t).collect();
                    let anchors: Vec<(Point2, f64)> = set.iter().map(|p| (*p, *grip_height)).collect();
                    match sheet_equilibrium(&anchors, &cables) {
                        Ok(s) => states.push(s),
                        Err(_) => return false,
                    }
                }
                // the payload path between samples is not straight; double the
                // observed chord
                let mut payload_margin: f64 = 0.0;
                let mut max_dz: f64 = 0.0;
                for w in states.windows(2) {
                    let l = 2.0 * w[0].position.distance(w[1].position);
                    payload_margin =
                        payload_margin.max((payload_radius.powi(2) + l * l / 4.0).sqrt() - payload_radius);
                    max_dz = max_dz.max((w[1].z - w[0].z).abs());
                }
                let margin = robot_margin.max(payload_margin);
                (0..=n).all(|i| {
                    let mut best = self.slack;
                    for p in &sets[i] {
                        match self.robot_clearance(*p) {
                            Some(c) => best = best.min(c),
                            None => return false,
                        }
                    }
                    // an obstacle the payload clears at one sample may block just
                    // before the next, so test against the lowest nearby height
                    let lo = i.saturating_sub(1);
                    let hi = (i + 1).min(n);
                    let z = states[lo..=hi].iter().map(|s| s.z).fold(f64::INFINITY, f64::min) - max_dz;
                    match self.carrier_clearance(pose, Some((states[i].position, z))) {
                        Some(c) => best.min(c) >= margin,
                        None => false,
                    }
                })
            }
            _ => sets.iter().all(|set| {
                let mut best = self.slack;
                for p in set {
                    match self.robot_clearance(*p) {
                        Some(c) => best = best.min(c),
                        None => return false,
                    }
                }
                match self.carrier_clearance(pose, None) {
                    Some(c) => best.min(c) >= robot_margin,
                    None => false,
                }
            }),
        }
    }
}

fn sample_count(max_disp: f64, step: f64) -> usize {
    ((max_disp / step).ceil() as usize).max(2)
}

fn footprint_distance(poly: &ConvexPolygon, q: Point2) -> f64 {
    poly.distance(q)
}

/// No two robot discs overlap (tangency allowed).
pub(crate) fn robots_separated(robots: &[Point2], radius: f64) -> bool {
    let lim = 4.0 * radius * radius;
    robots.iter().enumerate().all(|(i, p)| robots[i + 1..].iter().all(|q| p.distance_sq(*q) >= lim))
}

/// Robots moving on straight lines from `a[k]` to `b[k]` simultaneously never overlap.
fn segments_separated(a: &[Point2], b: &[Point2], radius: f64) -> bool {
    let lim = 4.0 * radius * radius;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            // relative position is affine in t; minimise its squared norm on [0, 1]
            let d0 = a[i] - a[j];
            let d1 = b[i] - b[j];
            let v = d1 - d0;
            let vv = v.norm_sq();
            let t = if vv > 0.0 { (-d0.dot(v) / vv).clamp(0.0, 1.0) } else { 0.0 };
            if (d0 + v * t).norm_sq() < lim {
                return false;
            }
        }
    }
    true
}
