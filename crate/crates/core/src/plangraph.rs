//! Connectivity graph over stored configurations and path search.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cspace::{densify_with, enumerate_with, BoundaryRule, ConfigGrid, Configuration, Stratum};
use crate::formation::{angle_delta, place, SystemPose};
use crate::geometry::Point2;
use crate::scenario::{Endpoint, Scenario};
use crate::validity::Validator;

/// What separates the two endpoints of a candidate pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Move,
    Rotate,
    Switch,
}

pub fn edge_kind(a: &Configuration, b: &Configuration) -> EdgeKind {
    if a.formation != b.formation {
        EdgeKind::Switch
    } else if a.angle_index != b.angle_index {
        EdgeKind::Rotate
    } else {
        EdgeKind::Move
    }
}

/// Undirected graph with CSR adjacency. Vertex ids are grid vertex ids.
#[derive(Debug, Clone)]
pub struct PlanGraph {
    n: usize,
    edges: Vec<(u32, u32)>,
    adj_start: Vec<u32>,
    adj: Vec<(u32, u32)>,
    costs: Option<Vec<f64>>,
}

impl PlanGraph {
    /// Builds a graph from undirected edges. Self-loops and repeated edges
    /// are dropped; each kept edge is stored as `(min, max)`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> PlanGraph {
        let mut e: Vec<(u32, u32)> = edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| {
                assert!(a < n && b < n, "edge ({a}, {b}) out of range for {n} vertices");
                (a.min(b) as u32, a.max(b) as u32)
            })
            .collect();
        e.sort_unstable();
        e.dedup();
        Self::from_sorted(n, e)
    }

    fn from_sorted(n: usize, edges: Vec<(u32, u32)>) -> PlanGraph {
        let mut deg = vec![0u32; n + 1];
        for &(a, b) in &edges {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        let mut adj_start = Vec::with_capacity(n + 1);
        adj_start.push(0u32);
        for d in &deg[..n] {
            adj_start.push(adj_start.last().unwrap() + d);
        }
        let mut fill: Vec<u32> = adj_start[..n].to_vec();
        let mut adj = vec![(0u32, 0u32); edges.len() * 2];
        for (k, &(a, b)) in edges.iter().enumerate() {
            adj[fill[a as usize] as usize] = (b, k as u32);
            fill[a as usize] += 1;
            adj[fill[b as usize] as usize] = (a, k as u32);
            fill[b as usize] += 1;
        }
        PlanGraph {
            n,
            edges,
            adj_start,
            adj,
            costs: None,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).any(|(u, _)| u == b)
    }

    /// `(neighbor, edge index)` pairs.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj[self.adj_start[v] as usize..self.adj_start[v + 1] as usize]
            .iter()
            .map(|&(u, e)| (u as usize, e as usize))
    }

    pub fn costs(&self) -> Option<&[f64]> {
        self.costs.as_deref()
    }

    /// Sets edge costs (one per edge, each positive).
    pub fn set_costs(&mut self, costs: Vec<f64>) {
        assert_eq!(costs.len(), self.edges.len());
        assert!(costs.iter().all(|&c| c > 0.0), "edge costs must be positive");
        self.costs = Some(costs);
    }
}

/// Pairs of stored configurations differing in one dimension:
/// planar neighbors, adjacent angles, or formations at the same pose.
pub fn candidate_pairs(grid: &ConfigGrid) -> Vec<(usize, usize)> {
    candidate_pairs_u32(grid)
        .into_iter()
        .map(|(a, b)| (a as usize, b as usize))
        .collect()
}

/// Sorted candidate pairs. Every pair emitted for center `i` has its lower
/// vertex at `i`, so sorting per center sorts the whole list.
fn candidate_pairs_u32(grid: &ConfigGrid) -> Vec<(u32, u32)> {
    let planar = planar_neighbors(grid);
    (0..grid.point_count())
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut v = point_candidates(grid, i, &planar[i]);
            v.sort_unstable();
            v
        })
        .collect()
}

/// For each center, the centers at planar distance at most `g` with a
/// larger index.
fn planar_neighbors(grid: &ConfigGrid) -> Vec<Vec<u32>> {
    let g = grid.scales().g;
    let lim = g + 1e-9;
    let ws = grid.workspace();
    let cell = |p: Point2| {
        (
            ((p.x - ws.min.x) / g).floor() as i64,
            ((p.y - ws.min.y) / g).floor() as i64,
        )
    };
    let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    for i in 0..grid.point_count() {
        buckets.entry(cell(grid.point(i))).or_default().push(i as u32);
    }
    (0..grid.point_count())
        .into_par_iter()
        .map(|i| {
            let p = grid.point(i);
            let (cx, cy) = cell(p);
            let mut out = Vec::new();
            // rounding can put a neighbor exactly g away two buckets over
            for dy in -2..=2 {
                for dx in -2..=2 {
                    if let Some(b) = buckets.get(&(cx + dx, cy + dy)) {
                        for &j in b {
                            if j as usize > i && p.distance(grid.point(j as usize)) <= lim {
                                out.push(j);
                            }
                        }
                    }
                }
            }
            out.sort_unstable();
            out
        })
        .collect()
}

fn point_candidates(grid: &ConfigGrid, i: usize, planar: &[u32]) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let r = grid.point_vertices(i);
    let n = grid.n_angles();
    for v in r.clone() {
        let (a, f) = grid.slot(v);
        // rotation to the next angle on the circle, plus the wrap when that
        // vertex sits before us
        let next = (a + 1) % n;
        if next != a {
            if let Some(u) = grid.vertex_at(i, next, f) {
                if u > v || (next == 0 && n > 2) {
                    out.push((v.min(u) as u32, v.max(u) as u32));
                }
            }
        }
        for u in v + 1..r.end {
            let (a2, f2) = grid.slot(u);
            if a2 != a {
                break;
            }
            if f2 != f {
                out.push((v as u32, u as u32));
            }
        }
    }
    for &j in planar {
        // both vertex lists are sorted by (angle, formation)
        let rj = grid.point_vertices(j as usize);
        let (mut x, mut y) = (r.start, rj.start);
        while x < r.end && y < rj.end {
            match grid.slot(x).cmp(&grid.slot(y)) {
                Ordering::Less => x += 1,
                Ordering::Greater => y += 1,
                Ordering::Equal => {
                    out.push((x as u32, y as u32));
                    x += 1;
                    y += 1;
                }
            }
        }
    }
    out
}

/// Sampled connectivity test for one candidate pair.
pub fn connection_detect(
    validator: &Validator<'_>,
    a: &Configuration,
    b: &Configuration,
    step: f64,
    known_clearance: Option<f64>,
) -> bool {
    if a.formation != b.formation {
        validator.switch_clear(a.formation, b.formation, &a.pose(), step)
    } else {
        validator.sweep_clear(a.formation, &a.pose(), &b.pose(), step, known_clearance)
    }
}

/// Keeps the candidate pairs whose sweeps are clear.
pub fn build_graph(grid: &ConfigGrid, validator: &Validator<'_>, step: f64) -> PlanGraph {
    let pairs = candidate_pairs_u32(grid);
    let keep: Vec<bool> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (a, b) = (a as usize, b as usize);
            let known = grid.clearance(a).max(grid.clearance(b));
            connection_detect(validator, &grid.config(a), &grid.config(b), step, Some(known))
        })
        .collect();
    let edges = pairs
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(e, _)| e)
        .collect();
    PlanGraph::from_sorted(grid.len(), edges)
}

/// Breadth-first reachability.
pub fn feasible(graph: &PlanGraph, start: usize, goal: usize) -> bool {
    if start == goal {
        return true;
    }
    let mut seen = vec![false; graph.vertex_count()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(v) = queue.pop_front() {
        for (u, _) in graph.neighbors(v) {
            if u == goal {
                return true;
            }
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    false
}

/// Summed robot displacement between two configurations.
pub fn robot_displacement(scenario: &Scenario, a: &Configuration, b: &Configuration) -> f64 {
    let (sa, ca) = a.theta.sin_cos();
    let (sb, cb) = b.theta.sin_cos();
    displacement_sc(scenario, a, b, (sa, ca), (sb, cb))
}

fn displacement_sc(
    scenario: &Scenario,
    a: &Configuration,
    b: &Configuration,
    (sa, ca): (f64, f64),
    (sb, cb): (f64, f64),
) -> f64 {
    let fa = &scenario.formations[a.formation].offsets;
    let fb = &scenario.formations[b.formation].offsets;
    fa.iter()
        .zip(fb)
        .map(|(oa, ob)| (a.p + oa.rotated_sc(sa, ca)).distance(b.p + ob.rotated_sc(sb, cb)))
        .sum()
}

/// Edge cost: weighted robot travel for moves and rotations, plain robot
/// travel for formation switches.
pub fn edge_cost(scenario: &Scenario, a: &Configuration, b: &Configuration) -> f64 {
    let d = robot_displacement(scenario, a, b);
    match edge_kind(a, b) {
        EdgeKind::Switch => d,
        EdgeKind::Move | EdgeKind::Rotate => scenario.formations[a.formation].preference_weight * d,
    }
}

pub fn assign_costs(graph: &mut PlanGraph, grid: &ConfigGrid, scenario: &Scenario) {
    let trig: Vec<(f64, f64)> = (0..grid.n_angles()).map(|k| grid.scales().angle(k).sin_cos()).collect();
    let costs = graph
        .edges
        .par_iter()
        .map(|&(a, b)| {
            let (a, b) = (grid.config(a as usize), grid.config(b as usize));
            let d = displacement_sc(scenario, &a, &b, trig[a.angle_index], trig[b.angle_index]);
            match edge_kind(&a, &b) {
                EdgeKind::Switch => d,
                _ => scenario.formations[a.formation].preference_weight * d,
            }
        })
        .collect();
    graph.set_costs(costs);
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    v: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        // min-heap on (dist, v)
        o.dist.total_cmp(&self.dist).then(o.v.cmp(&self.v))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Dijkstra over assigned costs. Returns the vertex sequence and its cost.
/// Among equal-cost predecessors the lower vertex index wins.
pub fn shortest_path(graph: &PlanGraph, start: usize, goal: usize) -> Option<(Vec<usize>, f64)> {
    let costs = graph.costs.as_ref().expect("costs must be assigned before searching");
    let n = graph.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(Entry { dist: 0.0, v: start });
    while let Some(Entry { dist: d, v }) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        if v == goal {
            break;
        }
        for (u, e) in graph.neighbors(v) {
            if done[u] {
                continue;
            }
            let nd = d + costs[e];
            if nd < dist[u] || (nd == dist[u] && v < pred[u]) {
                if nd < dist[u] {
                    dist[u] = nd;
                    heap.push(Entry { dist: nd, v: u });
                }
                pred[u] = v;
            }
        }
    }
    if !done[goal] {
        return None;
    }
    let mut path = vec![goal];
    let mut v = goal;
    while v != start {
        v = pred[v];
        path.push(v);
    }
    path.reverse();
    Some((path, dist[goal]))
}

/// Per-robot waypoint lists along a configuration path.
pub fn extract_robot_paths(scenario: &Scenario, path: &[Configuration]) -> Vec<Vec<Point2>> {
    let n = path
        .first()
        .map_or(0, |c| scenario.formations[c.formation].robot_count());
    let mut out = vec![Vec::with_capacity(path.len()); n];
    for c in path {
        for (k, r) in place(&scenario.formations[c.formation], &c.pose()).into_iter().enumerate() {
            out[k].push(r);
        }
    }
    out
}

pub fn polyline_length(pts: &[Point2]) -> f64 {
    pts.windows(2).map(|w| w[0].distance(w[1])).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Failure {
    /// No stored configuration close enough to the start pose.
    SnapStart,
    SnapGoal,
    /// Start and goal are in different components.
    Unreachable,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanStats {
    pub vertices: usize,
    pub coarse_vertices: usize,
    pub densified_vertices: usize,
    pub edges: usize,
    pub mapping_seconds: f64,
    pub planning_seconds: f64,
    pub mean_robot_path_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanResult {
    pub feasible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    pub config_path: Vec<Configuration>,
    pub robot_paths: Vec<Vec<Point2>>,
    pub total_cost: f64,
    pub stats: PlanStats,
}

impl PlanResult {
    fn failed(failure: Failure, stats: PlanStats) -> PlanResult {
        PlanResult {
            feasible: false,
            failure: Some(failure),
            config_path: Vec::new(),
            robot_paths: Vec::new(),
            total_cost: 0.0,
            stats,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerOptions {
    pub densify: bool,
    pub boundary_rule: BoundaryRule,
    /// Sweep sampling step; `g_min / 2` when unset.
    pub sweep_step: Option<f64>,
}

impl Default for PlannerOptions {
    fn default() -> Self {
        PlannerOptions {
            densify: true,
            boundary_rule: BoundaryRule::default(),
            sweep_step: None,
        }
    }
}

/// Snaps a requested pose to a stored vertex of the same formation within
/// `g` in the plane and `alpha` in angle, preferring the one that moves the
/// robots least on average. Coarse vertices win over densified ones, so
/// refining a grid never moves the endpoints of a coarse plan.
pub fn snap(grid: &ConfigGrid, scenario: &Scenario, ep: &Endpoint) -> Option<usize> {
    snap_in(grid, scenario, ep, Stratum::Coarse).or_else(|| snap_in(grid, scenario, ep, Stratum::Densified))
}

fn snap_in(grid: &ConfigGrid, scenario: &Scenario, ep: &Endpoint, stratum: Stratum) -> Option<usize> {
    let f = scenario.formation_index(&ep.formation)?;
    let sc = grid.scales();
    let formation = &scenario.formations[f];
    let want = place(formation, &ep.pose);
    let mut best: Option<(f64, usize)> = None;
    for i in 0..grid.point_count() {
        if grid.point_stratum(i) != stratum || grid.point(i).distance(ep.pose.p) > sc.g + 1e-9 {
            continue;
        }
        for v in grid.point_vertices(i) {
            let (a, vf) = grid.slot(v);
            if vf != f || angle_delta(ep.pose.theta, sc.angle(a)).abs() > sc.alpha + 1e-12 {
                continue;
            }
            let got = place(formation, &SystemPose { p: grid.point(i), theta: sc.angle(a) });
            let d = want.iter().zip(&got).map(|(p, q)| p.distance(*q)).sum::<f64>() / want.len() as f64;
            if best.is_none_or(|(bd, bv)| d < bd || (d == bd && v < bv)) {
                best = Some((d, v));
            }
        }
    }
    best.map(|(_, v)| v)
}

/// Discretization output kept for inspection.
pub struct Mapping {
    pub grid: ConfigGrid,
    pub seconds: f64,
}

pub fn map_scenario(validator: &Validator<'_>, options: &PlannerOptions) -> Mapping {
    let t = Instant::now();
    let coarse = enumerate_with(validator);
    let grid = if options.densify {
        densify_with(&coarse, validator, options.boundary_rule)
    } else {
        coarse
    };
    Mapping {
        grid,
        seconds: t.elapsed().as_secs_f64(),
    }
}

/// Discretizes the scenario, builds the graph, and searches it.
pub fn plan(scenario: &Scenario, options: &PlannerOptions) -> PlanResult {
    let validator = Validator::new(scenario);
    let mapping = map_scenario(&validator, options);
    plan_on(scenario, &validator, &mapping, options)
}

pub fn plan_on(
    scenario: &Scenario,
    validator: &Validator<'_>,
    mapping: &Mapping,
    options: &PlannerOptions,
) -> PlanResult {
    let grid = &mapping.grid;
    let t = Instant::now();
    let mut stats = PlanStats {
        vertices: grid.len(),
        coarse_vertices: grid.count(Stratum::Coarse),
        densified_vertices: grid.count(Stratum::Densified),
        mapping_seconds: mapping.seconds,
        ..PlanStats::default()
    };
    let step = options.sweep_step.unwrap_or(scenario.scales.g_min / 2.0);
    let Some(start) = snap(grid, scenario, &scenario.start) else {
        stats.planning_seconds = t.elapsed().as_secs_f64();
        return PlanResult::failed(Failure::SnapStart, stats);
    };
    let Some(goal) = snap(grid, scenario, &scenario.goal) else {
        stats.planning_seconds = t.elapsed().as_secs_f64();
        return PlanResult::failed(Failure::SnapGoal, stats);
    };
    let mut graph = build_graph(grid, validator, step);
    stats.edges = graph.edge_count();
    log::debug!(
        "graph: {} vertices ({} densified), {} edges",
        stats.vertices,
        stats.densified_vertices,
        stats.edges
    );
    if !feasible(&graph, start, goal) {
        stats.planning_seconds = t.elapsed().as_secs_f64();
        return PlanResult::failed(Failure::Unreachable, stats);
    }
    assign_costs(&mut graph, grid, scenario);
    let Some((ids, total_cost)) = shortest_path(&graph, start, goal) else {
        stats.planning_seconds = t.elapsed().as_secs_f64();
        return PlanResult::failed(Failure::Unreachable, stats);
    };
    let config_path: Vec<Configuration> = ids.iter().map(|&v| grid.config(v)).collect();
    let robot_paths = extract_robot_paths(scenario, &config_path);
    stats.mean_robot_path_length =
        robot_paths.iter().map(|r| polyline_length(r)).sum::<f64>() / robot_paths.len().max(1) as f64;
    stats.planning_seconds = t.elapsed().as_secs_f64();
    PlanResult {
        feasible: true,
        failure: None,
        config_path,
        robot_paths,
        total_cost,
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carrier::CarrierModel;
    use crate::cspace::{enumerate_coarse, DiscretizationScales};
    use crate::formation::Formation;
    use crate::geometry::{Disc, Rect};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    #[test]
    fn corridor_is_a_path_graph() {
        // lattice x = 0.05..0.45 and y = 0.05 are the only valid centers
        let solo = Formation::new("solo", vec![Point2::ORIGIN], 1.0).unwrap();
        let s = Scenario {
            workspace: Rect::new(Point2::new(-0.05, -0.05), Point2::new(0.55, 0.15)).unwrap(),
            robot_radius: 0.04,
            formations: vec![solo],
            carrier: CarrierModel::FormationOnly,
            obstacles: vec![],
            start: Endpoint::new(SystemPose::at(0.05, 0.05, 0.0), "solo"),
            goal: Endpoint::new(SystemPose::at(0.45, 0.05, 0.0), "solo"),
            scales: DiscretizationScales::new(0.1, 0.1, std::f64::consts::PI).unwrap(),
        };
        assert_eq!(s.scales.n_angles(), 2);
        let grid = enumerate_coarse(&s);
        assert_eq!(grid.point_count(), 5);
        let g = build_graph(&grid, &Validator::new(&s), 0.05);
        let moves_at_zero = g
            .edges()
            .iter()
            .filter(|&&(a, b)| edge_kind(&grid.config(a as usize), &grid.config(b as usize)) == EdgeKind::Move)
            .filter(|&&(a, _)| grid.config(a as usize).angle_index == 0)
            .count();
        assert_eq!(moves_at_zero, 4);
        // with two angles each center has one rotation edge, not two
        assert_eq!(g.edge_count(), 2 * 4 + 5);
    }

    #[test]
    fn empty_lattice_has_product_structure() {
        let solo = Formation::new("solo", vec![Point2::ORIGIN], 1.0).unwrap();
        let s = Scenario {
            workspace: Rect::new(Point2::new(-0.1, -0.1), Point2::new(0.4, 0.3)).unwrap(),
            robot_radius: 0.09,
            formations: vec![solo.clone(), Formation { id: "solo2".into(), ..solo }],
            carrier: CarrierModel::FormationOnly,
            obstacles: vec![],
            start: Endpoint::new(SystemPose::at(0.0, 0.0, 0.0), "solo"),
            goal: Endpoint::new(SystemPose::at(0.3, 0.2, 0.0), "solo"),
            scales: DiscretizationScales::new(0.1, 0.1, TAU / 6.0).unwrap(),
        };
        let grid = enumerate_coarse(&s);
        // 4 x 3 centers, 6 angles, 2 formations
        assert_eq!(grid.len(), 12 * 6 * 2);
        let g = build_graph(&grid, &Validator::new(&s), 0.05);
        let planar = (3 * 3 + 4 * 2) * 6 * 2;
        let rot = 12 * 6 * 2;
        let switch = 12 * 6;
        assert_eq!(g.edge_count(), planar + rot + switch);
    }

    #[test]
    fn obstacle_wall_splits_components() {
        let solo = Formation::new("solo", vec![Point2::ORIGIN], 1.0).unwrap();
        let mut s = Scenario {
            workspace: Rect::sized(2.0, 2.0).unwrap(),
            robot_radius: 0.05,
            formations: vec![solo],
            carrier: CarrierModel::FormationOnly,
            obstacles: vec![],
            start: Endpoint::new(SystemPose::at(0.5, 1.0, 0.0), "solo"),
            goal: Endpoint::new(SystemPose::at(1.5, 1.0, 0.0), "solo"),
            scales: DiscretizationScales::new(0.1, 0.05, TAU / 4.0).unwrap(),
        };
        // a wall of small discs at x = 1.05, spaced so gaps stay below the robot
        s.obstacles = (0..=50).map(|k| Disc::new(Point2::new(1.05, k as f64 * 0.04), 0.02)).collect();
        let grid = enumerate_coarse(&s);
        let v = Validator::new(&s);
        let g = build_graph(&grid, &v, 0.025);
        for &(a, b) in g.edges() {
            let (pa, pb) = (grid.config(a as usize).p, grid.config(b as usize).p);
            assert!((pa.x < 1.05) == (pb.x < 1.05), "edge crosses the wall");
        }
        let start = grid.find(Point2::new(0.5, 1.0), 0, 0).unwrap();
        let goal = grid.find(Point2::new(1.5, 1.0), 0, 0).unwrap();
        assert!(!feasible(&g, start, goal));
        assert!(components(&g) >= 2);
    }

    fn components(g: &PlanGraph) -> usize {
        let mut uf = UnionFind::new(g.vertex_count());
        for &(a, b) in g.edges() {
            uf.union(a as usize, b as usize);
        }
        (0..g.vertex_count()).filter(|&v| uf.find(v) == v).count()
    }

    struct UnionFind(Vec<usize>);

    impl UnionFind {
        fn new(n: usize) -> Self {
            UnionFind((0..n).collect())
        }
        fn find(&mut self, v: usize) -> usize {
            let mut r = v;
            while self.0[r] != r {
                r = self.0[r];
            }
            let mut v = v;
            while self.0[v] != r {
                let next = self.0[v];
                self.0[v] = r;
                v = next;
            }
            r
        }
        fn union(&mut self, a: usize, b: usize) {
            let (ra, rb) = (self.find(a), self.find(b));
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }

    #[test]
    fn search_examples() {
        let mut g = PlanGraph::from_edges(2, [(0, 1)]);
        g.set_costs(vec![1.0]);
        assert_eq!(shortest_path(&g, 0, 1), Some((vec![0, 1], 1.0)));
        assert!(feasible(&g, 0, 0));

        let mut tri = PlanGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]);
        let c: Vec<f64> = tri
            .edges()
            .iter()
            .map(|&e| match e {
                (0, 2) => 2.5,
                _ => 1.0,
            })
            .collect();
        tri.set_costs(c);
        assert_eq!(shortest_path(&tri, 0, 2), Some((vec![0, 1, 2], 2.0)));

        let split = PlanGraph::from_edges(4, [(0, 1), (2, 3)]);
        assert!(!feasible(&split, 0, 3));
    }

    #[test]
    fn equal_cost_tie_goes_to_lower_index() {
        // 0 -> {1, 2} -> 3, both routes cost 2
        let mut g = PlanGraph::from_edges(4, [(0, 2), (2, 3), (0, 1), (1, 3)]);
        g.set_costs(vec![1.0; 4]);
        assert_eq!(shortest_path(&g, 0, 3).unwrap().0, vec![0, 1, 3]);
        assert_eq!(shortest_path(&g, 3, 0).unwrap().0, vec![3, 1, 0]);
    }

    fn square(side: f64, w: f64) -> Formation {
        Formation::regular_polygon("sq", 4, side, w).unwrap()
    }

    fn cfg(x: f64, y: f64, a: usize, alpha: f64) -> Configuration {
        Configuration {
            p: Point2::new(x, y),
            theta: a as f64 * alpha,
            angle_index: a,
            formation: 0,
            stratum: Stratum::Coarse,
        }
    }

    #[test]
    fn cost_examples() {
        let mut s = Scenario::square_arena(1.5, DiscretizationScales::new(0.08, 0.025, 0.04).unwrap());
        let (a, b) = (cfg(2.0, 2.0, 0, 0.04), cfg(2.08, 2.0, 0, 0.04));
        assert!((edge_cost(&s, &a, &b) - 0.32).abs() < 1e-12);
        s.formations[0].preference_weight = 0.5;
        assert!((edge_cost(&s, &a, &b) - 0.16).abs() < 1e-12);

        // ring radius 0.8
        s.formations = vec![square(0.8 * 2f64.sqrt(), 1.0)];
        let r = cfg(2.0, 2.0, 1, 0.04);
        let want = 4.0 * 2.0 * 0.8 * 0.02f64.sin();
        assert!((edge_cost(&s, &a, &r) - want).abs() < 1e-12);
        assert!((want - 0.12799).abs() < 1e-5);
    }

    #[test]
    fn switch_cost_ignores_weight() {
        let mut s = Scenario::square_arena(1.5, DiscretizationScales::new(0.08, 0.025, 0.04).unwrap());
        s.formations = vec![square(1.5, 3.0), Formation { id: "small".into(), ..square(1.0, 5.0) }];
        let a = cfg(5.0, 5.0, 0, 0.04);
        let b = Configuration { formation: 1, ..a };
        let pa = place(&s.formations[0], &a.pose());
        let pb = place(&s.formations[1], &b.pose());
        let want: f64 = pa.iter().zip(&pb).map(|(p, q)| p.distance(*q)).sum();
        assert!((edge_cost(&s, &a, &b) - want).abs() < 1e-12);
    }

    #[test]
    fn candidate_pairs_match_exhaustive_scan() {
        let pair = Formation::new("pair", vec![Point2::new(-0.1, 0.0), Point2::new(0.1, 0.0)], 1.0).unwrap();
        let s = Scenario {
            workspace: Rect::sized(1.0, 1.0).unwrap(),
            robot_radius: 0.04,
            formations: vec![pair.clone(), Formation { id: "wide".into(), offsets: vec![Point2::new(-0.15, 0.0), Point2::new(0.15, 0.0)], ..pair }],
            carrier: CarrierModel::FormationOnly,
            obstacles: vec![Disc::new(Point2::new(0.5, 0.5), 0.1), Disc::new(Point2::new(0.2, 0.8), 0.05)],
            start: Endpoint::new(SystemPose::at(0.2, 0.2, 0.0), "pair"),
            goal: Endpoint::new(SystemPose::at(0.8, 0.8, 0.0), "pair"),
            scales: DiscretizationScales::new(0.1, 0.025, TAU / 8.0).unwrap(),
        };
        let v = Validator::new(&s);
        let grid = densify_with(&enumerate_coarse(&s), &v, BoundaryRule::AxisNeighbors);
        assert!(grid.count(Stratum::Densified) > 0);
        let cs: Vec<Configuration> = grid.configs().collect();
        let n = grid.n_angles();
        let mut want = Vec::new();
        for i in 0..cs.len() {
            for j in i + 1..cs.len() {
                let (a, b) = (&cs[i], &cs[j]);
                let same_p = a.p.distance(b.p) < 1e-9;
                let planar = !same_p && a.angle_index == b.angle_index && a.formation == b.formation && a.p.distance(b.p) <= s.scales.g + 1e-9;
                let da = (a.angle_index + n - b.angle_index) % n;
                let rot = same_p && a.formation == b.formation && (da == 1 || da == n - 1);
                let sw = same_p && a.angle_index == b.angle_index && a.formation != b.formation;
                if planar || rot || sw {
                    want.push((i, j));
                }
            }
        }
        assert_eq!(candidate_pairs(&grid), want);
        // a coarse/densified pair 0.025 apart exists
        assert!(want.iter().any(|&(i, j)| cs[i].stratum != cs[j].stratum && (cs[i].p.distance(cs[j].p) - 0.025).abs() < 1e-9));
    }

    #[test]
    fn random_graphs_match_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..60 {
            let n = rng.gen_range(2..120);
            let m = rng.gen_range(0..n * 3);
            let mut g = PlanGraph::from_edges(n, (0..m).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))));
            let costs = (0..g.edge_count()).map(|_| rng.gen_range(1..64) as f64 / 16.0).collect();
            g.set_costs(costs);
            let mut uf = UnionFind::new(n);
            for &(a, b) in g.edges() {
                uf.union(a as usize, b as usize);
            }
            let (s, t) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let reach = uf.find(s) == uf.find(t);
            assert_eq!(feasible(&g, s, t), reach);
            let sp = shortest_path(&g, s, t);
            assert_eq!(sp.is_some(), reach);
            if let Some((path, cost)) = sp {
                assert_eq!(cost, bellman_ford(&g, s)[t]);
                let c = g.costs().unwrap();
                let mut sum = 0.0;
                for w in path.windows(2) {
                    let e = g.neighbors(w[0]).find(|&(u, _)| u == w[1]).unwrap().1;
                    sum += c[e];
                }
                assert_eq!(sum, cost);
            }
        }
    }

    fn bellman_ford(g: &PlanGraph, s: usize) -> Vec<f64> {
        let c = g.costs().unwrap();
        let mut d = vec![f64::INFINITY; g.vertex_count()];
        d[s] = 0.0;
        loop {
            let mut changed = false;
            for (k, &(a, b)) in g.edges().iter().enumerate() {
                let (a, b) = (a as usize, b as usize);
                if d[a] + c[k] < d[b] {
                    d[b] = d[a] + c[k];
                    changed = true;
                }
                if d[b] + c[k] < d[a] {
                    d[a] = d[b] + c[k];
                    changed = true;
                }
            }
            if !changed {
                return d;
            }
        }
    }

    #[test]
    fn robot_paths_follow_translations() {
        let s = Scenario::square_arena(1.5, DiscretizationScales::new(0.08, 0.025, 0.04).unwrap());
        let single = [cfg(3.0, 3.0, 0, 0.04)];
        let rp = extract_robot_paths(&s, &single);
        assert_eq!(rp.len(), 4);
        assert!(rp.iter().all(|r| r.len() == 1));
        let path: Vec<Configuration> = (0..5).map(|k| cfg(3.0 + 0.08 * k as f64, 3.0, 0, 0.04)).collect();
        let rp = extract_robot_paths(&s, &path);
        for (k, r) in rp.iter().enumerate() {
            let off = s.formations[0].offsets[k];
            for (c, w) in path.iter().zip(r) {
                assert!(w.distance(c.p + off) < 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn adjacency_is_symmetric(n in 2usize..60, raw in proptest::collection::vec((0usize..60, 0usize..60), 0..200)) {
            let g = PlanGraph::from_edges(n, raw.into_iter().map(|(a, b)| (a % n, b % n)));
            for v in 0..n {
                for (u, _) in g.neighbors(v) {
                    prop_assert!(g.has_edge(u, v));
                    prop_assert!(u != v);
                }
            }
        }

        #[test]
        fn bfs_and_dijkstra_agree(n in 2usize..60, raw in proptest::collection::vec((0usize..60, 0usize..60, 1u32..50), 0..150), s in 0usize..60, t in 0usize..60) {
            let edges: Vec<(usize, usize)> = raw.iter().map(|&(a, b, _)| (a % n, b % n)).collect();
            let mut g = PlanGraph::from_edges(n, edges);
            let costs = (0..g.edge_count()).map(|k| raw[k % raw.len().max(1)].2 as f64 / 8.0).collect();
            g.set_costs(costs);
            let (s, t) = (s % n, t % n);
            prop_assert_eq!(feasible(&g, s, t), shortest_path(&g, s, t).is_some());
        }

        #[test]
        fn uniform_weight_scaling_keeps_path(n in 2usize..40, raw in proptest::collection::vec((0usize..40, 0usize..40, 1u32..20), 1..100), k in 1u32..8) {
            let edges: Vec<(usize, usize)> = raw.iter().map(|&(a, b, _)| (a % n, b % n)).collect();
            let mut g = PlanGraph::from_edges(n, edges);
            let base: Vec<f64> = (0..g.edge_count()).map(|e| raw[e % raw.len()].2 as f64).collect();
            let mut h = g.clone();
            g.set_costs(base.clone());
            // power-of-two scaling keeps every sum exact
            h.set_costs(base.iter().map(|c| c * f64::from(1u32 << k)).collect());
            let a = shortest_path(&g, 0, n - 1).map(|p| p.0);
            let b = shortest_path(&h, 0, n - 1).map(|p| p.0);
            prop_assert_eq!(a, b);
        }
    }
}
