//! Nominal trajectory generation with a Dubins-primitive RRT*.
//!
//! Edges are constant-turn-rate arcs, so every tree path is dynamically
//! feasible by construction. The tree lives in a box of half-width `v * T_H`
//! around the start and never grows past path length `v * T_H`. Neighbor
//! avoidance is time-indexed: a point reached at path length `s` is compared
//! with each neighbor's committed position at `t0 + s / v`.
//!
//! The output is not required to be safe; the gatekeeper decides what part of
//! it, if any, gets committed.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::dynamics::{arc_step, propagate, ControlSchedule, DubinsParams, DubinsState};
use crate::environment::OccupancyEnvironment;
use crate::geometry::Point2;
use crate::math;
use crate::rng::{self, SimRng};
use crate::trajectory::{CommittedTrajectory, SampledTrajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    /// Planning horizon `T_H` in seconds; the nominal always spans exactly this.
    pub horizon: f64,
    pub max_iterations: usize,
    pub goal_bias: f64,
    /// Longest arc added by one extension, meters.
    pub step_arc_length: f64,
    pub rewire_radius: f64,
    pub rng_seed: u64,
    /// Sample spacing of the returned trajectory, seconds.
    pub sample_dt: f64,
    /// Spacing of collision samples along an edge, meters.
    pub edge_resolution: f64,
    /// A node this close to the goal counts as reaching it.
    pub goal_radius: f64,
    /// Clearance kept from inflated obstacles on top of the safe-set boundary.
    pub obstacle_margin: f64,
    /// Clearance kept from neighbors on top of `delta`.
    pub agent_margin: f64,
    /// At most this many nearest nodes are considered for parent choice and rewiring.
    pub near_cap: usize,
    /// Rewires that would move more than this many descendants are skipped.
    pub rewire_subtree_cap: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: 6.0,
            max_iterations: 2000,
            goal_bias: 0.1,
            step_arc_length: 1.0,
            rewire_radius: 2.0,
            rng_seed: 0,
            sample_dt: 0.05,
            edge_resolution: 0.1,
            goal_radius: 0.5,
            obstacle_margin: 0.1,
            agent_margin: 0.25,
            near_cap: 12,
            rewire_subtree_cap: 64,
        }
    }
}

/// Result of one planning query.
#[derive(Debug, Clone, PartialEq)]
pub struct NominalResult {
    /// Duration exactly `T_H`, no tail.
    pub trajectory: SampledTrajectory,
    pub reached_goal: bool,
    /// Path length of the tree branch used, before padding.
    pub cost: f64,
}

/// Everything a planning query reads.
#[derive(Debug, Clone, Copy)]
pub struct PlanQuery<'a> {
    pub start: DubinsState,
    pub t0: f64,
    pub goal: Point2,
    pub env: &'a OccupancyEnvironment,
    pub neighbors: &'a [Arc<CommittedTrajectory>],
    pub dubins: DubinsParams,
    pub delta: f64,
}

/// A constant-turn-rate arc held for `duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcPrimitive {
    pub omega: f64,
    pub duration: f64,
}

impl ArcPrimitive {
    pub fn length(&self, p: &DubinsParams) -> f64 {
        self.duration * p.v()
    }

    pub fn end_state(&self, from: &DubinsState, p: &DubinsParams) -> DubinsState {
        arc_step(from, self.omega, p.v(), self.duration)
    }
}

/// The arc from `from` that passes exactly through `to`, if its curvature is
/// feasible. Points behind the vehicle are reached by arcs longer than a
/// half-turn.
pub fn connect_arc(from: &DubinsState, to: Point2, p: &DubinsParams) -> Option<ArcPrimitive> {
    let (dx, dy) = (to.x - from.x, to.y - from.y);
    let (s, c) = (math::sin(from.theta), math::cos(from.theta));
    let lx = c * dx + s * dy;
    let ly = -s * dx + c * dy;
    let d2 = lx * lx + ly * ly;
    if d2 < 1e-18 {
        return None;
    }
    if math::abs(ly) <= 1e-12 * math::sqrt(d2) {
        return (lx > 0.0).then(|| ArcPrimitive { omega: 0.0, duration: lx / p.v() });
    }
    let kappa = 2.0 * ly / d2;
    let omega = kappa * p.v();
    if math::abs(omega) > p.omega_max() {
        return None;
    }
    let turn = 2.0 * math::atan2(ly, lx);
    Some(ArcPrimitive { omega, duration: turn / kappa / p.v() })
}

/// Constant-turn-rate arc of length at most `max_arc` whose end lands as close
/// to `to` as possible.
///
/// If `to` is exactly reachable within `max_arc` that arc is returned;
/// otherwise the turn rate is optimised for a full-length arc over a coarse
/// grid followed by golden-section refinement.
pub fn steer_dubins(from: &DubinsState, to: Point2, max_arc: f64, p: &DubinsParams) -> ArcPrimitive {
    if let Some(a) = connect_arc(from, to, p) {
        if a.length(p) <= max_arc {
            return a;
        }
    }
    let duration = max_arc / p.v();
    let miss = |omega: f64| arc_step(from, omega, p.v(), duration).position().distance(to);
    const GRID: usize = 13;
    const MID: i64 = (GRID as i64 - 1) / 2;
    let w = p.omega_max();
    let step = 2.0 * w / (GRID - 1) as f64;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..GRID {
        let d = miss(-w + i as f64 * step);
        // centre-first tie-break keeps the straight arc when nothing is better
        if d < best - 1e-12 || (d <= best + 1e-12 && (i as i64 - MID).abs() < (best_i as i64 - MID).abs()) {
            best = d;
            best_i = i;
        }
    }
    let grid_omega = -w + best_i as f64 * step;
    let (mut lo, mut hi) = ((grid_omega - step).max(-w), (grid_omega + step).min(w));
    const PHI: f64 = 0.618_033_988_749_894_8;
    let mut a = hi - PHI * (hi - lo);
    let mut b = lo + PHI * (hi - lo);
    let (mut fa, mut fb) = (miss(a), miss(b));
    for _ in 0..24 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - PHI * (hi - lo);
            fa = miss(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + PHI * (hi - lo);
            fb = miss(b);
        }
    }
    let refined = 0.5 * (lo + hi);
    let omega = if miss(refined) < best - 1e-12 { refined } else { grid_omega };
    ArcPrimitive { omega, duration }
}

/// Collision rules shared by tree extension, rewiring and [`edge_collision_free`].
#[derive(Debug, Clone, Copy)]
pub struct CollisionContext<'a> {
    pub env: &'a OccupancyEnvironment,
    pub neighbors: &'a [Arc<CommittedTrajectory>],
    pub dubins: DubinsParams,
    pub delta: f64,
    pub obstacle_margin: f64,
    pub agent_margin: f64,
    /// Spacing of checked samples along an arc, meters.
    pub spacing: f64,
}

impl CollisionContext<'_> {
    fn point_free(&self, p: Point2, t: f64) -> bool {
        if !self.env.in_safe_set(p, self.obstacle_margin) {
            return false;
        }
        let clear = self.delta + self.agent_margin;
        self.neighbors.iter().all(|n| {
            let c = n.candidate();
            if p.distance(c.anchor()) > c.reach() + clear {
                return true;
            }
            let o = c.orbit();
            if t >= c.orbit_entry_time() && math::abs(p.distance(o.center) - o.radius) >= clear {
                return true;
            }
            match c.position_at(t) {
                Ok(q) => q.distance(p) >= clear,
                Err(_) => false,
            }
        })
    }

    /// Checks `arc` driven from `from` starting at absolute time `t_offset`.
    /// The start point itself is not checked.
    pub fn edge_collision_free(&self, from: &DubinsState, arc: ArcPrimitive, t_offset: f64) -> bool {
        let len = arc.length(&self.dubins);
        let n = (math::ceil(len / self.spacing) as usize).max(1);
        let dt = arc.duration / n as f64;
        (1..=n).all(|i| {
            let tau = dt * i as f64;
            let s = arc_step(from, arc.omega, self.dubins.v(), tau);
            self.point_free(s.position(), t_offset + tau)
        })
    }
}

/// Free-function form of [`CollisionContext::edge_collision_free`].
pub fn edge_collision_free(
    ctx: &CollisionContext<'_>,
    from: &DubinsState,
    arc: ArcPrimitive,
    t_offset: f64,
) -> bool {
    ctx.edge_collision_free(from, arc, t_offset)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeNode {
    pub state: DubinsState,
    pub parent: Option<usize>,
    /// Arc from the parent into this node.
    pub edge: ArcPrimitive,
    /// Path length from the root.
    pub cost: f64,
}

/// One cost change caused by rewiring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewireRecord {
    pub node: usize,
    pub old_cost: f64,
    pub new_cost: f64,
}

/// Final tree and rewiring history of a query.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlannerTrace {
    pub nodes: Vec<TreeNode>,
    pub rewires: Vec<RewireRecord>,
    pub best_node: usize,
}

impl PlannerTrace {
    /// One line per node: `parent_idx x y theta cost`, `-1` for the root.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let parent = n.parent.map_or(-1, |p| p as i64);
            let _ = writeln!(out, "{} {:.6} {:.6} {:.6} {:.6}", parent, n.state.x, n.state.y, n.state.theta, n.cost);
        }
        out
    }
}

/// Uniform buckets over the sampling box for near-neighbor queries.
struct Buckets {
    origin: Point2,
    size: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<usize>>,
}

impl Buckets {
    fn new(lo: Point2, hi: Point2, size: f64) -> Self {
        let cols = (math::ceil((hi.x - lo.x) / size) as usize).max(1);
        let rows = (math::ceil((hi.y - lo.y) / size) as usize).max(1);
        Self { origin: lo, size, cols, rows, cells: vec![Vec::new(); cols * rows] }
    }

    fn index(&self, p: Point2) -> (usize, usize) {
        let c = math::floor((p.x - self.origin.x) / self.size).max(0.0) as usize;
        let r = math::floor((p.y - self.origin.y) / self.size).max(0.0) as usize;
        (c.min(self.cols - 1), r.min(self.rows - 1))
    }

    fn insert(&mut self, id: usize, p: Point2) {
        let (c, r) = self.index(p);
        self.cells[r * self.cols + c].push(id);
    }

    fn remove(&mut self, id: usize, p: Point2) {
        let (c, r) = self.index(p);
        let cell = &mut self.cells[r * self.cols + c];
        if let Some(k) = cell.iter().position(|&x| x == id) {
            cell.swap_remove(k);
        }
    }

    /// Ids in the buckets overlapping the square of half-width `radius` around `p`.
    fn around(&self, p: Point2, radius: f64, out: &mut Vec<usize>) {
        out.clear();
        let (c0, r0) = self.index(Point2::new(p.x - radius, p.y - radius));
        let (c1, r1) = self.index(Point2::new(p.x + radius, p.y + radius));
        for r in r0..=r1 {
            for c in c0..=c1 {
                out.extend_from_slice(&self.cells[r * self.cols + c]);
            }
        }
    }
}

struct Tree<'q> {
    nodes: Vec<TreeNode>,
    children: Vec<Vec<usize>>,
    buckets: Buckets,
    rewires: Vec<RewireRecord>,
    ctx: CollisionContext<'q>,
    t0: f64,
    max_cost: f64,
    scratch: Vec<usize>,
}

impl Tree<'_> {
    fn time_at(&self, cost: f64) -> f64 {
        self.t0 + cost / self.ctx.dubins.v()
    }

    fn nearest(&mut self, p: Point2) -> usize {
        let mut radius = self.buckets.size;
        loop {
            let mut ids = core::mem::take(&mut self.scratch);
            self.buckets.around(p, radius, &mut ids);
            let best = ids
                .iter()
                .map(|&i| (self.nodes[i].state.position().distance(p), i))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            self.scratch = ids;
            match best {
                // only trust a hit that no unscanned bucket could beat
                Some((d, i)) if d <= radius => return i,
                _ if radius > 4.0 * self.max_cost + 4.0 * self.buckets.size => {
                    return best.map_or(0, |(_, i)| i);
                }
                _ => radius *= 2.0,
            }
        }
    }

    fn near(&mut self, p: Point2, radius: f64, cap: usize) -> Vec<usize> {
        let mut ids = core::mem::take(&mut self.scratch);
        self.buckets.around(p, radius, &mut ids);
        let mut near: Vec<(f64, usize)> = ids
            .iter()
            .map(|&i| (self.nodes[i].state.position().distance(p), i))
            .filter(|&(d, _)| d <= radius)
            .collect();
        self.scratch = ids;
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        near.truncate(cap);
        near.into_iter().map(|(_, i)| i).collect()
    }

    fn add(&mut self, node: TreeNode) -> usize {
        let id = self.nodes.len();
        self.buckets.insert(id, node.state.position());
        if let Some(p) = node.parent {
            self.children[p].push(id);
        }
        self.nodes.push(node);
        self.children.push(Vec::new());
        id
    }

    fn subtree(&self, root: usize, cap: usize) -> Option<Vec<usize>> {
        let mut out = vec![root];
        let mut k = 0;
        while k < out.len() {
            out.extend_from_slice(&self.children[out[k]]);
            if out.len() > cap + 1 {
                return None;
            }
            k += 1;
        }
        Some(out)
    }

    /// Re-parents `j` under `new` if that shortens it and the moved subtree
    /// stays collision-free at its new times.
    fn try_rewire(&mut self, new: usize, j: usize, cap: usize) {
        let from = self.nodes[new].state;
        let Some(arc) = connect_arc(&from, self.nodes[j].state.position(), &self.ctx.dubins) else {
            return;
        };
        let new_cost = self.nodes[new].cost + arc.length(&self.ctx.dubins);
        let old_cost = self.nodes[j].cost;
        if new_cost >= old_cost - 1e-9 {
            return;
        }
        let Some(sub) = self.subtree(j, cap) else { return };
        debug_assert!(!sub.contains(&new));
        if !self.ctx.edge_collision_free(&from, arc, self.time_at(self.nodes[new].cost)) {
            return;
        }
        let shift = old_cost - new_cost;
        // states of the moved subtree, parents before children
        let mut states: Vec<DubinsState> = Vec::with_capacity(sub.len());
        states.push(arc.end_state(&from, &self.ctx.dubins));
        for &k in &sub[1..] {
            let parent = self.nodes[k].parent.expect("non-root");
            let pi = sub.iter().position(|&x| x == parent).expect("parent in subtree");
            let ps = states[pi];
            let edge = self.nodes[k].edge;
            let start_time = self.time_at(self.nodes[parent].cost - shift);
            if !self.ctx.edge_collision_free(&ps, edge, start_time) {
                return;
            }
            states.push(edge.end_state(&ps, &self.ctx.dubins));
        }
        if let Some(old_parent) = self.nodes[j].parent {
            self.children[old_parent].retain(|&c| c != j);
        }
        self.children[new].push(j);
        self.nodes[j].parent = Some(new);
        self.nodes[j].edge = arc;
        for (&k, s) in sub.iter().zip(states) {
            let node = &mut self.nodes[k];
            self.buckets.remove(k, node.state.position());
            self.rewires.push(RewireRecord { node: k, old_cost: node.cost, new_cost: node.cost - shift });
            node.cost -= shift;
            node.state = s;
            self.buckets.insert(k, s.position());
        }
    }
}

/// Plans a nominal trajectory of duration exactly `cfg.horizon`.
pub fn plan_nominal(query: &PlanQuery<'_>, cfg: &PlannerConfig) -> NominalResult {
    plan_nominal_traced(query, cfg).0
}

/// [`plan_nominal`] that also returns the final tree and the rewiring log.
pub fn plan_nominal_traced(query: &PlanQuery<'_>, cfg: &PlannerConfig) -> (NominalResult, PlannerTrace) {
    let p = query.dubins;
    let v = p.v();
    let max_cost = v * cfg.horizon;
    let half = max_cost + cfg.step_arc_length;
    let (env_lo, env_hi) = query.env.bounds();
    let s0 = query.start.position();
    let lo = Point2::new((s0.x - half).max(env_lo.x), (s0.y - half).max(env_lo.y));
    let hi = Point2::new((s0.x + half).min(env_hi.x), (s0.y + half).min(env_hi.y));
    let ctx = CollisionContext {
        env: query.env,
        neighbors: query.neighbors,
        dubins: p,
        delta: query.delta,
        obstacle_margin: cfg.obstacle_margin,
        agent_margin: cfg.agent_margin,
        spacing: cfg.edge_resolution,
    };
    let mut tree = Tree {
        nodes: Vec::with_capacity(cfg.max_iterations + 1),
        children: Vec::with_capacity(cfg.max_iterations + 1),
        buckets: Buckets::new(
            Point2::new(s0.x - half, s0.y - half),
            Point2::new(s0.x + half, s0.y + half),
            cfg.rewire_radius.max(0.5),
        ),
        rewires: Vec::new(),
        ctx,
        t0: query.t0,
        max_cost,
        scratch: Vec::new(),
    };
    tree.add(TreeNode {
        state: query.start,
        parent: None,
        edge: ArcPrimitive { omega: 0.0, duration: 0.0 },
        cost: 0.0,
    });

    let mut rng: SimRng = rng::seeded(cfg.rng_seed);
    for _ in 0..cfg.max_iterations {
        let target = if rng::chance(&mut rng, cfg.goal_bias) {
            query.goal
        } else {
            Point2::new(rng::uniform(&mut rng, lo.x, hi.x), rng::uniform(&mut rng, lo.y, hi.y))
        };
        let nearest = tree.nearest(target);
        let from = tree.nodes[nearest].state;
        let arc = steer_dubins(&from, target, cfg.step_arc_length, &p);
        if arc.length(&p) < 1e-3 {
            continue;
        }
        let end = arc.end_state(&from, &p);
        let end_pos = end.position();

        // cheapest collision-free parent among the near set
        let near = tree.near(end_pos, cfg.rewire_radius, cfg.near_cap);
        let mut options: Vec<(f64, usize, ArcPrimitive)> = Vec::with_capacity(near.len() + 1);
        options.push((tree.nodes[nearest].cost + arc.length(&p), nearest, arc));
        for &k in &near {
            if k == nearest {
                continue;
            }
            if let Some(a) = connect_arc(&tree.nodes[k].state, end_pos, &p) {
                options.push((tree.nodes[k].cost + a.length(&p), k, a));
            }
        }
        options.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let chosen = options.into_iter().find(|&(cost, k, a)| {
            cost <= max_cost + 1e-9 && tree.ctx.edge_collision_free(&tree.nodes[k].state, a, tree.time_at(tree.nodes[k].cost))
        });
        let Some((cost, parent, edge)) = chosen else { continue };
        let state = edge.end_state(&tree.nodes[parent].state, &p);
        let new = tree.add(TreeNode { state, parent: Some(parent), edge, cost });
        for &j in &near {
            if j != parent && j != 0 {
                tree.try_rewire(new, j, cfg.rewire_subtree_cap);
            }
        }
    }

    // cheapest node inside the goal region, else the one closest to the goal
    let gap = |k: usize| tree.nodes[k].state.position().distance(query.goal);
    let best = (0..tree.nodes.len())
        .filter(|&k| gap(k) <= cfg.goal_radius)
        .min_by(|&a, &b| tree.nodes[a].cost.total_cmp(&tree.nodes[b].cost).then(gap(a).total_cmp(&gap(b))).then(a.cmp(&b)))
        .or_else(|| {
            (0..tree.nodes.len()).min_by(|&a, &b| {
                gap(a).total_cmp(&gap(b)).then(tree.nodes[a].cost.total_cmp(&tree.nodes[b].cost)).then(a.cmp(&b))
            })
        })
        .unwrap_or(0);
    let reached_goal = gap(best) <= cfg.goal_radius;

    let mut branch = Vec::new();
    let mut k = best;
    while let Some(parent) = tree.nodes[k].parent {
        branch.push(tree.nodes[k].edge);
        k = parent;
    }
    branch.reverse();
    let mut schedule = ControlSchedule::new();
    let mut used = 0.0;
    for e in &branch {
        schedule.push(e.omega, e.duration);
        used += e.duration;
    }
    let end = tree.nodes[best].state;
    let pad = (cfg.horizon - used).max(0.0);
    if pad > 0.0 {
        schedule.push(pad_direction(&end, query.goal) * p.omega_max(), pad + cfg.sample_dt);
    }
    let trajectory = propagate(&query.start, query.t0, &schedule, cfg.sample_dt, cfg.horizon, &p)
        .expect("tree arcs respect the turn-rate bound");
    let result = NominalResult { trajectory, reached_goal, cost: tree.nodes[best].cost };
    let trace = PlannerTrace { nodes: tree.nodes, rewires: tree.rewires, best_node: best };
    (result, trace)
}

/// `+1` (left) when the goal is on the left of the heading or dead ahead.
fn pad_direction(s: &DubinsState, goal: Point2) -> f64 {
    let cross = math::cos(s.theta) * (goal.y - s.y) - math::sin(s.theta) * (goal.x - s.x);
    if cross < 0.0 { -1.0 } else { 1.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::load_map;
    use core::f64::consts::FRAC_PI_2;

    fn unit() -> DubinsParams {
        DubinsParams::default()
    }

    #[test]
    fn connect_arc_hits_target() {
        let from = DubinsState::new(1.0, 2.0, 0.7);
        for to in [Point2::new(2.0, 3.5), Point2::new(2.5, 1.8), Point2::new(3.0, 2.5)] {
            if let Some(a) = connect_arc(&from, to, &unit()) {
                let end = a.end_state(&from, &unit());
                assert!(end.position().distance(to) < 1e-9, "{:?}", end);
                assert!(a.omega.abs() <= 1.0 + 1e-12);
            }
        }
        // a point abeam at 0.5 m needs curvature 4 > 1
        assert!(connect_arc(&DubinsState::default(), Point2::new(0.0, 0.5), &unit()).is_none());
        let a = connect_arc(&DubinsState::default(), Point2::new(2.0, 0.0), &unit()).unwrap();
        assert_eq!(a.omega, 0.0);
        assert!((a.duration - 2.0).abs() < 1e-12);
    }

    #[test]
    fn steer_examples() {
        let s = DubinsState::default();
        let a = steer_dubins(&s, Point2::new(10.0, 0.0), 1.0, &unit());
        assert_eq!(a.omega, 0.0);
        assert!((a.duration - 1.0).abs() < 1e-12);
        let a = steer_dubins(&s, Point2::new(0.0, 50.0), 1.0, &unit());
        assert_eq!(a.omega, 1.0);
        let a = steer_dubins(&s, Point2::new(0.0, -50.0), 1.0, &unit());
        assert_eq!(a.omega, -1.0);
        // reachable target inside the step is hit exactly
        let a = steer_dubins(&s, Point2::new(0.6, 0.1), 1.0, &unit());
        assert!(a.end_state(&s, &unit()).position().distance(Point2::new(0.6, 0.1)) < 1e-9);
    }

    #[test]
    fn edge_checks() {
        let env = load_map("10 10 1\n..........\n..........\n..........\n..........\n.....#....\n..........\n..........\n..........\n..........\n..........\n").unwrap();
        let ctx = CollisionContext {
            env: &env,
            neighbors: &[],
            dubins: unit(),
            delta: 0.5,
            obstacle_margin: 0.05,
            agent_margin: 0.0,
            spacing: 0.1,
        };
        let through = ArcPrimitive { omega: 0.0, duration: 4.0 };
        assert!(!ctx.edge_collision_free(&DubinsState::new(3.0, 5.5, 0.0), through, 0.0));
        assert!(ctx.edge_collision_free(&DubinsState::new(3.0, 7.5, 0.0), through, 0.0));
    }

    #[test]
    fn degenerate_start_loiters() {
        // 1 m cells, start boxed in a single free cell
        let env = load_map("5 5 1\n#####\n#####\n##.##\n#####\n#####\n").unwrap();
        let q = PlanQuery {
            start: DubinsState::new(2.5, 2.5, FRAC_PI_2),
            t0: 0.0,
            goal: Point2::new(4.0, 4.0),
            env: &env,
            neighbors: &[],
            dubins: unit(),
            delta: 0.5,
        };
        let cfg = PlannerConfig { max_iterations: 50, ..PlannerConfig::default() };
        let (r, trace) = plan_nominal_traced(&q, &cfg);
        assert_eq!(trace.nodes.len(), 1);
        assert!(!r.reached_goal);
        assert_eq!(r.cost, 0.0);
        let w0 = r.trajectory.controls()[0];
        assert_eq!(w0.abs(), 1.0);
        assert!(r.trajectory.controls().iter().all(|&w| w == w0));
        assert!((r.trajectory.prefix_duration() - cfg.horizon).abs() < 1e-9);
    }

    #[test]
    fn tree_dump_format() {
        let env = crate::environment::OccupancyEnvironment::free(40, 40, 0.5, Point2::ORIGIN).unwrap();
        let q = PlanQuery {
            start: DubinsState::new(10.0, 10.0, 0.0),
            t0: 0.0,
            goal: Point2::new(14.0, 10.0),
            env: &env,
            neighbors: &[],
            dubins: unit(),
            delta: 0.5,
        };
        let cfg = PlannerConfig { max_iterations: 30, ..PlannerConfig::default() };
        let (_, trace) = plan_nominal_traced(&q, &cfg);
        let dump = trace.dump();
        let first = dump.lines().next().unwrap();
        assert!(first.starts_with("-1 10.000000 10.000000 0.000000 0.000000"));
        assert_eq!(dump.lines().count(), trace.nodes.len());
    }
}
