//! Occupancy grids, the safe set and scenario generation.
//!
//! Cell `(col, row)` covers `[origin.x + col*res, origin.x + (col+1)*res]` by
//! `[origin.y + row*res, origin.y + (row+1)*res]`; row 0 is at the bottom.
//! In the text map format the first grid line is the top row.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::fmt::Write as _;

use thiserror::Error;

use crate::dynamics::{DubinsParams, DubinsState};
use crate::geometry::{Point2, R3RParams};
use crate::math;
use crate::protocol::ReplanTrigger;
use crate::rng::{self, SimRng};

/// Rejection-sampling budget per agent.
pub const SPAWN_TRIES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("line {line}, column {col}: {msg}")]
    Header { line: usize, col: usize, msg: &'static str },
    #[error("line {line}: expected {expected} cells, found {found}")]
    RaggedRow { line: usize, expected: usize, found: usize },
    #[error("line {line}, column {col}: unknown glyph {glyph:?}")]
    UnknownGlyph { line: usize, col: usize, glyph: char },
    #[error("expected {expected} grid rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("grid must be non-empty with a positive finite resolution")]
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("scenario needs at least one agent")]
    NoAgents,
    #[error("could not place agent {agent} with the required separation after {tries} tries")]
    Unsatisfiable { agent: usize, tries: usize },
    #[error("arena side must be positive, got {0}")]
    InvalidArena(f64),
}

/// Dense bit grid, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitGrid {
    width: usize,
    height: usize,
    words: Vec<u64>,
}

impl BitGrid {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, words: vec![0; (width * height).div_ceil(64)] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        let i = row * self.width + col;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, col: usize, row: usize, v: bool) {
        let i = row * self.width + col;
        if v {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// True if every set bit of `other` is set here.
    pub fn is_superset_of(&self, other: &BitGrid) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == *b)
    }
}

/// Static obstacles on a grid, with an inflated copy defining the safe set.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyEnvironment {
    resolution: f64,
    origin: Point2,
    raw: BitGrid,
    inflated: BitGrid,
    inflation: f64,
}

impl OccupancyEnvironment {
    /// An obstacle-free grid.
    pub fn free(width: usize, height: usize, resolution: f64, origin: Point2) -> Result<Self, MapError> {
        Self::from_grid(BitGrid::new(width, height), resolution, origin)
    }

    pub fn from_grid(raw: BitGrid, resolution: f64, origin: Point2) -> Result<Self, MapError> {
        if raw.width == 0 || raw.height == 0 || !(resolution > 0.0) || !resolution.is_finite() {
            return Err(MapError::Degenerate);
        }
        Ok(Self { resolution, origin, inflated: raw.clone(), raw, inflation: 0.0 })
    }

    /// Rebuilds the inflated grid: a cell is blocked if any of its points lies
    /// closer than `inflation` to an occupied cell or to the map boundary.
    pub fn with_inflation(mut self, inflation: f64) -> Self {
        let inflation = inflation.max(0.0);
        self.inflation = inflation;
        self.inflated = self.raw.clone();
        if inflation == 0.0 {
            return self;
        }
        let (w, h, res) = (self.raw.width, self.raw.height, self.resolution);
        let reach = math::ceil(inflation / res) as usize;
        for row in 0..h {
            for col in 0..w {
                let near_edge = [col, row, w - 1 - col, h - 1 - row]
                    .iter()
                    .any(|&k| (k as f64) * res < inflation);
                if near_edge {
                    self.inflated.set(col, row, true);
                }
                if !self.raw.get(col, row) {
                    continue;
                }
                for r in row.saturating_sub(reach)..(row + reach + 1).min(h) {
                    for c in col.saturating_sub(reach)..(col + reach + 1).min(w) {
                        let gx = col.abs_diff(c).saturating_sub(1) as f64 * res;
                        let gy = row.abs_diff(r).saturating_sub(1) as f64 * res;
                        if math::hypot(gx, gy) < inflation {
                            self.inflated.set(c, r, true);
                        }
                    }
                }
            }
        }
        self
    }

    pub fn width(&self) -> usize {
        self.raw.width
    }

    pub fn height(&self) -> usize {
        self.raw.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn inflation(&self) -> f64 {
        self.inflation
    }

    pub fn raw(&self) -> &BitGrid {
        &self.raw
    }

    pub fn inflated(&self) -> &BitGrid {
        &self.inflated
    }

    /// Extent of the map in world coordinates, `(min, max)` corners.
    pub fn bounds(&self) -> (Point2, Point2) {
        let size = Point2::new(self.raw.width as f64, self.raw.height as f64) * self.resolution;
        (self.origin, self.origin + size)
    }

    /// Cell containing `p`, if inside the map.
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let u = (p.x - self.origin.x) / self.resolution;
        let v = (p.y - self.origin.y) / self.resolution;
        if !(u >= 0.0 && v >= 0.0) {
            return None;
        }
        let (c, r) = (math::floor(u) as usize, math::floor(v) as usize);
        (c < self.raw.width && r < self.raw.height).then_some((c, r))
    }

    /// True iff the closed disc of radius `margin` around `p` lies inside the
    /// map and touches no inflated-occupied cell. Obstacles and the map
    /// exterior are treated as closed sets.
    pub fn in_safe_set(&self, p: Point2, margin: f64) -> bool {
        if !p.is_finite() || !(margin >= 0.0) {
            return false;
        }
        let res = self.resolution;
        let (w, h) = (self.raw.width as f64 * res, self.raw.height as f64 * res);
        let (x, y) = (p.x - self.origin.x, p.y - self.origin.y);
        if x - margin <= 0.0 || y - margin <= 0.0 || x + margin >= w || y + margin >= h {
            return false;
        }
        let c0 = math::ceil((x - margin) / res - 1.0).max(0.0) as usize;
        let c1 = (math::floor((x + margin) / res) as usize).min(self.raw.width - 1);
        let r0 = math::ceil((y - margin) / res - 1.0).max(0.0) as usize;
        let r1 = (math::floor((y + margin) / res) as usize).min(self.raw.height - 1);
        for r in r0..=r1 {
            for c in c0..=c1 {
                if !self.inflated.get(c, r) {
                    continue;
                }
                let dx = (c as f64 * res - x).max(0.0).max(x - (c + 1) as f64 * res);
                let dy = (r as f64 * res - y).max(0.0).max(y - (r + 1) as f64 * res);
                if math::hypot(dx, dy) <= margin {
                    return false;
                }
            }
        }
        true
    }
}

/// Free-function form of [`OccupancyEnvironment::in_safe_set`].
pub fn in_safe_set(env: &OccupancyEnvironment, p: Point2, margin: f64) -> bool {
    env.in_safe_set(p, margin)
}

/// Parses the text map format: a `W H RES` header, then `H` rows of `W`
/// glyphs, `#` occupied and `.` free, top row first.
pub fn load_map(text: &str) -> Result<OccupancyEnvironment, MapError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(MapError::Header { line: 1, col: 1, msg: "missing header" })?;
    let mut fields = header.split_whitespace();
    let mut next_field = |what: &'static str| {
        let col = header.len() - header.trim_start().len() + 1;
        fields.next().ok_or(MapError::Header { line: hline + 1, col, msg: what })
    };
    let bad = |msg| MapError::Header { line: hline + 1, col: 1, msg };
    let w: usize = next_field("missing width")?.parse().map_err(|_| bad("width is not an integer"))?;
    let h: usize = next_field("missing height")?.parse().map_err(|_| bad("height is not an integer"))?;
    let res: f64 = next_field("missing resolution")?.parse().map_err(|_| bad("resolution is not a number"))?;
    if w == 0 || h == 0 || !(res > 0.0) || !res.is_finite() {
        return Err(bad("dimensions and resolution must be positive"));
    }
    let mut grid = BitGrid::new(w, h);
    let mut rows = 0;
    for (idx, line) in lines {
        let line = line.trim_end();
        if rows == h {
            return Err(MapError::RowCount { expected: h, found: h + 1 });
        }
        let found = line.chars().count();
        if found != w {
            return Err(MapError::RaggedRow { line: idx + 1, expected: w, found });
        }
        let row = h - 1 - rows;
        for (col, ch) in line.chars().enumerate() {
            match ch {
                '#' => grid.set(col, row, true),
                '.' => {}
                glyph => return Err(MapError::UnknownGlyph { line: idx + 1, col: col + 1, glyph }),
            }
        }
        rows += 1;
    }
    if rows != h {
        return Err(MapError::RowCount { expected: h, found: rows });
    }
    OccupancyEnvironment::from_grid(grid, res, Point2::ORIGIN)
}

/// Writes the raw grid in the format read by [`load_map`].
pub fn save_map(env: &OccupancyEnvironment) -> String {
    let (w, h) = (env.width(), env.height());
    let mut out = String::with_capacity((w + 1) * (h + 1));
    let _ = writeln!(out, "{} {} {}", w, h, env.resolution);
    for row in (0..h).rev() {
        for col in 0..w {
            out.push(if env.raw.get(col, row) { '#' } else { '.' });
        }
        out.push('\n');
    }
    out
}

/// One agent of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub spawn: DubinsState,
    pub goal: Point2,
    pub join_time: f64,
    /// Time at which the agent leaves the network, if ever.
    pub leave_time: Option<f64>,
    /// Per-agent trigger policy overriding the simulation default.
    pub trigger: Option<ReplanTrigger>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    /// Agents evenly spaced on a circle, each heading for the antipode. The
    /// radius defaults to the smallest one (at least 10 m) that keeps
    /// neighboring spawns `2 r_plan + delta` apart.
    Swap { n: usize, radius: Option<f64> },
    /// Roughly 100 m square city of jittered rectangular blocks.
    CityLike { n: usize },
    /// Obstacle-free square arena of the given side.
    OpenArena { n: usize, side: f64 },
    /// A loaded map with random spawns and goals.
    MapFile { env: OccupancyEnvironment, n: usize },
}

impl ScenarioKind {
    pub fn agent_count(&self) -> usize {
        match self {
            ScenarioKind::Swap { n, .. }
            | ScenarioKind::CityLike { n }
            | ScenarioKind::OpenArena { n, .. }
            | ScenarioKind::MapFile { n, .. } => *n,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ScenarioKind::Swap { .. } => "swap",
            ScenarioKind::CityLike { .. } => "city",
            ScenarioKind::OpenArena { .. } => "arena",
            ScenarioKind::MapFile { .. } => "map",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub env: OccupancyEnvironment,
    pub agents: Vec<AgentSpec>,
    pub params: R3RParams,
    pub dubins: DubinsParams,
    pub duration: f64,
    pub seed: u64,
}

/// Knobs of scenario generation that are not part of the kind itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationOptions {
    /// Grid resolution of generated maps.
    pub resolution: f64,
    /// Obstacle inflation; `None` uses `delta / 2` plus a body radius of `delta / 2`.
    pub inflation: Option<f64>,
    /// Run duration; `None` picks a per-kind default.
    pub duration: Option<f64>,
    /// Goal tolerance the goals must be spaced for.
    pub goal_tolerance: f64,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        Self { resolution: 0.5, inflation: None, duration: None, goal_tolerance: 1.0 }
    }
}

pub fn default_inflation(params: &R3RParams) -> f64 {
    params.delta()
}

/// Builds a scenario; deterministic in `seed`.
pub fn generate_scenario(
    kind: &ScenarioKind,
    params: R3RParams,
    dubins: DubinsParams,
    seed: u64,
    opts: &GenerationOptions,
) -> Result<Scenario, ScenarioError> {
    let n = kind.agent_count();
    if n == 0 {
        return Err(ScenarioError::NoAgents);
    }
    let inflation = opts.inflation.unwrap_or_else(|| default_inflation(&params));
    let mut rng = rng::seeded(rng::derive(seed, &[0x5ce7]));
    let spawn_sep = 2.0 * params.r_plan() + params.delta();
    let (env, agents, default_duration) = match kind {
        ScenarioKind::Swap { n, radius } => {
            let chord = 2.0 * math::sin(PI / *n as f64);
            let needed = if *n > 1 { 1.02 * spawn_sep / chord } else { 0.0 };
            let radius = radius.unwrap_or(needed.max(10.0));
            let half = radius + 12.0;
            let env = open_square(2.0 * half, Point2::new(-half, -half), opts.resolution, inflation);
            let agents = (0..*n)
                .map(|i| {
                    let a = TAU * i as f64 / *n as f64;
                    let p = Point2::new(radius * math::cos(a), radius * math::sin(a));
                    AgentSpec {
                        spawn: DubinsState::new(p.x, p.y, a + PI),
                        goal: p * -1.0,
                        join_time: 0.0,
                        leave_time: None,
                        trigger: None,
                    }
                })
                .collect();
            (env, agents, 40.0 + 4.0 * radius / dubins.v())
        }
        ScenarioKind::CityLike { n } => {
            let env = city_map(&mut rng, opts.resolution, inflation);
            let agents = random_agents(&env, *n, &params, &dubins, opts, &mut rng)?;
            (env, agents, 300.0)
        }
        ScenarioKind::OpenArena { n, side } => {
            if !(*side > 0.0) || !side.is_finite() {
                return Err(ScenarioError::InvalidArena(*side));
            }
            let env = open_square(*side, Point2::ORIGIN, opts.resolution, inflation);
            let agents = random_agents(&env, *n, &params, &dubins, opts, &mut rng)?;
            (env, agents, 60.0 + 3.0 * side / dubins.v())
        }
        ScenarioKind::MapFile { env, n } => {
            let env = env.clone().with_inflation(inflation);
            let agents = random_agents(&env, *n, &params, &dubins, opts, &mut rng)?;
            let (lo, hi) = env.bounds();
            (env, agents, 60.0 + 3.0 * lo.distance(hi) / dubins.v())
        }
    };
    let mut name = String::new();
    let _ = write!(name, "{}{}", kind.label(), n);
    Ok(Scenario {
        name,
        env,
        agents,
        params,
        dubins,
        duration: opts.duration.unwrap_or(default_duration),
        seed,
    })
}

fn open_square(side: f64, origin: Point2, res: f64, inflation: f64) -> OccupancyEnvironment {
    let cells = math::ceil(side / res).max(1.0) as usize;
    OccupancyEnvironment::free(cells, cells, res, origin)
        .expect("positive size")
        .with_inflation(inflation)
}

/// 100 m square, blocks on a 20 m lattice with 8-11 m sides and small
/// centre jitter, leaving streets of at least 8 m.
fn city_map(rng: &mut SimRng, res: f64, inflation: f64) -> OccupancyEnvironment {
    const SIDE: f64 = 100.0;
    const PITCH: f64 = 20.0;
    let cells = math::ceil(SIDE / res) as usize;
    let mut grid = BitGrid::new(cells, cells);
    for bi in 0..5 {
        for bj in 0..5 {
            let cx = PITCH * (bi as f64 + 0.5) + rng::uniform(rng, -0.5, 0.5);
            let cy = PITCH * (bj as f64 + 0.5) + rng::uniform(rng, -0.5, 0.5);
            let wx = rng::uniform(rng, 8.0, 11.0);
            let wy = rng::uniform(rng, 8.0, 11.0);
            let c0 = math::floor((cx - wx / 2.0) / res) as usize;
            let c1 = (math::ceil((cx + wx / 2.0) / res) as usize).min(cells);
            let r0 = math::floor((cy - wy / 2.0) / res) as usize;
            let r1 = (math::ceil((cy + wy / 2.0) / res) as usize).min(cells);
            for r in r0..r1 {
                for c in c0..c1 {
                    grid.set(c, r, true);
                }
            }
        }
    }
    OccupancyEnvironment::from_grid(grid, res, Point2::ORIGIN)
        .expect("positive size")
        .with_inflation(inflation)
}

/// Uniform spawns and goals with room for both loiter directions, spawns
/// `2 r_plan + delta` apart and goals far enough apart that terminal loiters
/// cannot touch.
fn random_agents(
    env: &OccupancyEnvironment,
    n: usize,
    params: &R3RParams,
    dubins: &DubinsParams,
    opts: &GenerationOptions,
    rng: &mut SimRng,
) -> Result<Vec<AgentSpec>, ScenarioError> {
    let turn = dubins.turn_radius();
    let clearance = 2.0 * turn + 0.1;
    let spawn_sep = 2.0 * params.r_plan() + params.delta();
    let goal_sep = 2.0 * (opts.goal_tolerance + 2.0 * turn) + params.delta();
    let (lo, hi) = env.bounds();
    let draw = |rng: &mut SimRng, taken: &[Point2], sep: f64, agent: usize| {
        for _ in 0..SPAWN_TRIES {
            let p = Point2::new(rng::uniform(rng, lo.x, hi.x), rng::uniform(rng, lo.y, hi.y));
            if env.in_safe_set(p, clearance) && taken.iter().all(|q| q.distance(p) >= sep) {
                return Ok(p);
            }
        }
        Err(ScenarioError::Unsatisfiable { agent, tries: SPAWN_TRIES })
    };
    let mut spawns = Vec::with_capacity(n);
    let mut goals = Vec::with_capacity(n);
    let mut agents = Vec::with_capacity(n);
    for i in 0..n {
        let spawn = draw(rng, &spawns, spawn_sep, i)?;
        spawns.push(spawn);
        let goal = draw(rng, &goals, goal_sep, i)?;
        goals.push(goal);
        let theta = rng::uniform(rng, -PI, PI);
        agents.push(AgentSpec {
            spawn: DubinsState::new(spawn.x, spawn.y, theta),
            goal,
            join_time: 0.0,
            leave_time: None,
            trigger: None,
        });
    }
    Ok(agents)
}
