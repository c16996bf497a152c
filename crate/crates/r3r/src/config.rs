//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Keys may carry a section prefix (`planner.goal_bias`). Every key has a
//! default, listed by [`RunConfig::dump`], and unknown keys are errors.
//! Optional values take the literal `auto`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use r3r_core::environment::GenerationOptions;
use r3r_core::{DubinsParams, GatekeeperConfig, PlannerConfig, R3RParams, ReplanTrigger, SimConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioChoice {
    Swap,
    City,
    Arena,
    Map,
}

impl ScenarioChoice {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioChoice::Swap => "swap",
            ScenarioChoice::City => "city",
            ScenarioChoice::Arena => "arena",
            ScenarioChoice::Map => "map",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerChoice {
    Periodic,
    NearSwitch,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    /// Replan durations are measured with the wall clock.
    Wall,
    /// Replan durations are logged as zero; logs are bitwise reproducible.
    Off,
}

impl Timing {
    pub fn name(self) -> &'static str {
        match self {
            Timing::Wall => "wall",
            Timing::Off => "off",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: Option<String>,
    pub scenario: ScenarioChoice,
    pub n_agents: usize,
    pub seed: u64,
    pub swap_radius: Option<f64>,
    pub arena_side: f64,
    pub map_path: Option<PathBuf>,
    pub duration: Option<f64>,

    pub r_comm: f64,
    pub delta: f64,
    pub v: f64,
    pub omega_max: f64,

    pub resolution: f64,
    pub inflation: Option<f64>,

    pub sim_dt: f64,
    pub oracle_dt: f64,
    pub goal_tolerance: f64,
    pub deadlock_window: f64,
    pub trigger: TriggerChoice,
    pub trigger_period: f64,
    pub trigger_lead: f64,
    pub join_backoff_base: f64,
    pub join_backoff_cap: f64,
    pub stop_when_done: bool,
    pub timing: Timing,

    pub horizon: f64,
    pub switch_grid: usize,
    pub check_dt: f64,
    pub safety_margin: f64,

    pub max_iterations: usize,
    pub goal_bias: f64,
    pub step_arc_length: f64,
    pub rewire_radius: f64,
    pub planner_dt: f64,
    pub edge_resolution: f64,
    pub goal_radius: f64,
    pub obstacle_margin: f64,
    pub agent_margin: f64,
    pub near_cap: usize,
    pub rewire_subtree_cap: usize,

    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        let planner = PlannerConfig::default();
        let gk = GatekeeperConfig::default();
        let params = R3RParams::default();
        let dubins = DubinsParams::default();
        let gen = GenerationOptions::default();
        let (period, lead) = match sim.trigger {
            ReplanTrigger::Hybrid { period, lead } => (period, lead),
            _ => (1.0, 0.5),
        };
        Self {
            name: None,
            scenario: ScenarioChoice::Swap,
            n_agents: 8,
            seed: 1,
            swap_radius: None,
            arena_side: 60.0,
            map_path: None,
            duration: None,
            r_comm: params.r_comm(),
            delta: params.delta(),
            v: dubins.v(),
            omega_max: dubins.omega_max(),
            resolution: gen.resolution,
            inflation: gen.inflation,
            sim_dt: sim.sim_dt,
            oracle_dt: sim.oracle_dt,
            goal_tolerance: sim.goal_tolerance,
            deadlock_window: sim.deadlock_window,
            trigger: TriggerChoice::Hybrid,
            trigger_period: period,
            trigger_lead: lead,
            join_backoff_base: sim.join_backoff_base,
            join_backoff_cap: sim.join_backoff_cap,
            stop_when_done: sim.stop_when_done,
            timing: Timing::Wall,
            horizon: gk.horizon,
            switch_grid: gk.switch_grid,
            check_dt: gk.check_dt,
            safety_margin: gk.margin,
            max_iterations: planner.max_iterations,
            goal_bias: planner.goal_bias,
            step_arc_length: planner.step_arc_length,
            rewire_radius: planner.rewire_radius,
            planner_dt: planner.sample_dt,
            edge_resolution: planner.edge_resolution,
            goal_radius: planner.goal_radius,
            obstacle_margin: planner.obstacle_margin,
            agent_margin: planner.agent_margin,
            near_cap: planner.near_cap,
            rewire_subtree_cap: planner.rewire_subtree_cap,
            output: PathBuf::from("out"),
        }
    }
}

fn bad(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue { key: key.to_string(), value: value.to_string(), reason: reason.into() }
}

fn num(key: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = value.parse().map_err(|_| bad(key, value, "not a number"))?;
    if !x.is_finite() {
        return Err(bad(key, value, "not finite"));
    }
    Ok(x)
}

fn count(key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse().map_err(|_| bad(key, value, "not a non-negative integer"))
}

fn opt_num(key: &str, value: &str) -> Result<Option<f64>, ConfigError> {
    if value == "auto" {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

fn flag(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

fn auto_str(x: Option<f64>) -> String {
    x.map_or_else(|| "auto".to_string(), |v| v.to_string())
}

impl RunConfig {
    /// Parses a document on top of the defaults. Relative map paths are
    /// resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.to_string() })?;
            cfg.set(key.trim(), value.trim())?;
        }
        if let (Some(base), Some(p)) = (base_dir, cfg.map_path.as_mut()) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path.parent())
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), ConfigError> {
        let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::Syntax { line: 0, text: kv.to_string() })?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "name" => self.name = if value.is_empty() || value == "auto" { None } else { Some(value.to_string()) },
            "scenario" => {
                self.scenario = match value {
                    "swap" => ScenarioChoice::Swap,
                    "city" => ScenarioChoice::City,
                    "arena" => ScenarioChoice::Arena,
                    "map" => ScenarioChoice::Map,
                    _ => return Err(bad(key, value, "expected swap, city, arena or map")),
                }
            }
            "n_agents" => self.n_agents = count(key, value)?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key, value, "not a 64-bit unsigned integer"))?,
            "swap.radius" => self.swap_radius = opt_num(key, value)?,
            "arena.side" => self.arena_side = num(key, value)?,
            "map.path" => self.map_path = if value == "auto" || value.is_empty() { None } else { Some(PathBuf::from(value)) },
            "duration" => self.duration = opt_num(key, value)?,
            "params.r_comm" => self.r_comm = num(key, value)?,
            "params.delta" => self.delta = num(key, value)?,
            "dubins.v" => self.v = num(key, value)?,
            "dubins.omega_max" => self.omega_max = num(key, value)?,
            "env.resolution" => self.resolution = num(key, value)?,
            "env.inflation" => self.inflation = opt_num(key, value)?,
            "sim.dt" => self.sim_dt = num(key, value)?,
            "sim.oracle_dt" => self.oracle_dt = num(key, value)?,
            "sim.goal_tolerance" => self.goal_tolerance = num(key, value)?,
            "sim.deadlock_window" => self.deadlock_window = num(key, value)?,
            "sim.trigger" => {
                self.trigger = match value {
                    "periodic" => TriggerChoice::Periodic,
                    "near_switch" => TriggerChoice::NearSwitch,
                    "hybrid" => TriggerChoice::Hybrid,
                    _ => return Err(bad(key, value, "expected periodic, near_switch or hybrid")),
                }
            }
            "sim.trigger_period" => self.trigger_period = num(key, value)?,
            "sim.trigger_lead" => self.trigger_lead = num(key, value)?,
            "sim.join_backoff_base" => self.join_backoff_base = num(key, value)?,
            "sim.join_backoff_cap" => self.join_backoff_cap = num(key, value)?,
            "sim.stop_when_done" => self.stop_when_done = flag(key, value)?,
            "sim.timing" => {
                self.timing = match value {
                    "wall" => Timing::Wall,
                    "off" => Timing::Off,
                    _ => return Err(bad(key, value, "expected wall or off")),
                }
            }
            "horizon" => self.horizon = num(key, value)?,
            "gatekeeper.switch_grid" => self.switch_grid = count(key, value)?,
            "gatekeeper.check_dt" => self.check_dt = num(key, value)?,
            "gatekeeper.margin" => self.safety_margin = num(key, value)?,
            "planner.max_iterations" => self.max_iterations = count(key, value)?,
            "planner.goal_bias" => self.goal_bias = num(key, value)?,
            "planner.step_arc_length" => self.step_arc_length = num(key, value)?,
            "planner.rewire_radius" => self.rewire_radius = num(key, value)?,
            "planner.sample_dt" => self.planner_dt = num(key, value)?,
            "planner.edge_resolution" => self.edge_resolution = num(key, value)?,
            "planner.goal_radius" => self.goal_radius = num(key, value)?,
            "planner.obstacle_margin" => self.obstacle_margin = num(key, value)?,
            "planner.agent_margin" => self.agent_margin = num(key, value)?,
            "planner.near_cap" => self.near_cap = count(key, value)?,
            "planner.rewire_subtree_cap" => self.rewire_subtree_cap = count(key, value)?,
            "output" => self.output = PathBuf::from(value),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Semantic checks that parsing alone cannot make.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.n_agents == 0 {
            return fail("n_agents must be at least 1");
        }
        if !(self.delta > 0.0 && self.r_comm > self.delta) {
            return fail("need 0 < params.delta < params.r_comm");
        }
        if !(self.v > 0.0 && self.omega_max > 0.0) {
            return fail("dubins.v and dubins.omega_max must be positive");
        }
        if !(self.sim_dt > 0.0 && self.oracle_dt > 0.0 && self.oracle_dt <= self.sim_dt + 1e-12) {
            return fail("need 0 < sim.oracle_dt <= sim.dt");
        }
        if !(self.horizon > 0.0) || self.switch_grid < 2 || !(self.check_dt > 0.0) || self.safety_margin < 0.0 {
            return fail("need horizon > 0, gatekeeper.switch_grid >= 2, gatekeeper.check_dt > 0, gatekeeper.margin >= 0");
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return fail("planner.goal_bias must lie in [0, 1]");
        }
        if !(self.step_arc_length > 0.0 && self.planner_dt > 0.0 && self.edge_resolution > 0.0) {
            return fail("planner step sizes must be positive");
        }
        if !(self.trigger_period > 0.0 && self.trigger_lead > 0.0) {
            return fail("trigger period and lead must be positive");
        }
        if !(self.resolution > 0.0) || self.inflation.is_some_and(|m| m < 0.0) {
            return fail("env.resolution must be positive and env.inflation non-negative");
        }
        if self.duration.is_some_and(|d| !(d > 0.0)) {
            return fail("duration must be positive");
        }
        if self.scenario == ScenarioChoice::Map && self.map_path.is_none() {
            return fail("scenario = map needs map.path");
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("{}{}", self.scenario.name(), self.n_agents))
    }

    pub fn params(&self) -> Result<R3RParams, ConfigError> {
        R3RParams::from_comm(self.r_comm, self.delta).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn dubins(&self) -> Result<DubinsParams, ConfigError> {
        DubinsParams::new(self.v, self.omega_max).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn trigger(&self) -> ReplanTrigger {
        match self.trigger {
            TriggerChoice::Periodic => ReplanTrigger::Periodic { period: self.trigger_period },
            TriggerChoice::NearSwitch => ReplanTrigger::NearSwitch { lead: self.trigger_lead },
            TriggerChoice::Hybrid => ReplanTrigger::Hybrid { period: self.trigger_period, lead: self.trigger_lead },
        }
    }

    pub fn generation(&self) -> GenerationOptions {
        GenerationOptions {
            resolution: self.resolution,
            inflation: self.inflation,
            duration: self.duration,
            goal_tolerance: self.goal_tolerance,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            sim_dt: self.sim_dt,
            trigger: self.trigger(),
            goal_tolerance: self.goal_tolerance,
            deadlock_window: self.deadlock_window,
            oracle_dt: self.oracle_dt,
            join_backoff_base: self.join_backoff_base,
            join_backoff_cap: self.join_backoff_cap,
            stop_when_done: self.stop_when_done,
            gatekeeper: GatekeeperConfig {
                horizon: self.horizon,
                switch_grid: self.switch_grid,
                check_dt: self.check_dt,
                margin: self.safety_margin,
            },
            planner: PlannerConfig {
                horizon: self.horizon,
                max_iterations: self.max_iterations,
                goal_bias: self.goal_bias,
                step_arc_length: self.step_arc_length,
                rewire_radius: self.rewire_radius,
                rng_seed: self.seed,
                sample_dt: self.planner_dt,
                edge_resolution: self.edge_resolution,
                goal_radius: self.goal_radius,
                obstacle_margin: self.obstacle_margin,
                agent_margin: self.agent_margin,
                near_cap: self.near_cap,
                rewire_subtree_cap: self.rewire_subtree_cap,
            },
        }
    }

    /// Every key with its effective value; parses back to an equal config.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("name", self.name.clone().unwrap_or_else(|| "auto".into()));
        kv("scenario", self.scenario.name().into());
        kv("n_agents", self.n_agents.to_string());
        kv("seed", self.seed.to_string());
        kv("swap.radius", auto_str(self.swap_radius));
        kv("arena.side", self.arena_side.to_string());
        kv("map.path", self.map_path.as_ref().map_or_else(|| "auto".into(), |p| p.display().to_string()));
        kv("duration", auto_str(self.duration));
        kv("params.r_comm", self.r_comm.to_string());
        kv("params.delta", self.delta.to_string());
        kv("dubins.v", self.v.to_string());
        kv("dubins.omega_max", self.omega_max.to_string());
        kv("env.resolution", self.resolution.to_string());
        kv("env.inflation", auto_str(self.inflation));
        kv("sim.dt", self.sim_dt.to_string());
        kv("sim.oracle_dt", self.oracle_dt.to_string());
        kv("sim.goal_tolerance", self.goal_tolerance.to_string());
        kv("sim.deadlock_window", self.deadlock_window.to_string());
        let trig = match self.trigger {
            TriggerChoice::Periodic => "periodic",
            TriggerChoice::NearSwitch => "near_switch",
            TriggerChoice::Hybrid => "hybrid",
        };
        kv("sim.trigger", trig.into());
        kv("sim.trigger_period", self.trigger_period.to_string());
        kv("sim.trigger_lead", self.trigger_lead.to_string());
        kv("sim.join_backoff_base", self.join_backoff_base.to_string());
        kv("sim.join_backoff_cap", self.join_backoff_cap.to_string());
        kv("sim.stop_when_done", self.stop_when_done.to_string());
        kv("sim.timing", self.timing.name().into());
        kv("horizon", self.horizon.to_string());
        kv("gatekeeper.switch_grid", self.switch_grid.to_string());
        kv("gatekeeper.check_dt", self.check_dt.to_string());
        kv("gatekeeper.margin", self.safety_margin.to_string());
        kv("planner.max_iterations", self.max_iterations.to_string());
        kv("planner.goal_bias", self.goal_bias.to_string());
        kv("planner.step_arc_length", self.step_arc_length.to_string());
        kv("planner.rewire_radius", self.rewire_radius.to_string());
        kv("planner.sample_dt", self.planner_dt.to_string());
        kv("planner.edge_resolution", self.edge_resolution.to_string());
        kv("planner.goal_radius", self.goal_radius.to_string());
        kv("planner.obstacle_margin", self.obstacle_margin.to_string());
        kv("planner.agent_margin", self.agent_margin.to_string());
        kv("planner.near_cap", self.near_cap.to_string());
        kv("planner.rewire_subtree_cap", self.rewire_subtree_cap.to_string());
        kv("output", self.output.display().to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips() {
        let mut c = RunConfig::default();
        c.set("planner.goal_bias", "0.25").unwrap();
        c.set("swap.radius", "12.5").unwrap();
        c.set("sim.trigger", "periodic").unwrap();
        let back = RunConfig::parse(&c.dump(), None).unwrap();
        assert_eq!(back, c);
        assert_eq!(RunConfig::parse(&RunConfig::default().dump(), None).unwrap(), RunConfig::default());
    }

    #[test]
    fn comments_and_errors() {
        let c = RunConfig::parse("# header\n\nscenario = city  # trailing\nn_agents=16\n", None).unwrap();
        assert_eq!(c.scenario, ScenarioChoice::City);
        assert_eq!(c.n_agents, 16);
        assert!(matches!(RunConfig::parse("colour = red", None), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(RunConfig::parse("n_agents", None), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(RunConfig::parse("n_agents = -3", None), Err(ConfigError::BadValue { .. })));
        let mut c = RunConfig::default();
        c.apply_override("n_agents=0").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn relative_map_paths_follow_the_config() {
        let c = RunConfig::parse("scenario = map\nmap.path = maps/a.map", Some(Path::new("/cfg"))).unwrap();
        assert_eq!(c.map_path.unwrap(), PathBuf::from("/cfg/maps/a.map"));
    }
}
