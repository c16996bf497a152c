//! Scenario construction, single runs, run directories and the density sweep.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use r3r_core::environment::{generate_scenario, load_map, MapError, ScenarioError};
use r3r_core::protocol::{Clock, NullClock, ProtocolError};
use r3r_core::sim::{EventRecord, SimSummary, TraceSample};
use r3r_core::{Scenario, ScenarioKind, SimConfig, Simulation};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig, ScenarioChoice, Timing};
use crate::formats::{self, FormatError};
use crate::metrics::{metrics_csv, Metrics};
use crate::oracle::{oracle_check, Violation};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("map: {0}")]
    Map(#[from] MapError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("invariant violated: {0}")]
    Protocol(#[from] ProtocolError),
}

impl RunError {
    /// 3 for aborted runs, 2 for everything the operator supplied.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Protocol(_) => 3,
            _ => 2,
        }
    }
}

/// Milliseconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock {
    start: Instant,
}

impl Default for WallClock {
    fn default() -> Self {
        Self { start: Instant::now() }
    }
}

impl Clock for WallClock {
    fn now_ms(&mut self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }
}

pub fn build_scenario(cfg: &RunConfig) -> Result<Scenario, RunError> {
    cfg.validate()?;
    let kind = match cfg.scenario {
        ScenarioChoice::Swap => ScenarioKind::Swap { n: cfg.n_agents, radius: cfg.swap_radius },
        ScenarioChoice::City => ScenarioKind::CityLike { n: cfg.n_agents },
        ScenarioChoice::Arena => ScenarioKind::OpenArena { n: cfg.n_agents, side: cfg.arena_side },
        ScenarioChoice::Map => {
            let path = cfg.map_path.as_ref().expect("validated");
            let env = load_map(&formats::read_text(path)?)?;
            ScenarioKind::MapFile { env, n: cfg.n_agents }
        }
    };
    let mut s = generate_scenario(&kind, cfg.params()?, cfg.dubins()?, cfg.seed, &cfg.generation())?;
    s.name = cfg.label();
    Ok(s)
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub summary: SimSummary,
    pub metrics: Metrics,
    pub events: Vec<EventRecord>,
    pub traces: Vec<Vec<TraceSample>>,
    pub reached: Vec<bool>,
    pub violations: Vec<Violation>,
}

fn clock_for(timing: Timing) -> Box<dyn Clock> {
    match timing {
        Timing::Wall => Box::<WallClock>::default(),
        Timing::Off => Box::new(NullClock),
    }
}

fn finish(engine: Simulation, oracle_dt: f64) -> RunOutput {
    let summary = engine.summary();
    let violations = oracle_check(engine.traces(), &engine.scenario, oracle_dt);
    let metrics = Metrics::new(&engine.scenario.name, engine.scenario.seed, &summary, &violations);
    RunOutput {
        summary,
        metrics,
        events: engine.events().to_vec(),
        traces: engine.traces().to_vec(),
        reached: engine.reached().to_vec(),
        violations,
        scenario: engine.scenario,
    }
}

pub fn run_scenario(scenario: Scenario, sim: SimConfig, timing: Timing) -> Result<RunOutput, ProtocolError> {
    let oracle_dt = sim.oracle_dt;
    let mut engine = Simulation::with_clock(scenario, sim, clock_for(timing));
    engine.run()?;
    Ok(finish(engine, oracle_dt))
}

/// Runs several scenarios side by side, one simulation step of each in
/// turn, so that changes in machine load affect all of them alike.
pub fn run_lockstep(scenarios: Vec<Scenario>, sim: SimConfig, timing: Timing) -> Result<Vec<RunOutput>, ProtocolError> {
    let mut engines: Vec<Simulation> =
        scenarios.into_iter().map(|s| Simulation::with_clock(s, sim, clock_for(timing))).collect();
    while engines.iter().any(|e| !e.is_finished()) {
        for e in &mut engines {
            e.advance(&mut |_, _| {})?;
        }
    }
    Ok(engines.into_iter().map(|e| finish(e, sim.oracle_dt)).collect())
}

pub fn run_config(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    let scenario = build_scenario(cfg)?;
    Ok(run_scenario(scenario, cfg.sim_config(), cfg.timing)?)
}

/// Writes `metrics.csv`, `events.log`, `traces/agent_XXX.trace`,
/// `config.cfg`, `scenario.snapshot` and `agents.csv` into `dir`.
pub fn write_run(dir: &Path, cfg: &RunConfig, out: &RunOutput) -> Result<(), FormatError> {
    formats::write_text(&dir.join("metrics.csv"), &metrics_csv(std::slice::from_ref(&out.metrics)))?;
    formats::write_text(&dir.join("events.log"), &formats::format_events(&out.events))?;
    for (i, t) in out.traces.iter().enumerate() {
        formats::write_text(&dir.join("traces").join(formats::trace_file_name(i)), &formats::format_trace(t))?;
    }
    formats::write_text(&dir.join("config.cfg"), &cfg.dump())?;
    formats::write_text(&dir.join("scenario.snapshot"), &formats::format_snapshot(&out.scenario))?;
    formats::write_text(&dir.join("agents.csv"), &formats::format_agents(&out.scenario, &out.reached, &out.traces))?;
    let mut v = String::new();
    for x in &out.violations {
        let _ = writeln!(v, "{x}");
    }
    formats::write_text(&dir.join("violations.txt"), &v)
}

/// One trial of the density sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTrial {
    pub n: usize,
    pub side: f64,
    /// Agents per square meter.
    pub density: f64,
    pub trial: usize,
    pub seed: u64,
    pub mean_replan_ms: f64,
    pub fail_rate: f64,
    pub avg_neighbors: f64,
    pub violations: usize,
}

/// Per-side aggregate of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPoint {
    pub n: usize,
    pub side: f64,
    pub density: f64,
    /// Expected neighbor count `density * pi * r_comm^2`.
    pub lambda: f64,
    pub trials: usize,
    pub mean_replan_ms: f64,
    pub std_replan_ms: f64,
    pub fail_rate: f64,
    pub std_fail_rate: f64,
    pub avg_neighbors: f64,
    pub violations: usize,
}

pub fn expected_neighbors(density: f64, r_comm: f64) -> f64 {
    density * std::f64::consts::PI * r_comm * r_comm
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var.sqrt())
}

/// Fixed agent count in open square arenas of the given sides. Trial `k`
/// uses seed `base_seed + k`; scenario kind and count in `base` are ignored.
pub fn density_sweep(
    base: &RunConfig,
    n: usize,
    sides: &[f64],
    trials: usize,
    base_seed: u64,
) -> Result<(Vec<DensityTrial>, Vec<DensityPoint>), RunError> {
    let levels: Vec<(usize, f64)> = sides.iter().map(|&d| (n, d)).collect();
    density_levels(base, &levels, trials, base_seed)
}

/// Fixed arena side, varying agent count.
pub fn density_sweep_fixed_area(
    base: &RunConfig,
    counts: &[usize],
    side: f64,
    trials: usize,
    base_seed: u64,
) -> Result<(Vec<DensityTrial>, Vec<DensityPoint>), RunError> {
    let levels: Vec<(usize, f64)> = counts.iter().map(|&n| (n, side)).collect();
    density_levels(base, &levels, trials, base_seed)
}

/// One block of `trials` runs per `(agents, side)` level.
pub fn density_levels(
    base: &RunConfig,
    levels: &[(usize, f64)],
    trials: usize,
    base_seed: u64,
) -> Result<(Vec<DensityTrial>, Vec<DensityPoint>), RunError> {
    if trials == 0 || levels.is_empty() || levels.iter().any(|&(n, _)| n == 0) {
        return Err(ConfigError::Invalid("density sweep needs trials >= 1 and at least one level with agents".into()).into());
    }
    base.validate()?;
    // the levels of one trial run in lockstep so machine-load drift spreads
    // evenly over them
    let mut blocks: Vec<Vec<DensityTrial>> = vec![Vec::with_capacity(trials); levels.len()];
    for trial in 0..trials {
        let seed = base_seed.wrapping_add(trial as u64);
        let mut scenarios = Vec::with_capacity(levels.len());
        for &(n, side) in levels {
            let cfg = RunConfig {
                scenario: ScenarioChoice::Arena,
                n_agents: n,
                arena_side: side,
                seed,
                name: Some(format!("arena{n}_d{side}")),
                ..base.clone()
            };
            scenarios.push(build_scenario(&cfg)?);
        }
        let outs = run_lockstep(scenarios, base.sim_config(), base.timing)?;
        for ((block, &(n, side)), out) in blocks.iter_mut().zip(levels).zip(outs) {
            block.push(DensityTrial {
                n,
                side,
                density: n as f64 / (side * side),
                trial,
                seed,
                mean_replan_ms: out.metrics.mean_replan_ms,
                fail_rate: out.metrics.replan_failure_rate,
                avg_neighbors: out.metrics.avg_neighbors_per_replan,
                violations: out.metrics.safety_violations,
            });
        }
    }
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (block, &(n, side)) in blocks.into_iter().zip(levels) {
        let density = n as f64 / (side * side);
        let (mr, sr) = mean_std(&block.iter().map(|r| r.mean_replan_ms).collect::<Vec<_>>());
        let (mf, sf) = mean_std(&block.iter().map(|r| r.fail_rate).collect::<Vec<_>>());
        points.push(DensityPoint {
            n,
            side,
            density,
            lambda: expected_neighbors(density, base.r_comm),
            trials,
            mean_replan_ms: mr,
            std_replan_ms: sr,
            fail_rate: mf,
            std_fail_rate: sf,
            avg_neighbors: block.iter().map(|r| r.avg_neighbors).sum::<f64>() / trials as f64,
            violations: block.iter().map(|r| r.violations).sum(),
        });
        rows.extend(block);
    }
    Ok((rows, points))
}

pub const DENSITY_TRIALS_HEADER: &str = "density,n,side,trial,seed,replan_ms,fail_rate,avg_neighbors,violations";

pub fn density_trials_csv(rows: &[DensityTrial]) -> String {
    let mut out = String::from(DENSITY_TRIALS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.8},{},{},{},{},{:.4},{:.4},{:.3},{}",
            r.density, r.n, r.side, r.trial, r.seed, r.mean_replan_ms, r.fail_rate, r.avg_neighbors, r.violations
        );
    }
    out
}

pub fn density_summary_csv(points: &[DensityPoint]) -> String {
    let mut out = String::from(
        "density,n,side,lambda,trials,mean_replan_ms,std_replan_ms,fail_rate,std_fail_rate,avg_neighbors,violations\n",
    );
    for p in points {
        let _ = writeln!(
            out,
            "{:.8},{},{},{:.3},{},{:.4},{:.4},{:.4},{:.4},{:.3},{}",
            p.density,
            p.n,
            p.side,
            p.lambda,
            p.trials,
            p.mean_replan_ms,
            p.std_replan_ms,
            p.fail_rate,
            p.std_fail_rate,
            p.avg_neighbors,
            p.violations
        );
    }
    out
}

/// Plot-ready columns, one row per (level, trial).
pub fn density_plot_csv(rows: &[DensityTrial]) -> String {
    let mut out = String::from("density,n,side,trial,replan_ms,fail_rate\n");
    for r in rows {
        let _ = writeln!(out, "{:.8},{},{},{},{:.4},{:.4}", r.density, r.n, r.side, r.trial, r.mean_replan_ms, r.fail_rate);
    }
    out
}

/// Parses [`density_trials_csv`] output back.
pub fn parse_density_trials(text: &str) -> Result<Vec<DensityTrial>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let err = |msg: String| FormatError::Parse { what: "density csv", line: i + 1, msg };
        if f.len() != 9 {
            return Err(err(format!("expected 9 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("`{s}`: {e}")));
        let int = |s: &str| s.parse::<u64>().map_err(|e| err(format!("`{s}`: {e}")));
        out.push(DensityTrial {
            density: num(f[0])?,
            n: int(f[1])? as usize,
            side: num(f[2])?,
            trial: int(f[3])? as usize,
            seed: int(f[4])?,
            mean_replan_ms: num(f[5])?,
            fail_rate: num(f[6])?,
            avg_neighbors: num(f[7])?,
            violations: int(f[8])? as usize,
        });
    }
    Ok(out)
}
