//! Command-line surface: `run`, `batch`, `check`, `export` and `sweep`.
//!
//! Exit codes: 0 clean, 1 safety violation, 2 configuration or IO error,
//! 3 protocol invariant abort.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ConfigError, RunConfig};
use crate::formats::{self, FormatError};
use crate::metrics::{metrics_csv, summary_csv};
use crate::oracle::oracle_check;
use crate::runner::{self, RunError};
use crate::svg;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_ABORT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "r3r", version, about = "Decentralized asynchronous multi-agent planning with R-bounded trajectories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its artifacts.
    Run(RunArgs),
    /// Run several seeded trials of one scenario.
    Batch(BatchArgs),
    /// Re-run the safety oracle on a finished run directory.
    Check(CheckArgs),
    /// Produce an SVG or a plot-ready CSV from run output.
    Export(ExportArgs),
    /// Density sweep in open arenas: fixed agent count with varying side,
    /// or fixed side with varying agent count (`--counts`).
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Config file (`key = value` lines).
    #[arg(value_name = "CONFIG")]
    pub file: Option<PathBuf>,
    #[arg(long = "config", short = 'c', conflicts_with = "file")]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set planner.goal_bias=0.2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ConfigArgs {
    /// Loads the file (or defaults), then applies `--set`, `--seed` and `--out`.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = match self.file.as_ref().or(self.config.as_ref()) {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        for kv in &self.set {
            cfg.apply_override(kv)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BatchArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Trial `k` uses seed `seed + k`.
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    /// Explicit comma-separated seeds; replaces `--trials`.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Directory holding `scenario.snapshot` and `traces/`.
    pub dir: PathBuf,
    #[arg(long, default_value_t = 0.02)]
    pub oracle_dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportKind {
    #[value(name = "trajectories_svg")]
    TrajectoriesSvg,
    #[value(name = "density_csv")]
    DensityCsv,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    /// Run directory (or sweep directory for `density_csv`).
    pub dir: PathBuf,
    #[arg(long, value_enum)]
    pub kind: ExportKind,
    /// Output file; defaults to `trajectories.svg` or `density.csv` inside the directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Agents per trial.
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    /// Arena side lengths in meters, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![120.0, 90.0, 70.0])]
    pub sides: Vec<f64>,
    /// Agent counts for a fixed-area sweep; uses the first of `--sides`.
    #[arg(long, value_delimiter = ',')]
    pub counts: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
}

/// Runs a parsed command and returns its exit code. Diagnostics go to stderr.
pub fn execute(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Batch(a) => cmd_batch(&a),
        Command::Check(a) => cmd_check(&a.dir, a.oracle_dt),
        Command::Export(a) => cmd_export(&a.dir, a.kind, a.out.as_deref()),
        Command::Sweep(a) => cmd_sweep(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<u8, RunError> {
    let cfg = args.config.resolve()?;
    let out = runner::run_config(&cfg)?;
    runner::write_run(&cfg.output, &cfg, &out)?;
    println!("{}", out.metrics.csv_row());
    for v in &out.violations {
        eprintln!("violation: {v}");
    }
    Ok(if out.violations.is_empty() { EXIT_OK } else { EXIT_VIOLATION })
}

pub fn cmd_batch(args: &BatchArgs) -> Result<u8, RunError> {
    let base = args.config.resolve()?;
    let seeds: Vec<u64> = if args.seeds.is_empty() {
        if args.trials == 0 {
            return Err(ConfigError::Invalid("--trials must be at least 1".into()).into());
        }
        (0..args.trials as u64).map(|k| base.seed.wrapping_add(k)).collect()
    } else {
        args.seeds.clone()
    };
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != seeds.len() {
        eprintln!("warning: duplicate seeds in batch; rows will repeat");
    }
    let mut rows = Vec::new();
    let mut code = EXIT_OK;
    for (k, &seed) in seeds.iter().enumerate() {
        let cfg = RunConfig { seed, ..base.clone() };
        let dir = base.output.join(format!("trial_{k:03}_seed_{seed}"));
        match runner::run_config(&cfg) {
            Ok(out) => {
                runner::write_run(&dir, &cfg, &out)?;
                println!("{}", out.metrics.csv_row());
                for v in &out.violations {
                    eprintln!("violation (seed {seed}): {v}");
                }
                if !out.violations.is_empty() {
                    code = code.max(EXIT_VIOLATION);
                }
                rows.push(out.metrics);
            }
            Err(e @ RunError::Protocol(_)) => {
                eprintln!("error (seed {seed}): {e}");
                code = code.max(EXIT_ABORT);
            }
            Err(e) => return Err(e),
        }
    }
    formats::write_text(&base.output.join("metrics.csv"), &metrics_csv(&rows))?;
    formats::write_text(&base.output.join("summary.csv"), &summary_csv(&rows))?;
    print!("{}", summary_csv(&rows));
    Ok(code)
}

pub fn cmd_check(dir: &Path, oracle_dt: f64) -> Result<u8, RunError> {
    let snap = dir.join("scenario.snapshot");
    if !snap.is_file() {
        return Err(FormatError::Missing("scenario.snapshot").into());
    }
    let scenario = formats::parse_snapshot(&formats::read_text(&snap)?)?;
    let traces = formats::read_traces(&dir.join("traces"), scenario.agents.len())?;
    if traces.iter().all(Vec::is_empty) {
        return Err(FormatError::Missing("traces").into());
    }
    if !(oracle_dt > 0.0) {
        return Err(ConfigError::Invalid("--oracle-dt must be positive".into()).into());
    }
    let violations = oracle_check(&traces, &scenario, oracle_dt);
    for v in &violations {
        println!("{v}");
    }
    if violations.is_empty() {
        println!("ok: {} agents, no violations", scenario.agents.len());
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_VIOLATION)
    }
}

pub fn cmd_export(dir: &Path, kind: ExportKind, out: Option<&Path>) -> Result<u8, RunError> {
    match kind {
        ExportKind::TrajectoriesSvg => {
            let snap = dir.join("scenario.snapshot");
            if !snap.is_file() {
                return Err(FormatError::Missing("scenario.snapshot").into());
            }
            let scenario = formats::parse_snapshot(&formats::read_text(&snap)?)?;
            let traces = formats::read_traces(&dir.join("traces"), scenario.agents.len())?;
            if scenario.agents.is_empty() || traces.iter().all(Vec::is_empty) {
                return Err(FormatError::Missing("traces").into());
            }
            let target = out.map_or_else(|| dir.join("trajectories.svg"), Path::to_path_buf);
            formats::write_text(&target, &svg::render(&scenario, &traces))?;
            println!("{}", target.display());
        }
        ExportKind::DensityCsv => {
            let src = dir.join("density_trials.csv");
            if !src.is_file() {
                return Err(FormatError::Missing("density_trials.csv").into());
            }
            let rows = runner::parse_density_trials(&formats::read_text(&src)?)?;
            if rows.is_empty() {
                return Err(FormatError::Missing("density rows").into());
            }
            let target = out.map_or_else(|| dir.join("density.csv"), Path::to_path_buf);
            formats::write_text(&target, &runner::density_plot_csv(&rows))?;
            println!("{}", target.display());
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<u8, RunError> {
    let base = args.config.resolve()?;
    let (rows, points) = if args.counts.is_empty() {
        runner::density_sweep(&base, args.n, &args.sides, args.trials, base.seed)?
    } else {
        let side = *args.sides.first().ok_or_else(|| ConfigError::Invalid("--counts needs a side".into()))?;
        runner::density_sweep_fixed_area(&base, &args.counts, side, args.trials, base.seed)?
    };
    formats::write_text(&base.output.join("density_trials.csv"), &runner::density_trials_csv(&rows))?;
    let summary = runner::density_summary_csv(&points);
    formats::write_text(&base.output.join("density_summary.csv"), &summary)?;
    print!("{summary}");
    let bad: usize = points.iter().map(|p| p.violations).sum();
    Ok(if bad == 0 { EXIT_OK } else { EXIT_VIOLATION })
}
