//! Text formats: trajectory traces, event logs, scenario snapshots, the
//! per-agent table and metrics CSV rows.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use r3r_core::environment::{load_map, save_map, AgentSpec, MapError};
use r3r_core::sim::{EventRecord, TraceSample};
use r3r_core::{DubinsParams, DubinsState, OccupancyEnvironment, Point2, R3RParams, Scenario};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{what} line {line}: {msg}")]
    Parse { what: &'static str, line: usize, msg: String },
    #[error("snapshot map: {0}")]
    Map(#[from] MapError),
    #[error("missing `{0}`")]
    Missing(&'static str),
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| FormatError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

/// `t x y theta omega`, six decimals, one sample per line.
pub fn format_trace(samples: &[TraceSample]) -> String {
    let mut out = String::with_capacity(samples.len() * 48);
    for s in samples {
        let _ = writeln!(out, "{:.6} {:.6} {:.6} {:.6} {:.6}", s.t, s.x, s.y, s.theta, s.omega);
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceSample>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| FormatError::Parse { what: "trace", line: i + 1, msg: e.to_string() })?;
        let [t, x, y, theta, omega] = vals[..] else {
            return Err(FormatError::Parse { what: "trace", line: i + 1, msg: format!("expected 5 fields, got {}", vals.len()) });
        };
        out.push(TraceSample { t, x, y, theta, omega });
    }
    Ok(out)
}

pub fn trace_file_name(agent: usize) -> String {
    format!("agent_{agent:03}.trace")
}

/// Reads `traces/agent_XXX.trace` for agents `0..n`; missing files are empty traces.
pub fn read_traces(dir: &Path, n: usize) -> Result<Vec<Vec<TraceSample>>, FormatError> {
    (0..n)
        .map(|i| {
            let p = dir.join(trace_file_name(i));
            if p.exists() {
                parse_trace(&read_text(&p)?)
            } else {
                Ok(Vec::new())
            }
        })
        .collect()
}

pub fn format_events(events: &[EventRecord]) -> String {
    let mut out = String::new();
    for e in events {
        let _ = writeln!(out, "{e}");
    }
    out
}

/// Scenario written next to a run so the oracle can be re-run offline.
///
/// A `key = value` header, one `agent` line per agent
/// (`x y theta goal_x goal_y join_time leave_time|-`), then `map` followed by
/// the raw grid in map format.
pub fn format_snapshot(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name = {}", s.name);
    let _ = writeln!(out, "seed = {}", s.seed);
    let _ = writeln!(out, "duration = {}", s.duration);
    let _ = writeln!(out, "r_comm = {}", s.params.r_comm());
    let _ = writeln!(out, "delta = {}", s.params.delta());
    let _ = writeln!(out, "v = {}", s.dubins.v());
    let _ = writeln!(out, "omega_max = {}", s.dubins.omega_max());
    let _ = writeln!(out, "origin = {} {}", s.env.origin().x, s.env.origin().y);
    let _ = writeln!(out, "inflation = {}", s.env.inflation());
    for a in &s.agents {
        let leave = a.leave_time.map_or_else(|| "-".to_string(), |t| t.to_string());
        let _ = writeln!(
            out,
            "agent = {} {} {} {} {} {} {}",
            a.spawn.x, a.spawn.y, a.spawn.theta, a.goal.x, a.goal.y, a.join_time, leave
        );
    }
    out.push_str("map\n");
    out.push_str(&save_map(&s.env));
    out
}

pub fn parse_snapshot(text: &str) -> Result<Scenario, FormatError> {
    let err = |line: usize, msg: String| FormatError::Parse { what: "snapshot", line, msg };
    let num = |line: usize, v: &str| v.parse::<f64>().map_err(|e| err(line, format!("`{v}`: {e}")));
    let mut name = None;
    let mut seed = None;
    let mut duration = None;
    let (mut r_comm, mut delta, mut v, mut w) = (None, None, None, None);
    let mut origin = Point2::ORIGIN;
    let mut inflation = 0.0;
    let mut agents = Vec::new();
    let mut map_text = None;
    let mut lines = text.lines().enumerate();
    while let Some((i, line)) = lines.next() {
        let ln = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "map" {
            map_text = Some(lines.map(|(_, l)| l).collect::<Vec<_>>().join("\n"));
            break;
        }
        let (k, val) = line.split_once('=').ok_or_else(|| err(ln, format!("expected `key = value`, got `{line}`")))?;
        let val = val.trim();
        match k.trim() {
            "name" => name = Some(val.to_string()),
            "seed" => seed = Some(val.parse::<u64>().map_err(|e| err(ln, e.to_string()))?),
            "duration" => duration = Some(num(ln, val)?),
            "r_comm" => r_comm = Some(num(ln, val)?),
            "delta" => delta = Some(num(ln, val)?),
            "v" => v = Some(num(ln, val)?),
            "omega_max" => w = Some(num(ln, val)?),
            "inflation" => inflation = num(ln, val)?,
            "origin" => {
                let f: Vec<&str> = val.split_whitespace().collect();
                if f.len() != 2 {
                    return Err(err(ln, "origin needs two numbers".into()));
                }
                origin = Point2::new(num(ln, f[0])?, num(ln, f[1])?);
            }
            "agent" => {
                let f: Vec<&str> = val.split_whitespace().collect();
                if f.len() != 7 {
                    return Err(err(ln, format!("agent needs 7 fields, got {}", f.len())));
                }
                let leave = if f[6] == "-" { None } else { Some(num(ln, f[6])?) };
                agents.push(AgentSpec {
                    spawn: DubinsState::new(num(ln, f[0])?, num(ln, f[1])?, num(ln, f[2])?),
                    goal: Point2::new(num(ln, f[3])?, num(ln, f[4])?),
                    join_time: num(ln, f[5])?,
                    leave_time: leave,
                    trigger: None,
                });
            }
            other => return Err(err(ln, format!("unknown key `{other}`"))),
        }
    }
    let map_text = map_text.ok_or(FormatError::Missing("map"))?;
    let loaded = load_map(&map_text)?;
    let env = OccupancyEnvironment::from_grid(loaded.raw().clone(), loaded.resolution(), origin)?.with_inflation(inflation);
    let params = R3RParams::from_comm(r_comm.ok_or(FormatError::Missing("r_comm"))?, delta.ok_or(FormatError::Missing("delta"))?)
        .map_err(|e| err(0, e.to_string()))?;
    let dubins = DubinsParams::new(v.ok_or(FormatError::Missing("v"))?, w.ok_or(FormatError::Missing("omega_max"))?)
        .map_err(|e| err(0, e.to_string()))?;
    Ok(Scenario {
        name: name.ok_or(FormatError::Missing("name"))?,
        env,
        agents,
        params,
        dubins,
        duration: duration.ok_or(FormatError::Missing("duration"))?,
        seed: seed.ok_or(FormatError::Missing("seed"))?,
    })
}

/// `id,spawn_x,spawn_y,spawn_theta,goal_x,goal_y,join_time,reached,final_x,final_y`
pub fn format_agents(s: &Scenario, reached: &[bool], traces: &[Vec<TraceSample>]) -> String {
    let mut out = String::from("id,spawn_x,spawn_y,spawn_theta,goal_x,goal_y,join_time,reached,final_x,final_y\n");
    for (i, a) in s.agents.iter().enumerate() {
        let last = traces.get(i).and_then(|t| t.last());
        let (fx, fy) = last.map_or((a.spawn.x, a.spawn.y), |l| (l.x, l.y));
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6},{:.6}",
            i,
            a.spawn.x,
            a.spawn.y,
            a.spawn.theta,
            a.goal.x,
            a.goal.y,
            a.join_time,
            reached.get(i).copied().unwrap_or(false),
            fx,
            fy
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use r3r_core::environment::{generate_scenario, GenerationOptions};
    use r3r_core::ScenarioKind;

    #[test]
    fn trace_round_trip() {
        let s = vec![
            TraceSample { t: 0.0, x: 1.25, y: -2.5, theta: 0.1, omega: 1.0 },
            TraceSample { t: 0.02, x: 1.27, y: -2.49, theta: 0.12, omega: -0.5 },
        ];
        let text = format_trace(&s);
        assert_eq!(text.lines().next().unwrap(), "0.000000 1.250000 -2.500000 0.100000 1.000000");
        assert_eq!(parse_trace(&text).unwrap(), s);
        assert!(matches!(parse_trace("1 2 3\n"), Err(FormatError::Parse { line: 1, .. })));
        assert!(parse_trace("0 0 0 0 x\n").is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let kinds = [ScenarioKind::CityLike { n: 6 }, ScenarioKind::Swap { n: 4, radius: None }];
        for kind in kinds {
            let s = generate_scenario(&kind, R3RParams::default(), DubinsParams::default(), 3, &GenerationOptions::default())
                .unwrap();
            let back = parse_snapshot(&format_snapshot(&s)).unwrap();
            assert_eq!(back.env, s.env);
            assert_eq!(back.agents.len(), s.agents.len());
            for (a, b) in back.agents.iter().zip(&s.agents) {
                assert_eq!(a.spawn, b.spawn);
                assert_eq!(a.goal, b.goal);
            }
            assert_eq!(back.params, s.params);
            assert_eq!(back.duration, s.duration);
        }
        assert!(matches!(parse_snapshot("name = x\n"), Err(FormatError::Missing("map"))));
    }
}
