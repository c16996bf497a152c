//! Independent safety oracle.
//!
//! Re-verifies recorded motion against the raw problem constraints: pairwise
//! center distance at least `delta`, and every position in the free part of
//! the inflated grid. It uses its own distance and grid-lookup code and never
//! calls into the validation module, so a bug there cannot hide here.

use std::collections::BTreeMap;
use std::fmt;

use r3r_core::sim::TraceSample;
use r3r_core::{AgentId, CommittedTrajectory, OccupancyEnvironment, Point2, R3RParams, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Subject {
    Pair(AgentId, AgentId),
    Unsafe(AgentId),
}

/// One contiguous interval during which a constraint was broken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub subject: Subject,
    pub start: f64,
    pub end: f64,
    /// Time and value of the worst sample: the smallest distance for pairs,
    /// zero for safe-set exits.
    pub worst_t: f64,
    pub worst: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.subject {
            Subject::Pair(a, b) => write!(
                f,
                "separation agents {a} {b} from t={:.3} to t={:.3}, min distance {:.4} at t={:.3}",
                self.start, self.end, self.worst, self.worst_t
            ),
            Subject::Unsafe(a) => {
                write!(f, "safe-set exit agent {a} from t={:.3} to t={:.3}", self.start, self.end)
            }
        }
    }
}

fn gap(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let dx = ax - bx;
    let dy = ay - by;
    (dx * dx + dy * dy).sqrt()
}

/// Free-space test on the inflated grid. Cells are closed squares, so a point
/// on the edge of a blocked cell is blocked; points on or off the map edge are out.
pub fn point_allowed(env: &OccupancyEnvironment, x: f64, y: f64) -> bool {
    let res = env.resolution();
    let o = env.origin();
    let grid = env.inflated();
    let fx = (x - o.x) / res;
    let fy = (y - o.y) / res;
    // the outer edge of the map counts as obstacle boundary
    if !(fx > 0.0 && fy > 0.0 && fx < grid.width() as f64 && fy < grid.height() as f64) {
        return false;
    }
    let cols = touching(fx, grid.width());
    let rows = touching(fy, grid.height());
    cols.iter().flatten().all(|&c| rows.iter().flatten().all(|&r| !grid.get(c, r)))
}

/// Indices of the cells whose closed extent contains coordinate `f`.
fn touching(f: f64, n: usize) -> [Option<usize>; 2] {
    let k = f.floor();
    let hi = if (k as usize) < n { Some(k as usize) } else { None };
    let lo = if f == k && k >= 1.0 { Some(k as usize - 1) } else { None };
    [lo, hi]
}

/// Linear interpolation of a trace at `t`, `None` outside its time span.
struct Cursor<'a> {
    samples: &'a [TraceSample],
    i: usize,
}

impl<'a> Cursor<'a> {
    fn at(&mut self, t: f64) -> Option<(f64, f64)> {
        let s = self.samples;
        let (first, last) = (s.first()?, s.last()?);
        const EPS: f64 = 1e-6;
        if t < first.t - EPS || t > last.t + EPS {
            return None;
        }
        while self.i + 1 < s.len() && s[self.i + 1].t <= t + EPS {
            self.i += 1;
        }
        let a = &s[self.i];
        if (a.t - t).abs() <= EPS || self.i + 1 == s.len() {
            return Some((a.x, a.y));
        }
        let b = &s[self.i + 1];
        let u = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
        Some((a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u))
    }
}

struct Open {
    start: f64,
    last: f64,
    worst_t: f64,
    worst: f64,
}

/// Checks every `oracle_dt` step of the traces and groups failing samples
/// into one violation per subject and contiguous interval.
pub fn oracle_check(traces: &[Vec<TraceSample>], scenario: &Scenario, oracle_dt: f64) -> Vec<Violation> {
    let delta = scenario.params.delta();
    let end = traces.iter().filter_map(|t| t.last()).map(|s| s.t).fold(f64::NEG_INFINITY, f64::max);
    let start = traces.iter().filter_map(|t| t.first()).map(|s| s.t).fold(f64::INFINITY, f64::min);
    if !(end >= start) || !(oracle_dt > 0.0) {
        return Vec::new();
    }
    let mut cursors: Vec<Cursor> = traces.iter().map(|s| Cursor { samples: s, i: 0 }).collect();
    let mut open: BTreeMap<Subject, Open> = BTreeMap::new();
    let mut done = Vec::new();
    let steps = ((end - start) / oracle_dt + 1e-9).floor() as usize;
    let mut pos: Vec<Option<(f64, f64)>> = vec![None; traces.len()];
    for k in 0..=steps {
        let t = start + k as f64 * oracle_dt;
        for (i, c) in cursors.iter_mut().enumerate() {
            pos[i] = c.at(t);
        }
        let mut failing: Vec<(Subject, f64)> = Vec::new();
        for i in 0..pos.len() {
            let Some((xi, yi)) = pos[i] else { continue };
            if !point_allowed(&scenario.env, xi, yi) {
                failing.push((Subject::Unsafe(AgentId(i as u32)), 0.0));
            }
            for (j, pj) in pos.iter().enumerate().skip(i + 1) {
                let Some((xj, yj)) = *pj else { continue };
                let d = gap(xi, yi, xj, yj);
                if d < delta {
                    failing.push((Subject::Pair(AgentId(i as u32), AgentId(j as u32)), d));
                }
            }
        }
        // close intervals whose subject is clean at this step
        let still: Vec<Subject> = failing.iter().map(|f| f.0).collect();
        let closing: Vec<Subject> = open.keys().filter(|s| !still.contains(s)).copied().collect();
        for s in closing {
            let o = open.remove(&s).expect("present");
            done.push(Violation { subject: s, start: o.start, end: o.last, worst_t: o.worst_t, worst: o.worst });
        }
        for (s, d) in failing {
            let o = open.entry(s).or_insert(Open { start: t, last: t, worst_t: t, worst: f64::INFINITY });
            o.last = t;
            if d < o.worst {
                o.worst = d;
                o.worst_t = t;
            }
        }
    }
    for (s, o) in open {
        done.push(Violation { subject: s, start: o.start, end: o.last, worst_t: o.worst_t, worst: o.worst });
    }
    done.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.subject.cmp(&b.subject)));
    done
}

/// Agents involved in at least one violation.
pub fn agents_involved(violations: &[Violation]) -> Vec<AgentId> {
    let mut ids: Vec<AgentId> = violations
        .iter()
        .flat_map(|v| match v.subject {
            Subject::Pair(a, b) => vec![a, b],
            Subject::Unsafe(a) => vec![a],
        })
        .collect();
    ids.sort();
    ids.dedup();
    ids
}

/// A broken condition found by [`recheck_commitment`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseFinding {
    pub agent: AgentId,
    pub condition: &'static str,
    pub t: f64,
    pub value: f64,
}

/// Dense re-verification of one held commitment from time `from` on.
///
/// Samples every `step` seconds until one full orbit after every involved
/// trajectory has entered its loiter (8 orbits when the periods differ) and
/// checks: the position is in free space, the tail stays on its circle, the
/// position stays within `r_plan` of the anchor, and the distance to every
/// other listed commitment is at least `delta`.
pub fn recheck_commitment(
    own: &CommittedTrajectory,
    others: &[&CommittedTrajectory],
    env: &OccupancyEnvironment,
    params: &R3RParams,
    from: f64,
    step: f64,
) -> Vec<DenseFinding> {
    let mut found = Vec::new();
    let me = own.owner();
    let cand = own.candidate();
    let orbit = *cand.orbit();
    let anchor: Point2 = cand.anchor();
    let period = |c: &CommittedTrajectory| {
        let o = c.candidate().orbit();
        std::f64::consts::TAU * o.radius / o.speed
    };
    let mut until = cand.orbit_entry_time().max(from) + period(own);
    let same_period = others.iter().all(|o| (period(o) - period(own)).abs() < 1e-9);
    for o in others {
        let span = if same_period { period(own) } else { 8.0 * period(own).max(period(o)) };
        until = until.max(o.candidate().orbit_entry_time() + span);
    }
    let n = ((until - from) / step).ceil() as usize;
    let mut flagged = [false; 4];
    for k in 0..=n {
        let t = from + k as f64 * step;
        let Ok(p) = own.position_at(t) else {
            found.push(DenseFinding { agent: me, condition: "sample", t, value: f64::NAN });
            break;
        };
        if !flagged[0] && !point_allowed(env, p.x, p.y) {
            flagged[0] = true;
            found.push(DenseFinding { agent: me, condition: "safe_set", t, value: 0.0 });
        }
        if !flagged[1] && t >= orbit.entry_time {
            let r = gap(p.x, p.y, orbit.center.x, orbit.center.y);
            if (r - orbit.radius).abs() > 1e-6 {
                flagged[1] = true;
                found.push(DenseFinding { agent: me, condition: "backup", t, value: r });
            }
        }
        let reach = gap(p.x, p.y, anchor.x, anchor.y);
        if !flagged[2] && reach > params.r_plan() + 1e-9 {
            flagged[2] = true;
            found.push(DenseFinding { agent: me, condition: "plan_bound", t, value: reach });
        }
        if !flagged[3] {
            for o in others {
                let Ok(q) = o.position_at(t) else { continue };
                let d = gap(p.x, p.y, q.x, q.y);
                if d < params.delta() {
                    flagged[3] = true;
                    found.push(DenseFinding { agent: me, condition: "neighbor", t, value: d });
                    break;
                }
            }
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use r3r_core::environment::load_map;

    #[test]
    fn grid_lookup_closed_cells() {
        let env = load_map("3 3 1\n...\n.#.\n...\n").unwrap();
        assert!(point_allowed(&env, 0.5, 0.5));
        assert!(!point_allowed(&env, 1.5, 1.5));
        assert!(!point_allowed(&env, 1.0, 1.5));
        assert!(!point_allowed(&env, 2.0, 2.0));
        assert!(point_allowed(&env, 0.99, 1.5));
        assert!(!point_allowed(&env, -0.1, 1.0));
        assert!(!point_allowed(&env, 3.0, 0.5));
        assert!(!point_allowed(&env, 0.0, 0.5));
    }

    #[test]
    fn touching_cells() {
        assert_eq!(touching(1.5, 3), [None, Some(1)]);
        assert_eq!(touching(1.0, 3), [Some(0), Some(1)]);
        assert_eq!(touching(3.0, 3), [Some(2), None]);
        assert_eq!(touching(0.0, 3), [None, Some(0)]);
    }
}
