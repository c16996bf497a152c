//! Validity checking of candidates and the switch-time sweep.
//!
//! A candidate is valid when (1) it stays in the safe set, its orbit ball
//! included; (2) its prefix hands over continuously onto the backup orbit;
//! (3) it never leaves the planning ball around its anchor; and (4) it keeps
//! at least `delta` from every neighbor's committed trajectory for all future
//! time. The sweep tries switch times from the horizon downwards, so the first
//! valid candidate has the largest valid switch time.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::dynamics::{DubinsParams, DubinsState, TurnDirection};
use crate::environment::OccupancyEnvironment;
use crate::geometry::{is_r_bounded, Point2, R3RParams};
use crate::planner::{plan_nominal, NominalResult, PlanQuery, PlannerConfig};
use crate::trajectory::{
    common_period, compose_candidate_with_direction, min_separation, preferred_direction, scan,
    CandidateTrajectory, CommittedTrajectory, NeighborCommit, SampledTrajectory, ValidityCertificate,
    SPLICE_TOLERANCE,
};
use crate::AgentId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatekeeperConfig {
    /// Horizon `T_H`; the largest switch time tried.
    pub horizon: f64,
    /// Number of evenly spaced switch times in `[0, T_H]`, both ends included.
    pub switch_grid: usize,
    /// Grid step of the neighbor separation check.
    pub check_dt: f64,
    /// Clearance required from the safe-set boundary.
    pub margin: f64,
}

impl Default for GatekeeperConfig {
    fn default() -> Self {
        Self { horizon: 6.0, switch_grid: 21, check_dt: 0.05, margin: 0.05 }
    }
}

impl GatekeeperConfig {
    /// Switch times from `T_H` down to `0`.
    pub fn switch_times(&self) -> Vec<f64> {
        let n = self.switch_grid.max(2);
        (0..n)
            .map(|i| self.horizon * (n - 1 - i) as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailedCondition {
    SafeSet,
    BackupReach,
    PlanBound,
    NeighborCollision,
}

impl FailedCondition {
    pub fn index(self) -> usize {
        match self {
            FailedCondition::SafeSet => 0,
            FailedCondition::BackupReach => 1,
            FailedCondition::PlanBound => 2,
            FailedCondition::NeighborCollision => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FailedCondition::SafeSet => "safe_set",
            FailedCondition::BackupReach => "backup_reach",
            FailedCondition::PlanBound => "plan_bound",
            FailedCondition::NeighborCollision => "neighbor_collision",
        }
    }
}

/// Where and when a check first failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub time: f64,
    pub position: Point2,
    pub neighbor: Option<AgentId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub valid: bool,
    pub failed_condition: Option<FailedCondition>,
    pub witness: Option<Witness>,
    /// Smallest separation bound to a checked neighbor, when any was checked.
    pub min_neighbor_separation: Option<f64>,
}

impl ValidityReport {
    fn pass(min_sep: Option<f64>) -> Self {
        Self { valid: true, failed_condition: None, witness: None, min_neighbor_separation: min_sep }
    }

    fn fail(cond: FailedCondition, witness: Witness) -> Self {
        Self { valid: false, failed_condition: Some(cond), witness: Some(witness), min_neighbor_separation: None }
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.failed_condition, self.witness) {
            (None, _) => write!(f, "valid"),
            (Some(c), Some(w)) => {
                write!(f, "invalid {} t={:.6} x={:.6} y={:.6}", c.name(), w.time, w.position.x, w.position.y)?;
                match w.neighbor {
                    Some(id) => write!(f, " neighbor={}", id),
                    None => Ok(()),
                }
            }
            (Some(c), None) => write!(f, "invalid {}", c.name()),
        }
    }
}

/// Runs the four checks in order and reports the first failure.
pub fn is_valid(
    cand: &CandidateTrajectory,
    neighbors: &[Arc<CommittedTrajectory>],
    env: &OccupancyEnvironment,
    params: &R3RParams,
    cfg: &GatekeeperConfig,
) -> ValidityReport {
    certify(cand, neighbors, env, params, cfg).0
}

/// [`is_valid`] that also returns the certificate when the candidate passes.
pub fn certify(
    cand: &CandidateTrajectory,
    neighbors: &[Arc<CommittedTrajectory>],
    env: &OccupancyEnvironment,
    params: &R3RParams,
    cfg: &GatekeeperConfig,
) -> (ValidityReport, Option<ValidityCertificate>) {
    let base = cand.base();
    let orbit = cand.orbit();
    let t_at = |k: usize| base.t0() + k as f64 * base.dt();

    // (1) safe set: prefix samples, then the whole orbit disc
    for (k, s) in base.states().iter().enumerate() {
        if !env.in_safe_set(s.position(), cfg.margin) {
            let w = Witness { time: t_at(k), position: s.position(), neighbor: None };
            return (ValidityReport::fail(FailedCondition::SafeSet, w), None);
        }
    }
    if !env.in_safe_set(orbit.center, orbit.radius + cfg.margin) {
        let w = Witness { time: cand.orbit_entry_time(), position: orbit.center, neighbor: None };
        return (ValidityReport::fail(FailedCondition::SafeSet, w), None);
    }

    // (2) the switch state lies on the orbit
    let last = *base.states().last().expect("non-empty prefix");
    let entry = orbit.state_at(cand.orbit_entry_time()).map(|s| s.position());
    if !matches!(entry, Ok(q) if q.distance(last.position()) <= SPLICE_TOLERANCE) {
        let w = Witness { time: cand.orbit_entry_time(), position: last.position(), neighbor: None };
        return (ValidityReport::fail(FailedCondition::BackupReach, w), None);
    }

    // (3) planning ball around the anchor
    let r = params.r_plan();
    if !is_r_bounded(base, cand.anchor(), r, 0.0).unwrap_or(false) {
        let w = plan_bound_witness(cand, r);
        return (ValidityReport::fail(FailedCondition::PlanBound, w), None);
    }

    // (4) neighbor commitments over [t_k, inf)
    let from = cand.anchor_time();
    let mut min_sep: Option<f64> = None;
    let mut checked = Vec::with_capacity(neighbors.len());
    for nb in neighbors {
        let other = nb.candidate();
        let ball_gap = cand.anchor().distance(other.anchor()) - cand.reach() - other.reach();
        let sep = if ball_gap >= params.delta() {
            ball_gap
        } else {
            match min_separation(base, other.base(), from, cfg.check_dt) {
                Ok(d) => d,
                Err(_) => 0.0,
            }
        };
        if sep < params.delta() {
            let (time, position) = closest_approach(base, other.base(), from, cfg.check_dt);
            let w = Witness { time, position, neighbor: Some(nb.owner()) };
            return (ValidityReport::fail(FailedCondition::NeighborCollision, w), None);
        }
        min_sep = Some(min_sep.map_or(sep, |m: f64| m.min(sep)));
        checked.push(NeighborCommit { id: nb.owner(), serial: nb.serial(), trajectory: Arc::clone(other) });
    }
    let cert = ValidityCertificate {
        conditions_passed: [true; 4],
        neighbors: checked,
        min_neighbor_separation: min_sep,
    };
    (ValidityReport::pass(min_sep), Some(cert))
}

fn plan_bound_witness(cand: &CandidateTrajectory, r: f64) -> Witness {
    let base = cand.base();
    for (k, s) in base.states().iter().enumerate() {
        if s.position().distance(cand.anchor()) > r {
            return Witness { time: base.t0() + k as f64 * base.dt(), position: s.position(), neighbor: None };
        }
    }
    let orbit = cand.orbit();
    let away = orbit.center - cand.anchor();
    let norm = away.norm();
    let dir = if norm > 0.0 { away * (1.0 / norm) } else { Point2::new(1.0, 0.0) };
    Witness { time: cand.orbit_entry_time(), position: orbit.center + dir * orbit.radius, neighbor: None }
}

/// Time and own position of the smallest sampled gap, used for witnesses.
fn closest_approach(a: &SampledTrajectory, b: &SampledTrajectory, from: f64, dt: f64) -> (f64, Point2) {
    let mut best = (f64::INFINITY, from, Point2::ORIGIN);
    let mut end = a.prefix_end().max(b.prefix_end()).max(from);
    if let (Some(oa), Some(ob)) = (a.tail(), b.tail()) {
        end += common_period(oa, ob).unwrap_or_else(|| oa.period().max(ob.period()));
    }
    let _ = scan(from, end, dt, &mut |t| {
        let (p, q) = (a.position_at(t)?, b.position_at(t)?);
        let d = p.distance(q);
        if d < best.0 {
            best = (d, t, p);
        }
        Ok(())
    });
    (best.1, best.2)
}

/// One tried `(switch time, direction)` pair of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AttemptRecord {
    pub switch_time: f64,
    pub direction: TurnDirection,
    pub report: ValidityReport,
}

/// Outcome of sweeping the switch times of one nominal.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub candidate: Option<(CandidateTrajectory, ValidityCertificate)>,
    pub switch_time: Option<f64>,
    pub attempts: Vec<AttemptRecord>,
}

/// Tries switch times from `T_H` down to `0`; at each, the preferred loiter
/// direction first and then the other one. Stops at the first valid candidate.
pub fn sweep_switch_times(
    nominal: &SampledTrajectory,
    neighbors: &[Arc<CommittedTrajectory>],
    env: &OccupancyEnvironment,
    params: &R3RParams,
    dubins: &DubinsParams,
    cfg: &GatekeeperConfig,
) -> SweepResult {
    sweep_times(nominal, &cfg.switch_times(), neighbors, env, params, dubins, cfg)
}

fn sweep_times(
    nominal: &SampledTrajectory,
    times: &[f64],
    neighbors: &[Arc<CommittedTrajectory>],
    env: &OccupancyEnvironment,
    params: &R3RParams,
    dubins: &DubinsParams,
    cfg: &GatekeeperConfig,
) -> SweepResult {
    let mut attempts = Vec::new();
    let anchor = nominal.states()[0].position();
    let horizon = nominal.prefix_duration();
    for &ts in times {
        let ts = ts.min(horizon);
        let k = crate::math::round(ts / nominal.dt()) as usize;
        let entry = nominal.states()[k.min(nominal.states().len() - 1)];
        let first = preferred_direction(&entry, anchor, dubins);
        for dir in [first, first.opposite()] {
            let Ok(cand) = compose_candidate_with_direction(nominal, ts, dubins, dir) else { continue };
            let (report, cert) = certify(&cand, neighbors, env, params, cfg);
            attempts.push(AttemptRecord { switch_time: cand.switch_time(), direction: dir, report });
            if let Some(cert) = cert {
                let st = cand.switch_time();
                return SweepResult { candidate: Some((cand, cert)), switch_time: Some(st), attempts };
            }
        }
    }
    SweepResult { candidate: None, switch_time: None, attempts }
}

/// Inputs of one replanning attempt.
#[derive(Debug, Clone, Copy)]
pub struct ReplanRequest<'a> {
    pub state: DubinsState,
    pub time: f64,
    pub goal: Point2,
    pub env: &'a OccupancyEnvironment,
    pub neighbors: &'a [Arc<CommittedTrajectory>],
    pub params: R3RParams,
    pub dubins: DubinsParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplanOutcome {
    pub success: bool,
    pub candidate: Option<CandidateTrajectory>,
    pub certificate: Option<ValidityCertificate>,
    pub switch_time: Option<f64>,
    pub nominal: NominalResult,
    pub attempts: Vec<AttemptRecord>,
}

/// Plans one nominal and returns its valid candidate with the largest switch
/// time, if any. Pure: reads its inputs and nothing else.
pub fn attempt_replan(
    req: &ReplanRequest<'_>,
    cfg: &GatekeeperConfig,
    planner_cfg: &PlannerConfig,
) -> ReplanOutcome {
    let query = PlanQuery {
        start: req.state,
        t0: req.time,
        goal: req.goal,
        env: req.env,
        neighbors: req.neighbors,
        dubins: req.dubins,
        delta: req.params.delta(),
    };
    let nominal = plan_nominal(&query, planner_cfg);
    let sweep = sweep_switch_times(&nominal.trajectory, req.neighbors, req.env, &req.params, &req.dubins, cfg);
    let (candidate, certificate) = match sweep.candidate {
        Some((c, cert)) => (Some(c), Some(cert)),
        None => (None, None),
    };
    ReplanOutcome {
        success: candidate.is_some(),
        candidate,
        certificate,
        switch_time: sweep.switch_time,
        nominal,
        attempts: sweep.attempts,
    }
}

/// Pure loiter from the current state (switch time zero), in whichever
/// direction validates first.
pub fn loiter_candidate(
    state: &DubinsState,
    time: f64,
    neighbors: &[Arc<CommittedTrajectory>],
    env: &OccupancyEnvironment,
    params: &R3RParams,
    dubins: &DubinsParams,
    cfg: &GatekeeperConfig,
) -> SweepResult {
    let stub = SampledTrajectory::new(time, cfg.check_dt, alloc::vec![*state], Vec::new(), None, dubins.v())
        .expect("single finite state");
    sweep_times(&stub, &[0.0], neighbors, env, params, dubins, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{make_loiter, propagate, ControlSchedule};
    use crate::trajectory::compose_candidate;

    fn open_env() -> OccupancyEnvironment {
        OccupancyEnvironment::free(80, 80, 0.5, Point2::new(-20.0, -20.0)).unwrap()
    }

    fn straight(len: f64) -> SampledTrajectory {
        let p = DubinsParams::default();
        propagate(&DubinsState::default(), 0.0, &ControlSchedule::constant(0.0), 0.05, len, &p).unwrap()
    }

    fn commit_loiter(entry: DubinsState, owner: u32) -> Arc<CommittedTrajectory> {
        let p = DubinsParams::default();
        let orbit = make_loiter(&entry, TurnDirection::CounterClockwise, &p, 0.0);
        let base = SampledTrajectory::new(0.0, 0.05, alloc::vec![entry], Vec::new(), Some(orbit), 1.0).unwrap();
        let cand = CandidateTrajectory::new(base).unwrap();
        Arc::new(CommittedTrajectory::new(Arc::new(cand), AgentId(owner), 0.0, 1, ValidityCertificate::default()))
    }

    #[test]
    fn grid_is_descending_with_endpoints() {
        let g = GatekeeperConfig::default().switch_times();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], 6.0);
        assert_eq!(*g.last().unwrap(), 0.0);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn lone_loiter_is_valid() {
        let c = compose_candidate(&straight(6.0), 0.0, &DubinsParams::default()).unwrap();
        let r = is_valid(&c, &[], &open_env(), &R3RParams::default(), &GatekeeperConfig::default());
        assert!(r.valid && r.failed_condition.is_none());
    }

    #[test]
    fn plan_bound_failure_has_witness() {
        // 3 m prefix then a unit orbit reaches sqrt(10) + 1 > 4 from the anchor
        let params = R3RParams::from_plan(4.0, 0.5).unwrap();
        let c = compose_candidate(&straight(6.0), 3.0, &DubinsParams::default()).unwrap();
        let r = is_valid(&c, &[], &open_env(), &params, &GatekeeperConfig::default());
        assert_eq!(r.failed_condition, Some(FailedCondition::PlanBound));
        let w = r.witness.unwrap();
        assert!(w.position.distance(c.anchor()) > 4.0);
    }

    #[test]
    fn overlapping_orbits_collide() {
        // own orbit centred at (0, 1), neighbor centred at (2.49, 1): centre
        // distance 2 + delta - 0.01, phased so the inner points meet at t = pi/2
        let c = compose_candidate(&straight(6.0), 0.0, &DubinsParams::default()).unwrap();
        assert!((c.orbit().center.y - 1.0).abs() < 1e-12);
        let nb = commit_loiter(DubinsState::new(2.49, 2.0, core::f64::consts::PI), 7);
        assert!(nb.candidate().orbit().center.distance(Point2::new(2.49, 1.0)) < 1e-12);
        let r = is_valid(&c, &[nb], &open_env(), &R3RParams::default(), &GatekeeperConfig::default());
        assert_eq!(r.failed_condition, Some(FailedCondition::NeighborCollision));
        assert_eq!(r.witness.unwrap().neighbor, Some(AgentId(7)));
        assert!(!r.valid);
    }

    #[test]
    fn safe_set_failure() {
        let env = open_env();
        let c = compose_candidate(&straight(6.0), 0.0, &DubinsParams::default()).unwrap();
        let moved = SampledTrajectory::new(
            0.0,
            0.05,
            alloc::vec![DubinsState::new(-19.9, 0.0, 0.0)],
            Vec::new(),
            Some(make_loiter(&DubinsState::new(-19.9, 0.0, 0.0), TurnDirection::CounterClockwise, &DubinsParams::default(), 0.0)),
            1.0,
        )
        .unwrap();
        let bad = CandidateTrajectory::new(moved).unwrap();
        let r = is_valid(&bad, &[], &env, &R3RParams::default(), &GatekeeperConfig::default());
        assert_eq!(r.failed_condition, Some(FailedCondition::SafeSet));
        assert!(is_valid(&c, &[], &env, &R3RParams::default(), &GatekeeperConfig::default()).valid);
    }

    #[test]
    fn report_display() {
        let w = Witness { time: 1.5, position: Point2::new(1.0, 2.0), neighbor: Some(AgentId(3)) };
        let r = ValidityReport::fail(FailedCondition::NeighborCollision, w);
        assert_eq!(r.to_string(), "invalid neighbor_collision t=1.500000 x=1.000000 y=2.000000 neighbor=3");
        assert_eq!(ValidityReport::pass(None).to_string(), "valid");
    }
}
