//! Sampled trajectories and the nominal → candidate → committed pipeline.
//!
//! A [`SampledTrajectory`] is a uniformly sampled finite prefix, replayed by
//! linear interpolation, optionally followed by an analytic loiter orbit that
//! makes it defined for all future time. Candidates splice an orbit onto a
//! nominal prefix at a switch time; commitments wrap a candidate that passed
//! validation together with the record of that check.

use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use crate::dynamics::{make_loiter, DubinsParams, DubinsState, DynamicsError, LoiterOrbit, TurnDirection};
use crate::geometry::{dist_ball_ball, Ball, Point2};
use crate::math;
use crate::AgentId;

/// Maximum position jump allowed where the prefix hands over to the orbit.
pub const SPLICE_TOLERANCE: f64 = 1e-6;

/// Largest multiple tried when looking for a common period of two orbits.
pub const COMMON_PERIOD_CAP: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("time {t} precedes the trajectory start {t0}")]
    BeforeStart { t: f64, t0: f64 },
    #[error("time {t} lies beyond the sampled horizon {end} of a trajectory without tail")]
    BeyondHorizon { t: f64, end: f64 },
    #[error("switch time {switch_time} outside [0, {horizon}]")]
    SwitchOutOfRange { switch_time: f64, horizon: f64 },
    #[error("comparison grid step must be positive, got {0}")]
    InvalidGrid(f64),
    #[error("comparison window starting at {from} is not covered by both trajectories")]
    UnalignedWindow { from: f64 },
    #[error("candidate trajectories need an orbit tail")]
    MissingTail,
    #[error("malformed trajectory: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Uniformly sampled prefix `(states, controls)` plus an optional orbit tail.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory {
    t0: f64,
    dt: f64,
    states: Vec<DubinsState>,
    controls: Vec<f64>,
    tail: Option<LoiterOrbit>,
    speed: f64,
}

impl SampledTrajectory {
    /// Checked constructor.
    pub fn new(
        t0: f64,
        dt: f64,
        states: Vec<DubinsState>,
        controls: Vec<f64>,
        tail: Option<LoiterOrbit>,
        speed: f64,
    ) -> Result<Self, TrajectoryError> {
        if !(dt > 0.0) || !t0.is_finite() {
            return Err(TrajectoryError::Malformed("non-positive step or non-finite start"));
        }
        if states.is_empty() || states.len() != controls.len() + 1 {
            return Err(TrajectoryError::Malformed("states must be one longer than controls"));
        }
        if !(speed >= 0.0) || states.iter().any(|s| !s.is_finite()) {
            return Err(TrajectoryError::Malformed("non-finite state or negative speed"));
        }
        let traj = Self { t0, dt, states, controls, tail, speed };
        if let Some(orbit) = traj.tail {
            let end = traj.prefix_end();
            if (orbit.entry_time - end).abs() > 1e-9 {
                return Err(TrajectoryError::Malformed("orbit entry time differs from prefix end"));
            }
            let last = traj.states.last().expect("non-empty").position();
            if orbit.position_at(end)?.distance(last) > SPLICE_TOLERANCE {
                return Err(TrajectoryError::Malformed("orbit does not start at the last sample"));
            }
        }
        Ok(traj)
    }

    pub(crate) fn from_parts(
        t0: f64,
        dt: f64,
        states: Vec<DubinsState>,
        controls: Vec<f64>,
        tail: Option<LoiterOrbit>,
        speed: f64,
    ) -> Self {
        debug_assert_eq!(states.len(), controls.len() + 1);
        Self { t0, dt, states, controls, tail, speed }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn states(&self) -> &[DubinsState] {
        &self.states
    }

    pub fn controls(&self) -> &[f64] {
        &self.controls
    }

    pub fn tail(&self) -> Option<&LoiterOrbit> {
        self.tail.as_ref()
    }

    /// Upper bound on the replay speed, used for inter-sample margins.
    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// Duration of the sampled prefix.
    pub fn prefix_duration(&self) -> f64 {
        self.controls.len() as f64 * self.dt
    }

    /// Absolute time at which the sampled prefix ends.
    pub fn prefix_end(&self) -> f64 {
        self.t0 + self.prefix_duration()
    }

    /// Returns a copy with the orbit tail replaced.
    pub fn with_tail(&self, tail: Option<LoiterOrbit>) -> Result<Self, TrajectoryError> {
        Self::new(self.t0, self.dt, self.states.clone(), self.controls.clone(), tail, self.speed)
    }

    /// State at absolute time `t`; see [`sample_at`].
    pub fn sample_at(&self, t: f64) -> Result<DubinsState, TrajectoryError> {
        if t < self.t0 - 1e-12 {
            return Err(TrajectoryError::BeforeStart { t, t0: self.t0 });
        }
        let n = self.controls.len();
        let end = self.prefix_end();
        if t <= end + 1e-12 || (self.tail.is_none() && t <= end + 1e-9) {
            let u = ((t - self.t0) / self.dt).max(0.0);
            let r = math::round(u);
            if (u - r).abs() < 1e-9 {
                return Ok(self.states[(r as usize).min(n)]);
            }
            let k = (math::floor(u) as usize).min(n.saturating_sub(1));
            let frac = u - k as f64;
            let (a, b) = (self.states[k], self.states[k + 1]);
            let dth = math::wrap_angle(b.theta - a.theta);
            return Ok(DubinsState::new(
                a.x + (b.x - a.x) * frac,
                a.y + (b.y - a.y) * frac,
                a.theta + dth * frac,
            ));
        }
        match &self.tail {
            Some(orbit) => Ok(orbit.state_at(t.max(orbit.entry_time))?),
            None => Err(TrajectoryError::BeyondHorizon { t, end }),
        }
    }

    pub fn position_at(&self, t: f64) -> Result<Point2, TrajectoryError> {
        self.sample_at(t).map(|s| s.position())
    }

    /// Turn rate in force at `t`.
    pub fn control_at(&self, t: f64) -> f64 {
        if t >= self.prefix_end() {
            if let Some(orbit) = &self.tail {
                return orbit.angular_rate();
            }
        }
        if self.controls.is_empty() {
            return 0.0;
        }
        let k = math::floor(((t - self.t0) / self.dt).max(0.0) + 1e-9) as usize;
        self.controls[k.min(self.controls.len() - 1)]
    }

    /// Largest distance of any replayed position from `p`, tail included.
    pub fn reach_from(&self, p: Point2) -> f64 {
        let prefix = self
            .states
            .iter()
            .map(|s| s.position().distance(p))
            .fold(0.0, f64::max);
        match &self.tail {
            Some(o) => prefix.max(o.center.distance(p) + o.radius),
            None => prefix,
        }
    }
}

/// State of `traj` at absolute time `t`.
///
/// Inside the prefix this interpolates linearly between samples (heading is
/// unwrapped first); past the prefix it evaluates the orbit tail analytically.
pub fn sample_at(traj: &SampledTrajectory, t: f64) -> Result<DubinsState, TrajectoryError> {
    traj.sample_at(t)
}

/// Nominal prefix up to `switch_time`, then a loiter orbit forever.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateTrajectory {
    base: SampledTrajectory,
    switch_time: f64,
    anchor: Point2,
    anchor_time: f64,
    reach: f64,
}

impl CandidateTrajectory {
    /// Wraps a trajectory with a tail; the anchor is its first position.
    pub fn new(base: SampledTrajectory) -> Result<Self, TrajectoryError> {
        if base.tail.is_none() {
            return Err(TrajectoryError::MissingTail);
        }
        let anchor = base.states[0].position();
        let reach = base.reach_from(anchor);
        Ok(Self {
            switch_time: base.prefix_duration(),
            anchor,
            anchor_time: base.t0,
            reach,
            base,
        })
    }

    pub fn base(&self) -> &SampledTrajectory {
        &self.base
    }

    /// Switch offset from the anchor time.
    pub fn switch_time(&self) -> f64 {
        self.switch_time
    }

    pub fn anchor(&self) -> Point2 {
        self.anchor
    }

    pub fn anchor_time(&self) -> f64 {
        self.anchor_time
    }

    pub fn orbit(&self) -> &LoiterOrbit {
        self.base.tail.as_ref().expect("candidates always carry a tail")
    }

    /// Absolute time at which the backup orbit is entered.
    pub fn orbit_entry_time(&self) -> f64 {
        self.base.prefix_end()
    }

    /// Radius of the smallest anchor-centred ball containing the trajectory.
    pub fn reach(&self) -> f64 {
        self.reach
    }

    pub fn bounding_ball(&self) -> Ball {
        Ball::new(self.anchor, self.reach).expect("reach is non-negative")
    }

    pub fn position_at(&self, t: f64) -> Result<Point2, TrajectoryError> {
        self.base.position_at(t)
    }
}

/// Loiter direction whose orbit centre lies closer to the anchor; ties go
/// counterclockwise.
pub fn preferred_direction(entry: &DubinsState, anchor: Point2, p: &DubinsParams) -> TurnDirection {
    let ccw = make_loiter(entry, TurnDirection::CounterClockwise, p, 0.0);
    let cw = make_loiter(entry, TurnDirection::Clockwise, p, 0.0);
    if cw.center.distance(anchor) < ccw.center.distance(anchor) - 1e-12 {
        TurnDirection::Clockwise
    } else {
        TurnDirection::CounterClockwise
    }
}

/// Keeps `nominal` up to `switch_time` and appends the loiter orbit entered
/// from the nominal state there, turning in the [`preferred_direction`].
///
/// The switch time is snapped to the nominal's sample grid.
pub fn compose_candidate(
    nominal: &SampledTrajectory,
    switch_time: f64,
    params: &DubinsParams,
) -> Result<CandidateTrajectory, TrajectoryError> {
    let k = switch_index(nominal, switch_time)?;
    let anchor = nominal.states[0].position();
    let direction = preferred_direction(&nominal.states[k], anchor, params);
    splice(nominal, k, params, direction)
}

/// [`compose_candidate`] with an explicit loiter direction.
pub fn compose_candidate_with_direction(
    nominal: &SampledTrajectory,
    switch_time: f64,
    params: &DubinsParams,
    direction: TurnDirection,
) -> Result<CandidateTrajectory, TrajectoryError> {
    let k = switch_index(nominal, switch_time)?;
    splice(nominal, k, params, direction)
}

fn switch_index(nominal: &SampledTrajectory, switch_time: f64) -> Result<usize, TrajectoryError> {
    let horizon = nominal.prefix_duration();
    if !(switch_time >= -1e-9 && switch_time <= horizon + 1e-9) {
        return Err(TrajectoryError::SwitchOutOfRange { switch_time, horizon });
    }
    let k = math::round(switch_time / nominal.dt).max(0.0) as usize;
    Ok(k.min(nominal.controls.len()))
}

fn splice(
    nominal: &SampledTrajectory,
    k: usize,
    params: &DubinsParams,
    direction: TurnDirection,
) -> Result<CandidateTrajectory, TrajectoryError> {
    let entry_time = nominal.t0 + k as f64 * nominal.dt;
    let orbit = make_loiter(&nominal.states[k], direction, params, entry_time);
    let base = SampledTrajectory::from_parts(
        nominal.t0,
        nominal.dt,
        nominal.states[..=k].to_vec(),
        nominal.controls[..k].to_vec(),
        Some(orbit),
        nominal.speed.max(params.v()),
    );
    CandidateTrajectory::new(base)
}

/// One committed neighbor trajectory as seen at certification time.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborCommit {
    pub id: AgentId,
    pub serial: u64,
    pub trajectory: Arc<CandidateTrajectory>,
}

/// Record of the validity check a commitment passed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidityCertificate {
    /// Safe set, backup reach, planning bound, neighbor separation.
    pub conditions_passed: [bool; 4],
    /// Committed trajectories of the neighbors checked against.
    pub neighbors: Vec<NeighborCommit>,
    /// Smallest neighbor separation bound found during the check.
    pub min_neighbor_separation: Option<f64>,
}

impl ValidityCertificate {
    pub fn all_passed(&self) -> bool {
        self.conditions_passed.iter().all(|&c| c)
    }
}

/// A certified candidate adopted by its owner. Immutable once built; a replan
/// replaces the whole object.
#[derive(Debug, Clone, PartialEq)]
pub struct CommittedTrajectory {
    candidate: Arc<CandidateTrajectory>,
    committed_at: f64,
    owner: AgentId,
    serial: u64,
    certificate: ValidityCertificate,
}

impl CommittedTrajectory {
    pub fn new(
        candidate: Arc<CandidateTrajectory>,
        owner: AgentId,
        committed_at: f64,
        serial: u64,
        certificate: ValidityCertificate,
    ) -> Self {
        Self { candidate, committed_at, owner, serial, certificate }
    }

    pub fn candidate(&self) -> &Arc<CandidateTrajectory> {
        &self.candidate
    }

    pub fn committed_at(&self) -> f64 {
        self.committed_at
    }

    pub fn owner(&self) -> AgentId {
        self.owner
    }

    pub fn serial(&self) -> u64 {
        self.serial
    }

    pub fn certificate(&self) -> &ValidityCertificate {
        &self.certificate
    }

    pub fn position_at(&self, t: f64) -> Result<Point2, TrajectoryError> {
        self.candidate.position_at(t)
    }
}

/// Common period of two orbits, if one exists with multiples up to the cap.
pub fn common_period(a: &LoiterOrbit, b: &LoiterOrbit) -> Option<f64> {
    let (pa, pb) = {
        let (x, y) = (a.period(), b.period());
        if x <= y { (x, y) } else { (y, x) }
    };
    for m in 1..=COMMON_PERIOD_CAP {
        for n in 1..=m {
            let (lhs, rhs) = (m as f64 * pa, n as f64 * pb);
            if (lhs - rhs).abs() <= 1e-9 * lhs {
                return Some(lhs.max(rhs));
            }
        }
    }
    None
}

/// Conservative lower bound on `min_{t >= from_t} |a(t) - b(t)|`.
///
/// Both trajectories are sampled on a common grid of step `grid_dt`; the
/// sampled minimum is lowered by `(v_a + v_b) * grid_dt / 2`, which bounds how
/// much the gap can shrink between grid points. Once both are on their orbits
/// the relative motion is periodic, so one common period is scanned; the
/// distance between the two orbit balls is an exact-for-all-time bound and the
/// larger of the two bounds is used. Orbits without a common period within the
/// cap fall back to the ball bound alone. Results are clamped at zero.
pub fn min_separation(
    a: &SampledTrajectory,
    b: &SampledTrajectory,
    from_t: f64,
    grid_dt: f64,
) -> Result<f64, TrajectoryError> {
    if !(grid_dt > 0.0) || !grid_dt.is_finite() {
        return Err(TrajectoryError::InvalidGrid(grid_dt));
    }
    if from_t < a.t0 - 1e-12 || from_t < b.t0 - 1e-12 || !from_t.is_finite() {
        return Err(TrajectoryError::UnalignedWindow { from: from_t });
    }
    let margin = 0.5 * (a.speed + b.speed) * grid_dt;

    let finite_end = match (a.tail.is_some(), b.tail.is_some()) {
        (true, true) => None,
        (true, false) => Some(b.prefix_end()),
        (false, true) => Some(a.prefix_end()),
        (false, false) => Some(a.prefix_end().min(b.prefix_end())),
    };
    let mixed_end = match finite_end {
        Some(end) => {
            if from_t > end + 1e-9 {
                return Err(TrajectoryError::UnalignedWindow { from: from_t });
            }
            end
        }
        None => a.prefix_end().max(b.prefix_end()).max(from_t),
    };

    let mut best = f64::INFINITY;
    let mut sample_gap = |t: f64| -> Result<(), TrajectoryError> {
        let d = a.position_at(t)?.distance(b.position_at(t)?);
        if d < best {
            best = d;
        }
        Ok(())
    };
    let mut bound = f64::INFINITY;
    if finite_end.is_some() || mixed_end > from_t {
        scan(from_t, mixed_end, grid_dt, &mut sample_gap)?;
        bound = best - margin;
    }

    if finite_end.is_none() {
        let (oa, ob) = (a.tail.as_ref().expect("tail"), b.tail.as_ref().expect("tail"));
        let ball_bound = dist_ball_ball(&oa.ball(), &ob.ball());
        let phase_bound = match common_period(oa, ob) {
            Some(period) => {
                let mut orbit_best = f64::INFINITY;
                scan(mixed_end, mixed_end + period, grid_dt, &mut |t| {
                    let d = oa.position_at(t)?.distance(ob.position_at(t)?);
                    if d < orbit_best {
                        orbit_best = d;
                    }
                    Ok(())
                })?;
                orbit_best - margin
            }
            None => f64::NEG_INFINITY,
        };
        bound = bound.min(ball_bound.max(phase_bound));
    }
    Ok(bound.max(0.0))
}

/// Calls `f` at `start, start + step, ...` and finally at `end`.
pub(crate) fn scan(
    start: f64,
    end: f64,
    step: f64,
    f: &mut impl FnMut(f64) -> Result<(), TrajectoryError>,
) -> Result<(), TrajectoryError> {
    let span = end - start;
    let n = if span > 0.0 { math::ceil(span / step - 1e-9) as usize } else { 0 };
    for i in 0..n {
        f(start + i as f64 * step)?;
    }
    f(end.max(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{propagate, ControlSchedule};
    use approx::assert_abs_diff_eq;

    fn unit() -> DubinsParams {
        DubinsParams::default()
    }

    fn straight(len: f64) -> SampledTrajectory {
        propagate(&DubinsState::default(), 0.0, &ControlSchedule::constant(0.0), 0.05, len, &unit()).unwrap()
    }

    #[test]
    fn sample_grid_points_exact() {
        let t = straight(3.0);
        assert_eq!(t.sample_at(0.0).unwrap(), t.states()[0]);
        for k in [1usize, 7, 33, 60] {
            assert_eq!(t.sample_at(k as f64 * 0.05).unwrap(), t.states()[k]);
        }
        assert!(t.sample_at(-0.1).is_err());
        assert!(matches!(t.sample_at(3.5), Err(TrajectoryError::BeyondHorizon { .. })));
    }

    #[test]
    fn sample_interpolates_heading_across_wrap() {
        let states = alloc::vec![DubinsState::new(0.0, 0.0, 3.1), DubinsState::new(0.0, 0.1, -3.1)];
        let t = SampledTrajectory::new(0.0, 0.1, states, alloc::vec![0.0], None, 1.0).unwrap();
        let mid = t.sample_at(0.05).unwrap();
        assert!(mid.theta.abs() > 3.1, "heading went the short way: {}", mid.theta);
    }

    #[test]
    fn sample_tail_delegates_to_orbit() {
        let c = compose_candidate(&straight(2.0), 1.0, &unit()).unwrap();
        let t = 4.2;
        let via_traj = c.base().sample_at(t).unwrap();
        let via_orbit = c.orbit().state_at(t).unwrap();
        assert_eq!(via_traj, via_orbit);
    }

    #[test]
    fn compose_boundaries() {
        let nom = straight(3.0);
        let zero = compose_candidate(&nom, 0.0, &unit()).unwrap();
        assert_eq!(zero.base().states().len(), 1);
        assert_eq!(zero.switch_time(), 0.0);
        let full = compose_candidate(&nom, 3.0, &unit()).unwrap();
        assert_eq!(full.base().states().len(), nom.states().len());
        assert!(compose_candidate(&nom, 3.5, &unit()).is_err());
        assert!(compose_candidate(&nom, -0.5, &unit()).is_err());
    }

    #[test]
    fn compose_half_switch_reach() {
        // 1.5 m of straight prefix, then a unit orbit: farthest point is
        // sqrt(1.5^2 + 1) + 1 from the anchor, at most 1.5 + 2.
        let c = compose_candidate(&straight(3.0), 1.5, &unit()).unwrap();
        let expected = (1.5f64 * 1.5 + 1.0).sqrt() + 1.0;
        assert_abs_diff_eq!(c.reach(), expected, epsilon = 1e-9);
        assert!(c.reach() <= 3.5);
        // dense sampling oracle
        let mut dense: f64 = 0.0;
        for i in 0..20_000 {
            let t = i as f64 * 1e-3;
            dense = dense.max(c.position_at(t).unwrap().distance(c.anchor()));
        }
        assert!(dense <= c.reach() + 1e-12 && dense > c.reach() - 1e-3);
    }

    #[test]
    fn splice_is_continuous() {
        let c = compose_candidate(&straight(3.0), 1.2, &unit()).unwrap();
        let end = c.orbit_entry_time();
        let last = *c.base().states().last().unwrap();
        let orbit = c.orbit().state_at(end).unwrap();
        assert!(last.position().distance(orbit.position()) < 1e-9);
        assert!(math::wrap_angle(last.theta - orbit.theta).abs() < 1e-9);
    }

    #[test]
    fn preferred_direction_points_back_to_anchor() {
        // heading north at (2, 0), anchor at origin: the ccw orbit centre (1, 0) is closer.
        let s = DubinsState::new(2.0, 0.0, core::f64::consts::FRAC_PI_2);
        assert_eq!(preferred_direction(&s, Point2::ORIGIN, &unit()), TurnDirection::CounterClockwise);
        let s = DubinsState::new(-2.0, 0.0, core::f64::consts::FRAC_PI_2);
        assert_eq!(preferred_direction(&s, Point2::ORIGIN, &unit()), TurnDirection::Clockwise);
        // equidistant: counterclockwise
        assert_eq!(
            preferred_direction(&DubinsState::default(), Point2::ORIGIN, &unit()),
            TurnDirection::CounterClockwise
        );
    }

    fn loiter_from(entry: DubinsState, dir: TurnDirection) -> SampledTrajectory {
        let orbit = make_loiter(&entry, dir, &unit(), 0.0);
        SampledTrajectory::new(0.0, 0.05, alloc::vec![entry], alloc::vec![], Some(orbit), 1.0).unwrap()
    }

    #[test]
    fn separation_of_two_loiters() {
        use core::f64::consts::FRAC_PI_2;
        use TurnDirection::{Clockwise, CounterClockwise};
        // centres (0, 0) and (4, 0), same sense, phases opposite: the inner
        // points meet at t = 0, so the ball distance is attained
        let a = loiter_from(DubinsState::new(1.0, 0.0, FRAC_PI_2), CounterClockwise);
        let b = loiter_from(DubinsState::new(3.0, 0.0, -FRAC_PI_2), CounterClockwise);
        assert_abs_diff_eq!(a.tail().unwrap().center.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.tail().unwrap().center.x, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(min_separation(&a, &b, 0.0, 0.05).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(min_separation(&a, &a, 0.0, 0.05).unwrap(), 0.0);
        // mirrored rotation keeps the pair at least 4 apart; the bound never
        // drops below the ball distance
        let c = loiter_from(DubinsState::new(5.0, 0.0, -FRAC_PI_2), Clockwise);
        let d = min_separation(&a, &c, 0.0, 0.05).unwrap();
        assert!(d >= 2.0 && d <= 4.0, "{d}");
        assert_eq!(d, min_separation(&c, &a, 0.0, 0.05).unwrap());
    }

    #[test]
    fn separation_errors() {
        let a = straight(2.0);
        assert!(min_separation(&a, &a, 0.0, 0.0).is_err());
        assert!(min_separation(&a, &a, -1.0, 0.05).is_err());
        assert!(min_separation(&a, &a, 2.5, 0.05).is_err());
    }

    #[test]
    fn common_periods() {
        let a = loiter_from(DubinsState::new(1.0, 0.0, -core::f64::consts::FRAC_PI_2), TurnDirection::Clockwise);
        let p = a.tail().unwrap().period();
        assert_abs_diff_eq!(common_period(a.tail().unwrap(), a.tail().unwrap()).unwrap(), p, epsilon = 1e-12);
        let mut big = *a.tail().unwrap();
        big.radius = 2.0;
        assert_abs_diff_eq!(common_period(a.tail().unwrap(), &big).unwrap(), 2.0 * p, epsilon = 1e-9);
        big.radius = core::f64::consts::SQRT_2;
        assert!(common_period(a.tail().unwrap(), &big).is_none());
    }
}
