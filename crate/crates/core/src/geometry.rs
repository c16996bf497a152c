//! Euclidean primitives, planning-ball checks and the radius relation.
//!
//! The safety argument rests on two facts about balls. If two trajectories
//! each stay within `r` of their anchors and the anchors are at least
//! `2r + delta` apart, the trajectories can never come closer than `delta`.
//! Restated at the later commit time, any future collider must currently be
//! within `3r + delta`, which is why the communication radius is tied to the
//! planning radius by `r_comm = 3 * r_plan + delta`.

use core::ops::{Add, Mul, Sub};

use thiserror::Error;

use crate::math;
use crate::trajectory::SampledTrajectory;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("ball radius must be finite and non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("communication radius {r_comm} must exceed collision radius {delta} > 0")]
    DegenerateRadii { r_comm: f64, delta: f64 },
    #[error("collision radius {delta} must be positive and below the planning radius {r_plan}")]
    DeltaNotBelowPlan { delta: f64, r_plan: f64 },
    #[error("trajectory has no infinite tail; boundedness cannot be decided")]
    MissingTail,
}

/// A position in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Linear interpolation, `s = 0` gives `self`.
    pub fn lerp(self, other: Point2, s: f64) -> Point2 {
        Point2::new(self.x + (other.x - self.x) * s, self.y + (other.y - self.y) * s)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

/// Closed ball `{ y : |y - center| <= radius }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Point2,
    radius: f64,
}

impl Ball {
    pub fn new(center: Point2, radius: f64) -> Result<Self, GeometryError> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(GeometryError::NegativeRadius(radius));
        }
        Ok(Self { center, radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.center.distance(p) <= self.radius
    }

    /// True if `other` lies entirely inside `self`.
    pub fn contains_ball(&self, other: &Ball) -> bool {
        self.center.distance(other.center) + other.radius <= self.radius
    }
}

/// The shared radii of the protocol: collision radius `delta`, planning radius
/// `r_plan` and communication radius `r_comm = 3 * r_plan + delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R3RParams {
    delta: f64,
    r_plan: f64,
    r_comm: f64,
}

impl R3RParams {
    /// Derives the planning radius from a communication radius.
    pub fn from_comm(r_comm: f64, delta: f64) -> Result<Self, GeometryError> {
        let r_plan = r3r_plan_radius(r_comm, delta)?;
        Self::checked(delta, r_plan, r_comm)
    }

    /// Derives the communication radius from a planning radius.
    pub fn from_plan(r_plan: f64, delta: f64) -> Result<Self, GeometryError> {
        Self::checked(delta, r_plan, 3.0 * r_plan + delta)
    }

    fn checked(delta: f64, r_plan: f64, r_comm: f64) -> Result<Self, GeometryError> {
        if !(delta > 0.0) || !(delta < r_plan) || !r_plan.is_finite() {
            return Err(GeometryError::DeltaNotBelowPlan { delta, r_plan });
        }
        Ok(Self { delta, r_plan, r_comm })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn r_plan(&self) -> f64 {
        self.r_plan
    }

    pub fn r_comm(&self) -> f64 {
        self.r_comm
    }
}

impl Default for R3RParams {
    /// `r_comm = 16`, `delta = 0.5`.
    fn default() -> Self {
        Self::from_comm(16.0, 0.5).expect("default radii are consistent")
    }
}

pub fn dist_point_point(a: Point2, b: Point2) -> f64 {
    a.distance(b)
}

/// Set distance between two closed balls, zero when they overlap.
pub fn dist_ball_ball(a: &Ball, b: &Ball) -> f64 {
    (a.center.distance(b.center) - (a.radius + b.radius)).max(0.0)
}

/// Solves `r_comm = 3 * r_plan + delta` for the planning radius.
pub fn r3r_plan_radius(r_comm: f64, delta: f64) -> Result<f64, GeometryError> {
    if !(delta > 0.0) || !(r_comm > delta) || !r_comm.is_finite() {
        return Err(GeometryError::DegenerateRadii { r_comm, delta });
    }
    Ok((r_comm - delta) / 3.0)
}

/// True iff two `r`-bounded trajectories anchored at these points can never
/// come within `delta` of each other: `|a - b| >= 2r + delta`.
pub fn anchors_preclude_collision(anchor_a: Point2, anchor_b: Point2, r: f64, delta: f64) -> bool {
    anchor_a.distance(anchor_b) >= 2.0 * r + delta
}

/// Checks `|p(t) - anchor| <= r + tol` for all `t >= t0`.
///
/// The sampled prefix is checked sample by sample. Between samples the
/// trajectory is replayed by linear interpolation, and a ball is convex, so
/// the sample test is exact for the prefix. The loiter tail is checked in
/// closed form: its circle must fit inside the anchor ball.
pub fn is_r_bounded(
    traj: &SampledTrajectory,
    anchor: Point2,
    r: f64,
    tol: f64,
) -> Result<bool, GeometryError> {
    let tail = traj.tail().ok_or(GeometryError::MissingTail)?;
    let limit = r + tol;
    let prefix_ok = traj
        .states()
        .iter()
        .all(|s| s.position().distance(anchor) <= limit);
    Ok(prefix_ok && tail.center.distance(anchor) + tail.radius <= limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ball(x: f64, y: f64, r: f64) -> Ball {
        Ball::new(Point2::new(x, y), r).unwrap()
    }

    #[test]
    fn point_distances() {
        assert_eq!(dist_point_point(Point2::new(0.0, 0.0), Point2::new(3.0, 4.0)), 5.0);
        assert_eq!(dist_point_point(Point2::new(1.0, 1.0), Point2::new(1.0, 1.0)), 0.0);
        assert_abs_diff_eq!(
            dist_point_point(Point2::ORIGIN, Point2::new(1.0, 1.0)),
            core::f64::consts::SQRT_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn ball_distances() {
        assert_eq!(dist_ball_ball(&ball(0.0, 0.0, 1.0), &ball(4.0, 0.0, 1.0)), 2.0);
        assert_eq!(dist_ball_ball(&ball(0.0, 0.0, 2.0), &ball(1.0, 0.0, 2.0)), 0.0);
        assert_eq!(dist_ball_ball(&ball(0.0, 0.0, 1.0), &ball(3.0, 4.0, 1.0)), 3.0);
    }

    #[test]
    fn negative_radius_rejected() {
        assert!(Ball::new(Point2::ORIGIN, -0.1).is_err());
        assert!(Ball::new(Point2::ORIGIN, f64::NAN).is_err());
        assert!(Ball::new(Point2::ORIGIN, 0.0).is_ok());
    }

    #[test]
    fn plan_radius_from_comm() {
        let r = r3r_plan_radius(16.0, 0.5).unwrap();
        assert_abs_diff_eq!(r, 15.5 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 5.1667, epsilon = 1e-4);
        assert_eq!(r3r_plan_radius(3.5, 0.5).unwrap(), 1.0);
        assert!(r3r_plan_radius(1.0, 1.0).is_err());
        assert!(r3r_plan_radius(1.0, 0.0).is_err());
    }

    #[test]
    fn params_satisfy_relation() {
        let p = R3RParams::from_comm(16.0, 0.5).unwrap();
        assert_abs_diff_eq!(p.r_comm(), 3.0 * p.r_plan() + p.delta(), epsilon = 1e-12);
        let q = R3RParams::from_plan(1.0, 0.5).unwrap();
        assert_eq!(q.r_comm(), 3.5);
        // delta must be strictly below r_plan
        assert!(R3RParams::from_plan(0.5, 0.5).is_err());
        assert!(R3RParams::from_comm(2.0, 0.5).is_err());
    }

    #[test]
    fn anchor_separation_boundary() {
        let a = Point2::ORIGIN;
        assert!(anchors_preclude_collision(a, Point2::new(2.5, 0.0), 1.0, 0.5));
        assert!(!anchors_preclude_collision(a, Point2::new(2.49, 0.0), 1.0, 0.5));
    }
}
