//! Decentralized, asynchronous multi-agent motion planning with infinite-horizon
//! safety certificates.
//!
//! Every agent plans a goal-directed nominal trajectory, splices a loiter orbit
//! onto it, and only commits the result if the whole infinite-horizon candidate
//! stays inside a *planning ball* of radius `r_plan` around the agent's current
//! position (the anchor) and clears the committed trajectories of the agents it
//! can currently hear. Choosing the communication radius as
//! `r_comm = 3 * r_plan + delta` means any agent that could ever collide with a
//! fresh commitment is, at commit time, a neighbor; so purely local checks give
//! global, forward-invariant collision avoidance.
//!
//! The crate is `no_std` (with `alloc`) and contains the algorithmic core:
//!
//! - [`geometry`]: points, balls, the radius relation and boundedness checks.
//! - [`dynamics`]: Dubins vehicle, closed-form and RK4 propagation, loiter orbits.
//! - [`trajectory`]: sampled trajectories, candidate composition, separation.
//! - [`environment`]: occupancy grids, the safe set, scenario generation.
//! - [`planner`]: a Dubins-primitive RRT* producing nominal trajectories.
//! - [`validation`]: the four-condition validity check and the switch-time sweep.
//! - [`protocol`]: communication graph, arbitration and the join/replan update.
//! - [`sim`]: a deterministic event-driven closed-loop engine.
//!
//! File formats, the independent safety oracle and the command-line front end
//! live in the companion `r3r` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod dynamics;
pub mod environment;
pub mod geometry;
pub(crate) mod math;
pub mod planner;
pub mod protocol;
pub mod rng;
pub mod sim;
pub mod trajectory;
pub mod validation;

pub use dynamics::{DubinsParams, DubinsState, LoiterOrbit, TurnDirection};
pub use environment::{OccupancyEnvironment, Scenario, ScenarioKind};
pub use geometry::{Ball, Point2, R3RParams};
pub use planner::{NominalResult, PlannerConfig};
pub use protocol::{AgentRecord, AgentStatus, CommGraph, ReplanTrigger, World};
pub use sim::{SimConfig, Simulation};
pub use trajectory::{CandidateTrajectory, CommittedTrajectory, SampledTrajectory};
pub use validation::{GatekeeperConfig, ValidityReport};

/// Identifier of an agent within one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AgentId(pub u32);

impl core::fmt::Display for AgentId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}
