//! Deterministic closed-loop execution of a scenario.
//!
//! Physical time advances in steps of `sim_dt`. Before recording step `k`,
//! every queued protocol event with time `<= k * sim_dt` is arbitrated and
//! processed in order. Active agents replay their committed trajectories
//! exactly, so the recorded state at `t` is `sample_at(committed, t)`.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::environment::Scenario;
use crate::planner::PlannerConfig;
use crate::protocol::{
    arbitration_schedule, join_backoff, next_trigger, AgentRecord, AgentStatus, Clock, NullClock, ProtocolError,
    ReplanTrigger, UpdateOutcome, World,
};
use crate::validation::GatekeeperConfig;
use crate::AgentId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub sim_dt: f64,
    pub trigger: ReplanTrigger,
    pub goal_tolerance: f64,
    /// An active agent without a successful replan for this long is deadlocked.
    pub deadlock_window: f64,
    pub oracle_dt: f64,
    pub join_backoff_base: f64,
    pub join_backoff_cap: f64,
    /// End the run once every agent has reached its goal or left.
    pub stop_when_done: bool,
    pub gatekeeper: GatekeeperConfig,
    pub planner: PlannerConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sim_dt: 0.02,
            trigger: ReplanTrigger::default(),
            goal_tolerance: 1.0,
            deadlock_window: 30.0,
            oracle_dt: 0.02,
            join_backoff_base: 0.5,
            join_backoff_cap: 4.0,
            stop_when_done: true,
            gatekeeper: GatekeeperConfig::default(),
            planner: PlannerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Join,
    Replan,
    Leave,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Join => "join",
            EventKind::Replan => "replan",
            EventKind::Leave => "leave",
        }
    }
}

/// One processed event, as written to the event log.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub kind: EventKind,
    pub agent: AgentId,
    /// `None` for leave events.
    pub outcome: Option<UpdateOutcome>,
    pub switch_time: Option<f64>,
    pub neighbors: Vec<AgentId>,
    pub active_agents: usize,
    pub replan_ms: f64,
}

impl EventRecord {
    pub fn outcome_name(&self) -> &'static str {
        self.outcome.map_or("retired", UpdateOutcome::name)
    }
}

impl fmt::Display for EventRecord {
    /// `t event agent outcome T_S n_neighbors replan_ms`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9} {} {} {} ", self.t, self.kind.name(), self.agent, self.outcome_name())?;
        match self.switch_time {
            Some(ts) => write!(f, "{:.3}", ts)?,
            None => write!(f, "-")?,
        }
        write!(f, " {} {:.3}", self.neighbors.len(), self.replan_ms)
    }
}

/// One recorded sample of an agent's motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Queued {
    time: f64,
    agent: AgentId,
    kind: EventKind,
    /// Replan events carry the agent's generation; stale ones are dropped.
    generation: u64,
}

/// Logical results of a run (no oracle, no wall clock).
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub end_time: f64,
    pub agents: usize,
    pub reached_goal: usize,
    pub replans: usize,
    pub failed_replans: usize,
    pub total_neighbors: usize,
    pub max_neighbors: usize,
    pub deadlocked: usize,
    pub total_replan_ms: f64,
}

impl SimSummary {
    pub fn success_fraction(&self) -> f64 {
        if self.agents == 0 { 0.0 } else { self.reached_goal as f64 / self.agents as f64 }
    }

    pub fn failure_rate(&self) -> f64 {
        if self.replans == 0 { 0.0 } else { self.failed_replans as f64 / self.replans as f64 }
    }

    pub fn avg_neighbors(&self) -> f64 {
        if self.replans == 0 { 0.0 } else { self.total_neighbors as f64 / self.replans as f64 }
    }

    pub fn mean_replan_ms(&self) -> f64 {
        if self.replans == 0 { 0.0 } else { self.total_replan_ms / self.replans as f64 }
    }
}

pub struct Simulation {
    pub scenario: Scenario,
    pub cfg: SimConfig,
    pub world: World,
    queue: Vec<Queued>,
    generation: Vec<u64>,
    reached: Vec<bool>,
    traces: Vec<Vec<TraceSample>>,
    events: Vec<EventRecord>,
    clock: Box<dyn Clock>,
    step: u64,
    finished: bool,
}

impl fmt::Debug for Simulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Simulation")
            .field("scenario", &self.scenario.name)
            .field("step", &self.step)
            .field("events", &self.events.len())
            .finish()
    }
}

impl Simulation {
    pub fn new(scenario: Scenario, cfg: SimConfig) -> Self {
        Self::with_clock(scenario, cfg, Box::new(NullClock))
    }

    pub fn with_clock(scenario: Scenario, cfg: SimConfig, clock: Box<dyn Clock>) -> Self {
        let agents: Vec<AgentRecord> = scenario
            .agents
            .iter()
            .enumerate()
            .map(|(i, s)| AgentRecord::from_spec(AgentId(i as u32), s, scenario.params, scenario.dubins, cfg.trigger))
            .collect();
        let n = agents.len();
        let mut queue = Vec::new();
        for (i, s) in scenario.agents.iter().enumerate() {
            let agent = AgentId(i as u32);
            queue.push(Queued { time: s.join_time, agent, kind: EventKind::Join, generation: 0 });
            if let Some(t) = s.leave_time {
                queue.push(Queued { time: t, agent, kind: EventKind::Leave, generation: 0 });
            }
        }
        let world = World::new(
            agents,
            Arc::new(scenario.env.clone()),
            scenario.params,
            cfg.gatekeeper,
            cfg.planner,
            cfg.goal_tolerance,
            scenario.seed,
        );
        Self {
            scenario,
            cfg,
            world,
            queue,
            generation: alloc::vec![0; n],
            reached: alloc::vec![false; n],
            traces: alloc::vec![Vec::new(); n],
            events: Vec::new(),
            clock,
            step: 0,
            finished: false,
        }
    }

    pub fn traces(&self) -> &[Vec<TraceSample>] {
        &self.traces
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.cfg.sim_dt
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Agents that reached their goal region at some point.
    pub fn reached(&self) -> &[bool] {
        &self.reached
    }

    /// Runs to completion.
    pub fn run(&mut self) -> Result<SimSummary, ProtocolError> {
        self.run_observed(&mut |_, _| {})
    }

    /// Runs to completion, calling `observer` after every processed event.
    pub fn run_observed(
        &mut self,
        observer: &mut dyn FnMut(&World, &EventRecord),
    ) -> Result<SimSummary, ProtocolError> {
        while !self.finished {
            self.advance(observer)?;
        }
        Ok(self.summary())
    }

    /// Processes due events and records one step.
    pub fn advance(&mut self, observer: &mut dyn FnMut(&World, &EventRecord)) -> Result<(), ProtocolError> {
        if self.finished {
            return Ok(());
        }
        let t = self.time();
        if t > self.scenario.duration + 1e-9 {
            self.finished = true;
            return Ok(());
        }
        self.process_due(t, observer)?;
        self.record(t)?;
        if self.cfg.stop_when_done && self.all_done() {
            self.finished = true;
        }
        self.step += 1;
        Ok(())
    }

    fn all_done(&self) -> bool {
        self.world.agents.iter().all(|a| a.status == AgentStatus::Retired || (a.status == AgentStatus::Active && a.terminal))
    }

    fn process_due(&mut self, t: f64, observer: &mut dyn FnMut(&World, &EventRecord)) -> Result<(), ProtocolError> {
        loop {
            let mut due = Vec::new();
            self.queue.retain(|q| {
                if q.time <= t + 1e-12 {
                    due.push(*q);
                    false
                } else {
                    true
                }
            });
            due.retain(|q| q.kind != EventKind::Replan || q.generation == self.generation[q.agent.0 as usize]);
            if due.is_empty() {
                return Ok(());
            }
            // one event per agent: a due leave wins, otherwise the earliest
            due.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.agent.cmp(&b.agent)));
            let mut picked: Vec<Queued> = Vec::new();
            for q in &due {
                match picked.iter_mut().find(|p| p.agent == q.agent) {
                    Some(p) if q.kind == EventKind::Leave && p.kind != EventKind::Leave => *p = *q,
                    Some(_) => {}
                    None => picked.push(*q),
                }
            }
            let requests: Vec<(AgentId, f64)> = picked.iter().map(|q| (q.agent, q.time)).collect();
            let prior = self.world.update_times();
            let world = &self.world;
            let order = arbitration_schedule(&requests, &prior, |a, b, s| world.may_communicate(a, b, s));
            for (agent, time) in order {
                let kind = picked.iter().find(|q| q.agent == agent).map(|q| q.kind).expect("scheduled");
                if let Some(rec) = self.process(agent, kind, time)? {
                    observer(&self.world, &rec);
                    self.events.push(rec);
                }
            }
        }
    }

    fn schedule_replan(&mut self, agent: AgentId, time: f64) {
        let g = &mut self.generation[agent.0 as usize];
        *g += 1;
        self.queue.push(Queued { time, agent, kind: EventKind::Replan, generation: *g });
    }

    fn process(&mut self, agent: AgentId, kind: EventKind, time: f64) -> Result<Option<EventRecord>, ProtocolError> {
        let i = agent.0 as usize;
        let status = self.world.agents[i].status;
        if status == AgentStatus::Retired {
            return Ok(None);
        }
        if kind == EventKind::Leave {
            self.world.retire(agent, time)?;
            self.generation[i] += 1;
            return Ok(Some(EventRecord {
                t: time,
                kind,
                agent,
                outcome: None,
                switch_time: None,
                neighbors: Vec::new(),
                active_agents: self.active_count(),
                replan_ms: 0.0,
            }));
        }
        if kind == EventKind::Replan && (status != AgentStatus::Active || self.world.agents[i].terminal) {
            return Ok(None);
        }
        if kind == EventKind::Join && status != AgentStatus::Pending {
            return Ok(None);
        }
        let report = self.world.update_state(agent, time, self.clock.as_mut())?;
        let rec = &self.world.agents[i];
        match report.outcome {
            UpdateOutcome::JoinRejected => {
                let delay = join_backoff(
                    self.cfg.join_backoff_base,
                    self.cfg.join_backoff_cap,
                    rec.attempts.saturating_sub(1),
                    self.scenario.seed,
                    agent,
                );
                self.queue.push(Queued { time: time + delay, agent, kind: EventKind::Join, generation: 0 });
            }
            UpdateOutcome::Terminal => {
                self.reached[i] = true;
                self.generation[i] += 1;
            }
            UpdateOutcome::Joined | UpdateOutcome::Committed | UpdateOutcome::KeptOld => {
                let next = next_trigger(rec, rec.trigger, time);
                self.schedule_replan(agent, next);
            }
        }
        Ok(Some(EventRecord {
            t: time,
            kind,
            agent,
            outcome: Some(report.outcome),
            switch_time: report.switch_time,
            neighbors: report.neighbors,
            active_agents: self.active_count(),
            replan_ms: report.replan_ms,
        }))
    }

    fn active_count(&self) -> usize {
        self.world.agents.iter().filter(|a| a.status == AgentStatus::Active).count()
    }

    fn record(&mut self, t: f64) -> Result<(), ProtocolError> {
        for i in 0..self.world.agents.len() {
            let a = &self.world.agents[i];
            if a.status != AgentStatus::Active {
                continue;
            }
            let Some(c) = &a.committed else { continue };
            let base = c.candidate().base();
            if t < base.t0() {
                // joined a few arbitration steps after this instant
                continue;
            }
            let s = base.sample_at(t)?;
            self.traces[i].push(TraceSample { t, x: s.x, y: s.y, theta: s.theta, omega: base.control_at(t) });
            // entering the goal region triggers an immediate terminal attempt
            if !a.terminal && s.position().distance(a.goal) <= self.cfg.goal_tolerance {
                let next = self
                    .queue
                    .iter()
                    .filter(|q| q.agent == a.id && q.kind == EventKind::Replan && q.generation == self.generation[i])
                    .map(|q| q.time)
                    .fold(f64::INFINITY, f64::min);
                let soon = t + self.cfg.sim_dt;
                if next > soon + 1e-12 {
                    self.schedule_replan(a.id, soon);
                }
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> SimSummary {
        let end_time = self.time().min(self.scenario.duration);
        let mut s = SimSummary {
            end_time,
            agents: self.world.agents.len(),
            reached_goal: 0,
            replans: 0,
            failed_replans: 0,
            total_neighbors: 0,
            max_neighbors: 0,
            deadlocked: 0,
            total_replan_ms: 0.0,
        };
        for (i, a) in self.world.agents.iter().enumerate() {
            let near_goal = a.status == AgentStatus::Active
                && a.state_at(end_time).is_ok_and(|st| st.position().distance(a.goal) <= self.cfg.goal_tolerance);
            if self.reached[i] || near_goal {
                s.reached_goal += 1;
            }
            if a.status == AgentStatus::Active && !a.terminal && end_time - a.last_commit > self.cfg.deadlock_window {
                s.deadlocked += 1;
            }
        }
        for e in &self.events {
            let Some(outcome) = e.outcome else { continue };
            s.replans += 1;
            if !outcome.is_success() {
                s.failed_replans += 1;
            }
            s.total_neighbors += e.neighbors.len();
            s.max_neighbors = s.max_neighbors.max(e.neighbors.len());
            s.total_replan_ms += e.replan_ms;
        }
        s
    }
}
