//! Per-run metrics and their CSV form.

use std::fmt::Write as _;

use r3r_core::sim::SimSummary;

use crate::oracle::{agents_involved, Violation};

pub const METRICS_HEADER: &str =
    "scenario,n,seed,safety_pct,success_pct,avg_neighbors,max_neighbors,mean_replan_ms,fail_rate,deadlocks";

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub scenario: String,
    pub n: usize,
    pub seed: u64,
    /// Distinct (subject, contiguous interval) violations found by the oracle.
    pub safety_violations: usize,
    /// Share of agents never involved in a violation, in percent.
    pub safety_pct: f64,
    pub success_fraction: f64,
    pub avg_neighbors_per_replan: f64,
    pub max_neighbors: usize,
    pub mean_replan_ms: f64,
    pub replan_failure_rate: f64,
    pub deadlocked_agents: usize,
}

impl Metrics {
    pub fn new(scenario: &str, seed: u64, summary: &SimSummary, violations: &[Violation]) -> Self {
        let n = summary.agents;
        let bad = agents_involved(violations).len();
        let safety_pct = if n == 0 { 100.0 } else { 100.0 * (n - bad.min(n)) as f64 / n as f64 };
        Self {
            scenario: scenario.to_string(),
            n,
            seed,
            safety_violations: violations.len(),
            safety_pct,
            success_fraction: summary.success_fraction(),
            avg_neighbors_per_replan: summary.avg_neighbors(),
            max_neighbors: summary.max_neighbors,
            mean_replan_ms: summary.mean_replan_ms(),
            replan_failure_rate: summary.failure_rate(),
            deadlocked_agents: summary.deadlocked,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.2},{:.2},{:.3},{},{:.4},{:.4},{}",
            self.scenario,
            self.n,
            self.seed,
            self.safety_pct,
            100.0 * self.success_fraction,
            self.avg_neighbors_per_replan,
            self.max_neighbors,
            self.mean_replan_ms,
            self.replan_failure_rate,
            self.deadlocked_agents
        )
    }
}

pub fn metrics_csv(rows: &[Metrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub const SUMMARY_HEADER: &str =
    "scenario,n,trials,mean_safety_pct,min_safety_pct,mean_success_pct,min_success_pct,mean_replan_ms,mean_fail_rate,violations,deadlocks";

/// One aggregate line over the trials of a batch.
pub fn summary_csv(rows: &[Metrics]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    if rows.is_empty() {
        return out;
    }
    let k = rows.len() as f64;
    let mean = |f: &dyn Fn(&Metrics) -> f64| rows.iter().map(f).sum::<f64>() / k;
    let min = |f: &dyn Fn(&Metrics) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
    let _ = writeln!(
        out,
        "{},{},{},{:.2},{:.2},{:.2},{:.2},{:.4},{:.4},{},{}",
        rows[0].scenario,
        rows[0].n,
        rows.len(),
        mean(&|m| m.safety_pct),
        min(&|m| m.safety_pct),
        mean(&|m| 100.0 * m.success_fraction),
        min(&|m| 100.0 * m.success_fraction),
        mean(&|m| m.mean_replan_ms),
        mean(&|m| m.replan_failure_rate),
        rows.iter().map(|m| m.safety_violations).sum::<usize>(),
        rows.iter().map(|m| m.deadlocked_agents).sum::<usize>(),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Subject;
    use r3r_core::AgentId;

    fn summary() -> SimSummary {
        SimSummary {
            end_time: 10.0,
            agents: 4,
            reached_goal: 3,
            replans: 10,
            failed_replans: 2,
            total_neighbors: 15,
            max_neighbors: 3,
            deadlocked: 0,
            total_replan_ms: 20.0,
        }
    }

    #[test]
    fn row_layout() {
        let m = Metrics::new("swap4", 7, &summary(), &[]);
        assert_eq!(m.csv_row(), "swap4,4,7,100.00,75.00,1.500,3,2.0000,0.2000,0");
        assert_eq!(METRICS_HEADER.split(',').count(), m.csv_row().split(',').count());
    }

    #[test]
    fn safety_counts_agents() {
        let v = Violation { subject: Subject::Pair(AgentId(0), AgentId(2)), start: 1.0, end: 1.2, worst_t: 1.1, worst: 0.4 };
        let m = Metrics::new("x", 0, &summary(), &[v, v]);
        assert_eq!(m.safety_violations, 2);
        assert_eq!(m.safety_pct, 50.0);
    }
}
