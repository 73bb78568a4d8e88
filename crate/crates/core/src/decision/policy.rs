//! Maintenance policies, their cost ledger, and the multi-seed comparison
//! harness.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::scenario::{Scenario, ScenarioError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Repair only after functional failure.
    CorrectiveOnly,
    /// Replace every asset at fixed multiples of the interval.
    TimeBased,
    /// Act on the monitored condition through the IPDSS.
    ConditionBased,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [
        PolicyKind::CorrectiveOnly,
        PolicyKind::TimeBased,
        PolicyKind::ConditionBased,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::CorrectiveOnly => "corrective_only",
            PolicyKind::TimeBased => "time_based",
            PolicyKind::ConditionBased => "condition_based",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Costs {
    pub inspect: f64,
    pub preventive: f64,
    pub corrective: f64,
    #[serde(default)]
    pub downtime_per_step: f64,
    #[serde(default)]
    pub stock_per_part_step: f64,
}

impl Default for Costs {
    fn default() -> Self {
        Self {
            inspect: 0.2,
            preventive: 1.0,
            corrective: 10.0,
            downtime_per_step: 2.0,
            stock_per_part_step: 0.01,
        }
    }
}

impl Costs {
    pub fn zero() -> Self {
        Self {
            inspect: 0.0,
            preventive: 0.0,
            corrective: 0.0,
            downtime_per_step: 0.0,
            stock_per_part_step: 0.0,
        }
    }

    /// Requires `corrective > preventive > inspect >= 0`; an all-zero cost
    /// table is also accepted.
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.inspect,
            self.preventive,
            self.corrective,
            self.downtime_per_step,
            self.stock_per_part_step,
        ];
        if all.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err("costs must be finite and >= 0".into());
        }
        if *self == Costs::zero() {
            return Ok(());
        }
        if !(self.corrective > self.preventive && self.preventive > self.inspect) {
            return Err(format!(
                "costs must satisfy corrective > preventive > inspect, got {} / {} / {}",
                self.corrective, self.preventive, self.inspect
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Replacement interval for `time_based`; defaults to half the MTBF.
    #[serde(default)]
    pub interval_steps: Option<u64>,
    pub mtbf_steps: f64,
    #[serde(default)]
    pub costs: Costs,
    /// Steps between a planned corrective action and the lower RUL band.
    #[serde(default = "defaults::safety_margin")]
    pub safety_margin: u64,
    /// Steps a spare is held before a scheduled action.
    #[serde(default = "defaults::spare_lead_time")]
    pub spare_lead_time: u64,
    /// Steps between a functional failure and its repair.
    #[serde(default)]
    pub repair_delay: u64,
    #[serde(default = "defaults::reinspect_interval")]
    pub reinspect_interval: u64,
    #[serde(default = "defaults::restore_delta")]
    pub restore_delta: f64,
}

mod defaults {
    pub fn safety_margin() -> u64 {
        2
    }
    pub fn spare_lead_time() -> u64 {
        5
    }
    pub fn reinspect_interval() -> u64 {
        5
    }
    pub fn restore_delta() -> f64 {
        0.5
    }
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, mtbf_steps: f64, costs: Costs) -> Self {
        Self {
            kind,
            interval_steps: None,
            mtbf_steps,
            costs,
            safety_margin: defaults::safety_margin(),
            spare_lead_time: defaults::spare_lead_time(),
            repair_delay: 0,
            reinspect_interval: defaults::reinspect_interval(),
            restore_delta: defaults::restore_delta(),
        }
    }

    pub fn with_kind(&self, kind: PolicyKind) -> Self {
        Self { kind, ..self.clone() }
    }

    pub fn interval(&self) -> u64 {
        self.interval_steps
            .unwrap_or_else(|| ((self.mtbf_steps / 2.0).floor() as u64).max(1))
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.mtbf_steps.is_finite() && self.mtbf_steps > 0.0) {
            return Err("mtbf_steps must be > 0".into());
        }
        if self.interval_steps == Some(0) {
            return Err("interval_steps must be >= 1".into());
        }
        if !(self.restore_delta.is_finite() && self.restore_delta > 0.0) {
            return Err("restore_delta must be > 0".into());
        }
        self.costs.validate()
    }
}

/// Counters accumulated by one engine run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub steps: u64,
    pub preventive: u64,
    pub emergency: u64,
    pub unplanned_failures: u64,
    pub inspections: u64,
    pub downtime_steps: u64,
    /// Sum over steps of the spare parts on hand.
    pub spare_part_steps: u64,
}

impl RunLedger {
    pub fn total_cost(&self, costs: &Costs) -> f64 {
        self.preventive as f64 * costs.preventive
            + (self.emergency + self.unplanned_failures) as f64 * costs.corrective
            + self.inspections as f64 * costs.inspect
            + self.downtime_steps as f64 * costs.downtime_per_step
            + self.spare_part_steps as f64 * costs.stock_per_part_step
    }

    pub fn mean_spare_stock(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.spare_part_steps as f64 / self.steps as f64
        }
    }
}

/// Aggregate over seeds. Counts are totals; cost and stock are per-seed means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub policy: PolicyKind,
    pub seeds: u64,
    pub mean_total_cost: f64,
    pub unplanned_failures: u64,
    pub preventive_count: u64,
    pub emergency_count: u64,
    pub inspections: u64,
    pub downtime_steps: u64,
    pub mean_spare_stock: f64,
}

impl PolicyReport {
    pub fn from_runs(policy: PolicyKind, costs: &Costs, runs: &[RunLedger]) -> Self {
        let n = runs.len().max(1) as f64;
        let mut report = PolicyReport {
            policy,
            seeds: runs.len() as u64,
            mean_total_cost: 0.0,
            unplanned_failures: 0,
            preventive_count: 0,
            emergency_count: 0,
            inspections: 0,
            downtime_steps: 0,
            mean_spare_stock: 0.0,
        };
        // fold in seed order
        for r in runs {
            report.mean_total_cost += r.total_cost(costs);
            report.unplanned_failures += r.unplanned_failures;
            report.preventive_count += r.preventive;
            report.emergency_count += r.emergency;
            report.inspections += r.inspections;
            report.downtime_steps += r.downtime_steps;
            report.mean_spare_stock += r.mean_spare_stock();
        }
        report.mean_total_cost /= n;
        report.mean_spare_stock /= n;
        report
    }
}

/// Runs `scenario` under `cfg` for seeds `master_seed, master_seed + 1, ...`.
pub fn evaluate_policy(
    scenario: &Scenario,
    cfg: &PolicyConfig,
    n_seeds: u64,
) -> Result<PolicyReport, ScenarioError> {
    cfg.validate().map_err(ScenarioError::Invalid)?;
    let runs = (0..n_seeds.max(1))
        .into_par_iter()
        .map(|i| {
            let mut sc = scenario.clone();
            sc.master_seed = scenario.master_seed.wrapping_add(i);
            sc.policy = cfg.clone();
            let mut engine = Engine::new(sc)?;
            engine
                .run_to_end()
                .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
            Ok(*engine.ledger())
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    Ok(PolicyReport::from_runs(cfg.kind, &cfg.costs, &runs))
}

/// Evaluates all three policies with the scenario's cost table.
pub fn compare_policies(scenario: &Scenario, n_seeds: u64) -> Result<Vec<PolicyReport>, ScenarioError> {
    PolicyKind::ALL
        .iter()
        .map(|&k| evaluate_policy(scenario, &scenario.policy.with_kind(k), n_seeds))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_validation() {
        assert!(Costs::default().validate().is_ok());
        assert!(Costs::zero().validate().is_ok());
        let bad = Costs {
            preventive: 20.0,
            ..Costs::default()
        };
        assert!(bad.validate().is_err());
        let neg = Costs {
            inspect: -1.0,
            ..Costs::default()
        };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn interval_defaults_to_half_mtbf() {
        let cfg = PolicyConfig::new(PolicyKind::TimeBased, 101.0, Costs::default());
        assert_eq!(cfg.interval(), 50);
        let cfg = PolicyConfig {
            interval_steps: Some(7),
            ..cfg
        };
        assert_eq!(cfg.interval(), 7);
    }

    #[test]
    fn ledger_cost() {
        let l = RunLedger {
            steps: 10,
            preventive: 2,
            emergency: 1,
            unplanned_failures: 1,
            inspections: 4,
            downtime_steps: 3,
            spare_part_steps: 20,
        };
        let c = Costs {
            inspect: 0.5,
            preventive: 1.0,
            corrective: 10.0,
            downtime_per_step: 2.0,
            stock_per_part_step: 0.1,
        };
        assert!((l.total_cost(&c) - (2.0 + 20.0 + 2.0 + 6.0 + 2.0)).abs() < 1e-12);
        assert_eq!(l.mean_spare_stock(), 2.0);
    }
}
