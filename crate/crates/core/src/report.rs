//! Summaries computed from an event log alone, without the scenario.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::decision::PolicyKind;
use crate::domain::{ActionOrigin, ActionPhase, AssetId, ConditionState, EventPayload, EventRecord, Step};

/// Per-asset totals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetReport {
    pub asset: AssetId,
    pub condition: ConditionState,
    pub worst_condition: ConditionState,
    pub last_h: Option<f64>,
    pub alerts: u64,
    pub diagnoses: u64,
    pub recommendations: u64,
    pub failures: u64,
    pub emergency: u64,
    pub planned: u64,
    pub time_based: u64,
    pub operator: u64,
    pub cancelled: u64,
}

impl AssetReport {
    fn new(asset: AssetId) -> Self {
        Self {
            asset,
            condition: ConditionState::Normal,
            worst_condition: ConditionState::Normal,
            last_h: None,
            alerts: 0,
            diagnoses: 0,
            recommendations: 0,
            failures: 0,
            emergency: 0,
            planned: 0,
            time_based: 0,
            operator: 0,
            cancelled: 0,
        }
    }
}

/// Whole-log totals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogReport {
    pub events: u64,
    pub ticks: u64,
    pub last_t: Step,
    pub policy: Option<PolicyKind>,
    pub cumulative_cost: f64,
    pub by_kind: BTreeMap<String, u64>,
    pub assets: Vec<AssetReport>,
}

impl LogReport {
    pub fn from_records(records: &[EventRecord]) -> Self {
        let mut assets: BTreeMap<AssetId, AssetReport> = BTreeMap::new();
        let mut report = LogReport {
            events: records.len() as u64,
            ticks: 0,
            last_t: records.last().map_or(0, |r| r.t),
            policy: None,
            cumulative_cost: 0.0,
            by_kind: BTreeMap::new(),
            assets: Vec::new(),
        };
        for r in records {
            *report.by_kind.entry(r.kind().as_str().to_string()).or_default() += 1;
            if let EventPayload::PolicyTick(p) = &r.payload {
                report.ticks += 1;
                report.policy = Some(p.policy);
                report.cumulative_cost = p.cumulative_cost;
                continue;
            }
            let Some(id) = r.payload.asset() else { continue };
            let a = assets
                .entry(id.clone())
                .or_insert_with(|| AssetReport::new(id.clone()));
            match &r.payload {
                EventPayload::Alert(_) => a.alerts += 1,
                EventPayload::Diagnosis(_) => a.diagnoses += 1,
                EventPayload::Recommendation(_) => a.recommendations += 1,
                EventPayload::StateChange(s) => {
                    a.condition = s.to;
                    a.worst_condition = a.worst_condition.max(s.to);
                    a.last_h = Some(s.h);
                }
                EventPayload::Rul(est) => a.last_h = Some(est.h_now),
                EventPayload::Action(ev) => match (ev.phase, ev.origin) {
                    // a corrective repair is scheduled the step the asset fails
                    (ActionPhase::Scheduled, ActionOrigin::Corrective) => a.failures += 1,
                    (ActionPhase::Executed, ActionOrigin::Emergency) => a.emergency += 1,
                    (ActionPhase::Executed, ActionOrigin::Planned) => a.planned += 1,
                    (ActionPhase::Executed, ActionOrigin::TimeBased) => a.time_based += 1,
                    (ActionPhase::Executed, ActionOrigin::Operator) => a.operator += 1,
                    (ActionPhase::Cancelled, _) => a.cancelled += 1,
                    _ => {}
                },
                _ => {}
            }
        }
        report.assets = assets.into_values().collect();
        report
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let policy = self.policy.map_or("-", |p| p.as_str());
        let _ = writeln!(
            s,
            "events {}  ticks {}  last t {}  policy {}  cumulative cost {:.3}",
            self.events, self.ticks, self.last_t, policy, self.cumulative_cost
        );
        let kinds: Vec<String> = self.by_kind.iter().map(|(k, n)| format!("{k}={n}")).collect();
        let _ = writeln!(s, "by kind: {}", kinds.join(" "));
        let _ = writeln!(
            s,
            "{:<12} {:<10} {:<10} {:>6} {:>6} {:>6} {:>8} {:>8} {:>8} {:>9}",
            "asset",
            "condition",
            "worst",
            "alerts",
            "fails",
            "emerg",
            "planned",
            "interval",
            "operator",
            "cancelled"
        );
        for a in &self.assets {
            let _ = writeln!(
                s,
                "{:<12} {:<10} {:<10} {:>6} {:>6} {:>6} {:>8} {:>8} {:>8} {:>9}",
                a.asset.as_str(),
                a.condition.as_str(),
                a.worst_condition.as_str(),
                a.alerts,
                a.failures,
                a.emergency,
                a.planned,
                a.time_based,
                a.operator,
                a.cancelled
            );
        }
        s
    }

    /// One summary object followed by one object per asset.
    pub fn to_ndjson(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            kind: &'static str,
            events: u64,
            ticks: u64,
            last_t: Step,
            policy: Option<PolicyKind>,
            cumulative_cost: f64,
            by_kind: &'a BTreeMap<String, u64>,
        }
        #[derive(Serialize)]
        struct Row<'a> {
            kind: &'static str,
            #[serde(flatten)]
            asset: &'a AssetReport,
        }
        let mut s = serde_json::to_string(&Summary {
            kind: "summary",
            events: self.events,
            ticks: self.ticks,
            last_t: self.last_t,
            policy: self.policy,
            cumulative_cost: self.cumulative_cost,
            by_kind: &self.by_kind,
        })
        .expect("report serializes");
        s.push('\n');
        for a in &self.assets {
            s.push_str(
                &serde_json::to_string(&Row {
                    kind: "asset",
                    asset: a,
                })
                .expect("report serializes"),
            );
            s.push('\n');
        }
        s
    }
}
