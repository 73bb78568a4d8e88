//! Recommended action plus priced alternatives, and the what-if projection
//! used by the operator console. Both share [`expected_cost`].

use serde::{Deserialize, Serialize};

use super::ipdss::planned_due;
use super::policy::Costs;
use crate::diagnosis::{Diagnosis, DiagnosisSource};
use crate::domain::{AssetId, CaseId, ConditionState, MaintenanceAction, RuleId, Step};
use crate::monitor::{classify_condition, Thresholds};
use crate::prognostics::RulEstimate;

/// Parameters that shape the alternatives offered at Alarm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecommendParams {
    pub safety_margin: u64,
    pub reinspect_interval: u64,
    pub restore_delta: f64,
}

impl Default for RecommendParams {
    fn default() -> Self {
        Self {
            safety_margin: 2,
            reinspect_interval: 5,
            restore_delta: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlternativeKind {
    /// Replace shortly before the lower end of the RUL band.
    ReplacePlanned,
    RestoreNow,
    /// Keep running and look again later; replacement is still owed.
    DeferReinspect,
    InspectNow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alternative {
    pub kind: AlternativeKind,
    pub action: MaintenanceAction,
    pub due: Step,
    pub projected_cost: f64,
    /// Probability that the asset fails before the action executes.
    pub projected_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rationale {
    pub diagnosis_source: DiagnosisSource,
    pub fault_label: String,
    pub matched_case: Option<CaseId>,
    pub matched_rule: Option<RuleId>,
    pub rul_steps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recommendation {
    pub asset: AssetId,
    pub t: Step,
    pub primary: Alternative,
    /// Sorted by projected cost, then risk; `primary` is the first entry.
    pub alternatives: Vec<Alternative>,
    pub rationale: Rationale,
}

/// Failure probability before an action `steps_ahead` steps after the
/// estimate: 0 up to the lower band, 1 from the upper band, linear between.
pub fn failure_probability(steps_ahead: f64, lower: f64, upper: f64) -> f64 {
    if steps_ahead <= lower {
        0.0
    } else if steps_ahead >= upper {
        1.0
    } else {
        (steps_ahead - lower) / (upper - lower)
    }
}

pub fn action_cost(action: &MaintenanceAction, costs: &Costs) -> f64 {
    match action {
        MaintenanceAction::Replace | MaintenanceAction::Restore { .. } => costs.preventive,
        MaintenanceAction::Inspect => costs.inspect,
    }
}

/// Action cost plus the corrective cost weighted by the failure probability.
/// Returns `(cost, probability)`.
pub fn expected_cost(
    action: &MaintenanceAction,
    steps_ahead: f64,
    rul: &RulEstimate,
    costs: &Costs,
) -> (f64, f64) {
    let p = match (rul.lower(), rul.upper()) {
        (Some(lo), Some(hi)) => failure_probability(steps_ahead, lo, hi),
        _ => 0.0,
    };
    (action_cost(action, costs) + p * costs.corrective, p)
}

/// Builds the recommendation for an asset at Alarm or worse.
pub fn recommend(
    diag: &Diagnosis,
    rul: Option<&RulEstimate>,
    now: Step,
    costs: &Costs,
    params: &RecommendParams,
) -> Recommendation {
    let rationale = Rationale {
        diagnosis_source: diag.source,
        fault_label: diag.fault_label.clone(),
        matched_case: diag.matched_case.clone(),
        matched_rule: diag.matched_rule.clone(),
        rul_steps: rul.and_then(|r| r.rul_steps),
    };
    let inspect_now = Alternative {
        kind: AlternativeKind::InspectNow,
        action: MaintenanceAction::Inspect,
        due: now + 1,
        projected_cost: costs.inspect,
        projected_risk: 0.0,
    };
    let with_trend = rul.filter(|r| r.rul_steps.is_some());
    let mut alternatives = match with_trend {
        None if diag.source == DiagnosisSource::None => vec![inspect_now],
        None => vec![
            Alternative {
                kind: AlternativeKind::RestoreNow,
                action: MaintenanceAction::Restore {
                    delta: params.restore_delta,
                },
                due: now + 1,
                projected_cost: costs.preventive,
                projected_risk: 0.0,
            },
            inspect_now,
        ],
        Some(rul) => {
            let ahead = |due: Step| due as f64 - rul.t as f64;
            let lower = rul.lower().expect("rul present");
            let mut alts = Vec::with_capacity(3);
            let replace_due = planned_due(now, lower, params.safety_margin);
            let (c, p) = expected_cost(&MaintenanceAction::Replace, ahead(replace_due), rul, costs);
            alts.push(Alternative {
                kind: AlternativeKind::ReplacePlanned,
                action: MaintenanceAction::Replace,
                due: replace_due,
                projected_cost: c,
                projected_risk: p,
            });
            let restore = MaintenanceAction::Restore {
                delta: params.restore_delta,
            };
            let (c, p) = expected_cost(&restore, ahead(now + 1), rul, costs);
            alts.push(Alternative {
                kind: AlternativeKind::RestoreNow,
                action: restore,
                due: now + 1,
                projected_cost: c,
                projected_risk: p,
            });
            let defer_due = now + params.reinspect_interval.max(1);
            let (c, p) = expected_cost(&MaintenanceAction::Inspect, ahead(defer_due), rul, costs);
            alts.push(Alternative {
                kind: AlternativeKind::DeferReinspect,
                action: MaintenanceAction::Inspect,
                due: defer_due,
                projected_cost: c + costs.preventive,
                projected_risk: p,
            });
            alts
        }
    };
    // stable: ties keep the declared order above
    alternatives.sort_by(|a, b| {
        a.projected_cost
            .total_cmp(&b.projected_cost)
            .then(a.projected_risk.total_cmp(&b.projected_risk))
    });
    Recommendation {
        asset: diag.asset.clone(),
        t: now,
        primary: alternatives[0],
        alternatives,
        rationale,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhatIfCandidate {
    pub action: MaintenanceAction,
    pub defer_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedOutcome {
    pub asset: AssetId,
    pub action: MaintenanceAction,
    pub defer_steps: u64,
    pub due: Step,
    pub projected_cost: f64,
    pub failure_probability: f64,
    pub projected_h: f64,
    pub projected_state_at_action: ConditionState,
}

/// Prices one candidate against the current trend. Pure.
pub fn project_candidate(
    rul: &RulEstimate,
    now: Step,
    candidate: &WhatIfCandidate,
    thresholds: &Thresholds,
    costs: &Costs,
) -> ProjectedOutcome {
    let due = now + candidate.defer_steps;
    let ahead = due as f64 - rul.t as f64;
    let (projected_cost, failure_probability) = expected_cost(&candidate.action, ahead, rul, costs);
    let projected_h = rul.basis.at(due as f64).clamp(rul.h_now.clamp(0.0, 1.0), 1.0);
    ProjectedOutcome {
        asset: rul.asset.clone(),
        action: candidate.action,
        defer_steps: candidate.defer_steps,
        due,
        projected_cost,
        failure_probability,
        projected_h,
        projected_state_at_action: classify_condition(projected_h, thresholds)
            .expect("projection is clamped"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prognostics::{RulBand, TrendModel};

    fn costs() -> Costs {
        Costs {
            inspect: 0.5,
            preventive: 1.0,
            corrective: 10.0,
            downtime_per_step: 0.0,
            stock_per_part_step: 0.0,
        }
    }

    fn rul_with_band(t: Step, lower: f64, rul: f64, upper: f64) -> RulEstimate {
        RulEstimate {
            asset: AssetId::new("a").unwrap(),
            t,
            h_now: 0.6,
            rul_steps: Some(rul),
            band: Some(RulBand { lower, upper }),
            basis: TrendModel {
                slope: 0.03,
                intercept: 0.6 - 0.03 * t as f64,
                residual_sigma: 0.01,
                window_len: 30,
                t_ref: t,
            },
        }
    }

    fn diag(source: DiagnosisSource) -> Diagnosis {
        Diagnosis {
            source,
            ..Diagnosis::none(AssetId::new("a").unwrap(), 100)
        }
    }

    #[test]
    fn replace_before_band_costs_preventive_only() {
        let rul = rul_with_band(100, 8.0, 10.0, 12.0);
        let rec = recommend(
            &diag(DiagnosisSource::RuleBased),
            Some(&rul),
            100,
            &costs(),
            &RecommendParams::default(),
        );
        let replace = rec
            .alternatives
            .iter()
            .find(|a| a.kind == AlternativeKind::ReplacePlanned)
            .unwrap();
        assert_eq!(replace.due, 106);
        assert_eq!(replace.projected_risk, 0.0);
        assert_eq!(replace.projected_cost, 1.0);
        assert_eq!(rec.primary, rec.alternatives[0]);
        assert_eq!(rec.primary.kind, AlternativeKind::ReplacePlanned);
    }

    #[test]
    fn deferral_past_band_pays_corrective() {
        let rul = rul_with_band(100, 1.0, 2.0, 3.0);
        let params = RecommendParams {
            reinspect_interval: 5,
            ..Default::default()
        };
        let rec = recommend(
            &diag(DiagnosisSource::CaseBased),
            Some(&rul),
            100,
            &costs(),
            &params,
        );
        let defer = rec
            .alternatives
            .iter()
            .find(|a| a.kind == AlternativeKind::DeferReinspect)
            .unwrap();
        assert_eq!(defer.projected_risk, 1.0);
        assert_eq!(defer.projected_cost, 0.5 + 1.0 + 10.0);
    }

    #[test]
    fn no_trend_and_no_diagnosis_means_inspect() {
        let rec = recommend(
            &diag(DiagnosisSource::None),
            None,
            5,
            &costs(),
            &RecommendParams::default(),
        );
        assert_eq!(rec.alternatives.len(), 1);
        assert_eq!(rec.primary.action, MaintenanceAction::Inspect);
    }

    #[test]
    fn ramp() {
        assert_eq!(failure_probability(5.0, 8.0, 12.0), 0.0);
        assert_eq!(failure_probability(8.0, 8.0, 12.0), 0.0);
        assert_eq!(failure_probability(10.0, 8.0, 12.0), 0.5);
        assert_eq!(failure_probability(12.0, 8.0, 12.0), 1.0);
        assert_eq!(failure_probability(10.0, 10.0, 10.0), 0.0);
        assert_eq!(failure_probability(10.5, 10.0, 10.0), 1.0);
    }

    #[test]
    fn what_if_examples() {
        let rul = rul_with_band(50, 8.0, 10.0, 12.0);
        let th = Thresholds::default();
        let now = WhatIfCandidate {
            action: MaintenanceAction::Replace,
            defer_steps: 0,
        };
        let out = project_candidate(&rul, 50, &now, &th, &costs());
        assert_eq!(out.projected_cost, 1.0);
        assert_eq!(out.failure_probability, 0.0);
        let late = WhatIfCandidate {
            defer_steps: 13,
            ..now
        };
        let out = project_candidate(&rul, 50, &late, &th, &costs());
        assert_eq!(out.failure_probability, 1.0);
        assert_eq!(out.projected_cost, 11.0);
        assert_eq!(out.projected_state_at_action, ConditionState::Predicted);
    }
}
