//! Intelligent predictive decision support: the per-asset state machine that
//! maps condition changes, diagnoses and RUL estimates onto monitoring and
//! maintenance requests.
//!
//! | condition reached | monitoring | requests |
//! |---|---|---|
//! | Normal | normal | cancel any pending action |
//! | Degraded (upward) | doubled | none |
//! | Degraded (downward) | doubled | cancel any pending action |
//! | Alarm (upward) | doubled | raise alert, run diagnosis |
//! | Alarm (downward) | doubled | none |
//! | Predicted | doubled | cancel pending, emergency corrective |
//!
//! At Alarm, once both a diagnosis and an RUL lower bound are available and
//! nothing is pending, a planned corrective action is scheduled at
//! `now + max(1, floor(rul_lower) - safety_margin)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AssetId, ConditionState, Step};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IpdssError {
    #[error("event for asset {event} routed to state machine of {state}")]
    Routing { state: AssetId, event: AssetId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitoringRate {
    Normal,
    Doubled,
}

impl MonitoringRate {
    pub fn samples_per_step(self) -> u32 {
        match self {
            MonitoringRate::Normal => 1,
            MonitoringRate::Doubled => 2,
        }
    }

    pub fn for_condition(c: ConditionState) -> Self {
        if c >= ConditionState::Degraded {
            MonitoringRate::Doubled
        } else {
            MonitoringRate::Normal
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpdssState {
    pub asset: AssetId,
    pub condition: ConditionState,
    pub monitoring_rate: MonitoringRate,
    /// Due step of the planned corrective action, if one is scheduled.
    pub pending: Option<Step>,
    pub diagnosis_ready: bool,
    pub rul_lower: Option<f64>,
    pub acknowledged: bool,
}

impl IpdssState {
    pub fn new(asset: AssetId) -> Self {
        Self {
            asset,
            condition: ConditionState::Normal,
            monitoring_rate: MonitoringRate::Normal,
            pending: None,
            diagnosis_ready: false,
            rul_lower: None,
            acknowledged: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IpdssInput {
    StateChange(ConditionState),
    DiagnosisReady,
    /// Lower end of the RUL band in steps, or `None` for "no trend".
    RulReady(Option<f64>),
    OperatorAck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpdssEvent {
    pub asset: AssetId,
    pub t: Step,
    pub input: IpdssInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionRequest {
    RaiseAlert,
    RunDiagnosis,
    SchedulePlannedCorrective { due: Step },
    CancelPending { due: Step },
    EmergencyCorrective,
}

/// `floor` that treats values within 1e-9 below an integer as that integer,
/// so a 29.999999999 step RUL from round-off plans like an exact 30.
pub fn floor_tol(x: f64) -> f64 {
    (x + 1e-9).floor()
}

/// Due step for a planned corrective action.
pub fn planned_due(now: Step, rul_lower: f64, safety_margin: u64) -> Step {
    let lead = floor_tol(rul_lower.max(0.0)) - safety_margin as f64;
    now + lead.max(1.0) as Step
}

pub fn step_ipdss(
    state: &IpdssState,
    event: &IpdssEvent,
    safety_margin: u64,
) -> Result<(IpdssState, Vec<ActionRequest>), IpdssError> {
    if event.asset != state.asset {
        return Err(IpdssError::Routing {
            state: state.asset.clone(),
            event: event.asset.clone(),
        });
    }
    let mut next = state.clone();
    let mut out = Vec::new();
    match event.input {
        IpdssInput::StateChange(to) if to == state.condition => {}
        IpdssInput::StateChange(to) => {
            let upward = to > state.condition;
            next.condition = to;
            next.monitoring_rate = MonitoringRate::for_condition(to);
            match to {
                ConditionState::Normal | ConditionState::Degraded => {
                    if let Some(due) = next.pending.take() {
                        out.push(ActionRequest::CancelPending { due });
                    }
                    next.diagnosis_ready = false;
                    next.rul_lower = None;
                    next.acknowledged = false;
                }
                ConditionState::Alarm if upward => {
                    next.diagnosis_ready = false;
                    next.rul_lower = None;
                    next.acknowledged = false;
                    out.push(ActionRequest::RaiseAlert);
                    out.push(ActionRequest::RunDiagnosis);
                }
                ConditionState::Alarm => {}
                ConditionState::Predicted => {
                    if let Some(due) = next.pending.take() {
                        out.push(ActionRequest::CancelPending { due });
                    }
                    out.push(ActionRequest::EmergencyCorrective);
                }
            }
        }
        IpdssInput::DiagnosisReady => {
            if state.condition == ConditionState::Alarm {
                next.diagnosis_ready = true;
            }
        }
        IpdssInput::RulReady(lower) => {
            if state.condition == ConditionState::Alarm {
                next.rul_lower = lower;
            }
        }
        IpdssInput::OperatorAck => {
            if state.condition >= ConditionState::Alarm {
                next.acknowledged = true;
            }
        }
    }
    if next.condition == ConditionState::Alarm && next.diagnosis_ready && next.pending.is_none() {
        if let Some(lower) = next.rul_lower {
            let due = planned_due(event.t, lower, safety_margin);
            next.pending = Some(due);
            out.push(ActionRequest::SchedulePlannedCorrective { due });
        }
    }
    Ok((next, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ConditionState::*;

    fn asset() -> AssetId {
        AssetId::new("a").unwrap()
    }

    fn ev(t: Step, input: IpdssInput) -> IpdssEvent {
        IpdssEvent {
            asset: asset(),
            t,
            input,
        }
    }

    fn at(c: ConditionState) -> IpdssState {
        IpdssState {
            condition: c,
            monitoring_rate: MonitoringRate::for_condition(c),
            ..IpdssState::new(asset())
        }
    }

    #[test]
    fn degraded_doubles_monitoring_only() {
        let (s, reqs) = step_ipdss(&at(Normal), &ev(1, IpdssInput::StateChange(Degraded)), 2).unwrap();
        assert_eq!(s.monitoring_rate, MonitoringRate::Doubled);
        assert!(reqs.is_empty());
    }

    #[test]
    fn alarm_raises_and_diagnoses() {
        let (s, reqs) = step_ipdss(&at(Degraded), &ev(1, IpdssInput::StateChange(Alarm)), 2).unwrap();
        assert_eq!(reqs, vec![ActionRequest::RaiseAlert, ActionRequest::RunDiagnosis]);
        assert_eq!(s.condition, Alarm);
    }

    #[test]
    fn predicted_is_emergency() {
        let (_, reqs) = step_ipdss(&at(Alarm), &ev(1, IpdssInput::StateChange(Predicted)), 2).unwrap();
        assert_eq!(reqs, vec![ActionRequest::EmergencyCorrective]);
    }

    #[test]
    fn emergency_cancels_pending() {
        let s = IpdssState {
            pending: Some(40),
            ..at(Alarm)
        };
        let (s, reqs) = step_ipdss(&s, &ev(30, IpdssInput::StateChange(Predicted)), 2).unwrap();
        assert_eq!(
            reqs,
            vec![
                ActionRequest::CancelPending { due: 40 },
                ActionRequest::EmergencyCorrective
            ]
        );
        assert_eq!(s.pending, None);
    }

    #[test]
    fn plan_after_diagnosis_and_rul() {
        let s = at(Alarm);
        let (s, reqs) = step_ipdss(&s, &ev(60, IpdssInput::DiagnosisReady), 2).unwrap();
        assert!(reqs.is_empty());
        let (s, reqs) = step_ipdss(&s, &ev(60, IpdssInput::RulReady(Some(8.0))), 2).unwrap();
        assert_eq!(reqs, vec![ActionRequest::SchedulePlannedCorrective { due: 66 }]);
        assert_eq!(s.pending, Some(66));
        // already planned: later estimates do not reschedule
        let (_, reqs) = step_ipdss(&s, &ev(61, IpdssInput::RulReady(Some(3.0))), 2).unwrap();
        assert!(reqs.is_empty());
    }

    #[test]
    fn short_rul_plans_next_step() {
        assert_eq!(planned_due(10, 2.5, 2), 11);
        assert_eq!(planned_due(10, 0.0, 2), 11);
        assert_eq!(planned_due(10, 29.999_999_999_9, 2), 38);
    }

    #[test]
    fn wrong_asset_is_routing_error() {
        let other = IpdssEvent {
            asset: AssetId::new("b").unwrap(),
            t: 0,
            input: IpdssInput::OperatorAck,
        };
        assert!(matches!(
            step_ipdss(&at(Normal), &other, 2),
            Err(IpdssError::Routing { .. })
        ));
    }
}
