//! Shared vocabulary: identifiers, measurements, channel data sheets and the
//! event record that every pipeline level appends to the log.

pub mod codec;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::{PolicyKind, Recommendation};
use crate::diagnosis::Diagnosis;
use crate::monitor::Alert;
use crate::prognostics::RulEstimate;

/// Simulation time in whole steps. One step is one operating day unless a
/// scenario says otherwise.
pub type Step = u64;

pub const MAX_ID_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("identifier is empty")]
    Empty,
    #[error("identifier longer than {MAX_ID_LEN} bytes: {0:?}")]
    TooLong(String),
    #[error("identifier is not printable ASCII: {0:?}")]
    NotAscii(String),
}

fn validate_id(s: &str) -> Result<(), IdError> {
    if s.is_empty() {
        return Err(IdError::Empty);
    }
    if s.len() > MAX_ID_LEN {
        return Err(IdError::TooLong(s.to_string()));
    }
    if !s.bytes().all(|b| b.is_ascii_graphic()) {
        return Err(IdError::NotAscii(s.to_string()));
    }
    Ok(())
}

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Result<Self, IdError> {
                let s = s.into();
                validate_id(&s)?;
                Ok(Self(s))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = IdError;
            fn try_from(s: String) -> Result<Self, IdError> {
                Self::new(s)
            }
        }

        impl TryFrom<&str> for $name {
            type Error = IdError;
            fn try_from(s: &str) -> Result<Self, IdError> {
                Self::new(s)
            }
        }

        impl From<$name> for String {
            fn from(id: $name) -> String {
                id.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl std::str::FromStr for $name {
            type Err = IdError;
            fn from_str(s: &str) -> Result<Self, IdError> {
                Self::new(s)
            }
        }
    };
}

string_id!(
    /// Asset identifier, unique within one deployment.
    AssetId
);
string_id!(
    /// Sensor or virtual channel identifier.
    ChannelId
);
string_id!(CaseId);
string_id!(RuleId);

/// One timestamped sensor sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measurement {
    pub asset: AssetId,
    pub channel: ChannelId,
    pub t: Step,
    pub value: f64,
}

/// Where a monitoring instrument sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Fixed to the infrastructure, observing passing vehicles.
    Wayside,
    /// On board, observing the vehicle itself.
    OnboardSelf,
    /// On board, observing the infrastructure (e.g. the contact line).
    OnboardInfrastructure,
}

/// Transducer self-description in the spirit of a TEDS.
///
/// `nominal` is the reading of an as-new component and `failure_value` the
/// reading at functional failure; the pair defines the health-index scale of
/// the channel. The optional operational limits tighten the physical range
/// for alerting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TedsRecord {
    pub channel: ChannelId,
    pub quantity: String,
    pub units: String,
    pub range_min: f64,
    pub range_max: f64,
    pub nominal: f64,
    pub failure_value: f64,
    pub placement: Placement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_limit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TedsError {
    #[error("channel {0}: range_min must be below range_max")]
    Range(ChannelId),
    #[error("channel {0}: nominal and failure_value must differ")]
    Span(ChannelId),
    #[error("channel {0}: non-finite parameter")]
    NonFinite(ChannelId),
}

impl TedsRecord {
    pub fn validate(&self) -> Result<(), TedsError> {
        let vals = [self.range_min, self.range_max, self.nominal, self.failure_value];
        let limits = [self.lower_limit, self.upper_limit];
        if vals.iter().chain(limits.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(TedsError::NonFinite(self.channel.clone()));
        }
        if self.range_min >= self.range_max {
            return Err(TedsError::Range(self.channel.clone()));
        }
        if self.nominal == self.failure_value {
            return Err(TedsError::Span(self.channel.clone()));
        }
        Ok(())
    }

    /// Signed distance from nominal to failure in channel units.
    pub fn span(&self) -> f64 {
        self.failure_value - self.nominal
    }

    /// Reading of a noiseless sensor at degradation `h`.
    pub fn reading_at(&self, h: f64) -> f64 {
        self.nominal + h * self.span()
    }

    /// Maps a reading onto the health scale (0 nominal, 1 failure), unclamped.
    pub fn normalized_deviation(&self, value: f64) -> f64 {
        (value - self.nominal) / self.span()
    }

    /// Min-max position of a reading within the physical range.
    pub fn min_max(&self, value: f64) -> f64 {
        (value - self.range_min) / (self.range_max - self.range_min)
    }
}

/// Condition levels, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionState {
    Normal,
    Degraded,
    Alarm,
    Predicted,
}

impl ConditionState {
    pub const ALL: [ConditionState; 4] = [
        ConditionState::Normal,
        ConditionState::Degraded,
        ConditionState::Alarm,
        ConditionState::Predicted,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionState::Normal => "normal",
            ConditionState::Degraded => "degraded",
            ConditionState::Alarm => "alarm",
            ConditionState::Predicted => "predicted",
        }
    }
}

impl fmt::Display for ConditionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A maintenance intervention on one asset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaintenanceAction {
    /// Swap the component for a new one.
    Replace,
    /// Partial restoration, removing `delta` of accumulated degradation.
    Restore { delta: f64 },
    /// Look at the asset. Costs money, changes nothing.
    Inspect,
}

impl MaintenanceAction {
    pub fn name(&self) -> &'static str {
        match self {
            MaintenanceAction::Replace => "replace",
            MaintenanceAction::Restore { .. } => "restore",
            MaintenanceAction::Inspect => "inspect",
        }
    }

    /// True if the action puts the asset back in service as new or better.
    pub fn renews(&self) -> bool {
        !matches!(self, MaintenanceAction::Inspect)
    }
}

/// Who asked for an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionOrigin {
    Operator,
    /// Corrective action planned before failure from the RUL estimate.
    Planned,
    /// Immediate corrective action at the predicted level.
    Emergency,
    /// Repair after a functional failure.
    Corrective,
    /// Fixed-interval preventive replacement.
    TimeBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionPhase {
    /// Submitted by an operator between ticks; executes at the next tick at or after `due`.
    Queued,
    Scheduled,
    Executed,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionEvent {
    pub asset: AssetId,
    pub action: MaintenanceAction,
    pub due: Step,
    pub origin: ActionOrigin,
    pub phase: ActionPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateChange {
    pub asset: AssetId,
    pub from: ConditionState,
    pub to: ConditionState,
    pub h: f64,
}

/// End-of-tick marker. Every completed tick ends with exactly one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyTick {
    pub policy: PolicyKind,
    pub assets: u64,
    pub in_alarm: u64,
    pub failed: u64,
    pub cumulative_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Measurement,
    Alert,
    StateChange,
    Diagnosis,
    Rul,
    Recommendation,
    Action,
    PolicyTick,
}

impl EventKind {
    pub const ALL: [EventKind; 8] = [
        EventKind::Measurement,
        EventKind::Alert,
        EventKind::StateChange,
        EventKind::Diagnosis,
        EventKind::Rul,
        EventKind::Recommendation,
        EventKind::Action,
        EventKind::PolicyTick,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Measurement => "measurement",
            EventKind::Alert => "alert",
            EventKind::StateChange => "state_change",
            EventKind::Diagnosis => "diagnosis",
            EventKind::Rul => "rul",
            EventKind::Recommendation => "recommendation",
            EventKind::Action => "action",
            EventKind::PolicyTick => "policy_tick",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// OSA-CBM level that produces events of this kind. Action execution
    /// and the tick marker sit after decision support.
    pub fn level(self) -> u8 {
        match self {
            EventKind::Measurement => 1,
            EventKind::Alert | EventKind::StateChange => 3,
            EventKind::Diagnosis => 4,
            EventKind::Rul => 5,
            EventKind::Recommendation => 6,
            EventKind::Action => 6,
            EventKind::PolicyTick => 7,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Kind-specific body of an [`EventRecord`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum EventPayload {
    Measurement(Measurement),
    Alert(Alert),
    StateChange(StateChange),
    Diagnosis(Diagnosis),
    Rul(RulEstimate),
    Recommendation(Recommendation),
    Action(ActionEvent),
    PolicyTick(PolicyTick),
}

impl EventPayload {
    pub fn kind(&self) -> EventKind {
        match self {
            EventPayload::Measurement(_) => EventKind::Measurement,
            EventPayload::Alert(_) => EventKind::Alert,
            EventPayload::StateChange(_) => EventKind::StateChange,
            EventPayload::Diagnosis(_) => EventKind::Diagnosis,
            EventPayload::Rul(_) => EventKind::Rul,
            EventPayload::Recommendation(_) => EventKind::Recommendation,
            EventPayload::Action(_) => EventKind::Action,
            EventPayload::PolicyTick(_) => EventKind::PolicyTick,
        }
    }

    /// Asset the event concerns; `None` for fleet-wide events.
    pub fn asset(&self) -> Option<&AssetId> {
        match self {
            EventPayload::Measurement(m) => Some(&m.asset),
            EventPayload::Alert(a) => Some(&a.asset),
            EventPayload::StateChange(s) => Some(&s.asset),
            EventPayload::Diagnosis(d) => Some(&d.asset),
            EventPayload::Rul(r) => Some(&r.asset),
            EventPayload::Recommendation(r) => Some(&r.asset),
            EventPayload::Action(a) => Some(&a.asset),
            EventPayload::PolicyTick(_) => None,
        }
    }

    /// Every real number carried by the payload, for finiteness checks.
    pub(crate) fn reals(&self) -> Vec<f64> {
        match self {
            EventPayload::Measurement(m) => vec![m.value],
            EventPayload::Alert(a) => vec![a.observed, a.limit],
            EventPayload::StateChange(s) => vec![s.h],
            EventPayload::Diagnosis(d) => d.residual.into_iter().collect(),
            EventPayload::Rul(r) => {
                let mut v = vec![r.basis.slope, r.basis.intercept, r.basis.residual_sigma, r.h_now];
                v.extend(r.rul_steps);
                if let Some(b) = r.band {
                    v.extend([b.lower, b.upper]);
                }
                v
            }
            EventPayload::Recommendation(r) => {
                let mut v: Vec<f64> = r.rationale.rul_steps.into_iter().collect();
                for alt in std::iter::once(&r.primary).chain(&r.alternatives) {
                    v.extend([alt.projected_cost, alt.projected_risk]);
                    if let MaintenanceAction::Restore { delta } = alt.action {
                        v.push(delta);
                    }
                }
                v
            }
            EventPayload::Action(a) => match a.action {
                MaintenanceAction::Restore { delta } => vec![delta],
                _ => vec![],
            },
            EventPayload::PolicyTick(p) => vec![p.cumulative_cost],
        }
    }
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub seq: u64,
    pub t: Step,
    pub payload: EventPayload,
}

impl EventRecord {
    pub fn kind(&self) -> EventKind {
        self.payload.kind()
    }
}
