//! Level 3: condition classification against the base / alarm / predicted
//! levels, and operational-limit alerts on raw measurements.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::domain::ConditionState;
use crate::domain::{AssetId, ChannelId, Measurement, Step, TedsRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonitorError {
    #[error("health index {0} outside [0, 1]")]
    HealthOutOfRange(f64),
    #[error("thresholds must satisfy 0 < base < alarm < predicted <= 1, got {0:?}")]
    Thresholds(Thresholds),
}

/// Health-index levels separating the four condition states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub base_level: f64,
    pub alarm_level: f64,
    pub predicted_level: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            base_level: 0.3,
            alarm_level: 0.6,
            predicted_level: 0.9,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), MonitorError> {
        let ok = 0.0 < self.base_level
            && self.base_level < self.alarm_level
            && self.alarm_level < self.predicted_level
            && self.predicted_level <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(MonitorError::Thresholds(*self))
        }
    }

    /// Lowest health index classified as `state`.
    pub fn entry_level(&self, state: ConditionState) -> f64 {
        match state {
            ConditionState::Normal => 0.0,
            ConditionState::Degraded => self.base_level,
            ConditionState::Alarm => self.alarm_level,
            ConditionState::Predicted => self.predicted_level,
        }
    }
}

/// Classifies a health index. Each boundary belongs to the more severe state.
pub fn classify_condition(h: f64, th: &Thresholds) -> Result<ConditionState, MonitorError> {
    if !(0.0..=1.0).contains(&h) {
        return Err(MonitorError::HealthOutOfRange(h));
    }
    Ok(if h >= th.predicted_level {
        ConditionState::Predicted
    } else if h >= th.alarm_level {
        ConditionState::Alarm
    } else if h >= th.base_level {
        ConditionState::Degraded
    } else {
        ConditionState::Normal
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alert {
    pub asset: AssetId,
    pub channel: ChannelId,
    pub t: Step,
    pub limit_kind: LimitKind,
    pub observed: f64,
    pub limit: f64,
}

/// Channel name used for alerts raised on the health index itself.
pub const HEALTH_CHANNEL: &str = "health_index";

/// Effective (lower, upper) envelope: the physical range, tightened by any
/// configured operational limits.
pub fn envelope(teds: &TedsRecord) -> (f64, f64) {
    let lower = teds.lower_limit.map_or(teds.range_min, |l| l.max(teds.range_min));
    let upper = teds.upper_limit.map_or(teds.range_max, |u| u.min(teds.range_max));
    (lower, upper)
}

/// Alerts when a sample leaves the envelope. Values on the limit are inside.
pub fn check_limits(m: &Measurement, teds: &TedsRecord) -> Option<Alert> {
    let (lower, upper) = envelope(teds);
    let (limit_kind, limit) = if m.value > upper {
        (LimitKind::Upper, upper)
    } else if m.value < lower {
        (LimitKind::Lower, lower)
    } else {
        return None;
    };
    Some(Alert {
        asset: m.asset.clone(),
        channel: m.channel.clone(),
        t: m.t,
        limit_kind,
        observed: m.value,
        limit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionEvent {
    pub from: ConditionState,
    pub to: ConditionState,
}

/// State changes between two classifications. Upward jumps are expanded into
/// every intermediate crossing; downward moves are reported as one change.
pub fn transition(prev: ConditionState, next: ConditionState) -> Vec<TransitionEvent> {
    if next > prev {
        (prev.index()..next.index())
            .map(|i| TransitionEvent {
                from: ConditionState::ALL[i],
                to: ConditionState::ALL[i + 1],
            })
            .collect()
    } else if next < prev {
        vec![TransitionEvent { from: prev, to: next }]
    } else {
        Vec::new()
    }
}
