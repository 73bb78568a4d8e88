//! Rebuilding engine state from a scenario and its event log.
//!
//! Replay re-executes the scenario from step 0, re-submitting every logged
//! operator action at the step it was queued, and requires the regenerated
//! events to match the log byte for byte. Because every random draw comes
//! from seeded per-asset streams, the re-executed engine ends in exactly the
//! state the original run had after its last completed tick.

use std::path::Path;

use thiserror::Error;

use super::log::{read_log, LogContents, LogError, LogWriter};
use super::{Engine, EngineError};
use crate::domain::codec::encode_event;
use crate::domain::{ActionOrigin, ActionPhase, EventPayload, EventRecord};
use crate::scenario::{Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("log diverges from the scenario at seq {seq}: {reason}")]
    Diverged { seq: u64, reason: String },
}

impl ReplayError {
    /// Whether the log itself is at fault (as opposed to the configuration).
    pub fn is_corrupt_log(&self) -> bool {
        matches!(
            self,
            ReplayError::Diverged { .. } | ReplayError::Log(LogError::Corrupt { .. })
        )
    }
}

/// Replays the first `n` records of `log`, which must end on a tick
/// boundary (see [`LogContents::completed_len`]).
pub fn replay_prefix(scenario: Scenario, log: &LogContents, n: usize) -> Result<Engine, ReplayError> {
    let mut engine = Engine::new(scenario)?;
    let records = &log.records[..n];
    let mut idx = 0;
    let diverged = |seq: u64, reason: String| ReplayError::Diverged { seq, reason };
    let check = |produced: &EventRecord, idx: usize| -> Result<(), ReplayError> {
        let line = encode_event(produced).map_err(LogError::from)?;
        if line != log.lines[idx] {
            return Err(diverged(
                records[idx].seq,
                format!("expected {}, regenerated {line}", log.lines[idx]),
            ));
        }
        Ok(())
    };
    while idx < records.len() {
        while let Some(r) = records.get(idx).filter(|r| r.t == engine.clock()) {
            let EventPayload::Action(a) = &r.payload else {
                break;
            };
            if a.phase != ActionPhase::Queued || a.origin != ActionOrigin::Operator {
                break;
            }
            let produced = engine
                .submit_action(&a.asset, a.action, Some(a.due))
                .map_err(|e| diverged(r.seq, e.to_string()))?
                .ok_or_else(|| diverged(r.seq, "duplicate submission".into()))?;
            check(&produced, idx)?;
            idx += 1;
        }
        if idx == records.len() {
            break;
        }
        let events = engine.tick().map_err(|e| match e {
            EngineError::Finished(_) => diverged(records[idx].seq, "events past the horizon".into()),
            other => diverged(records[idx].seq, other.to_string()),
        })?;
        for produced in &events {
            if idx >= records.len() {
                return Err(diverged(produced.seq, "log ends inside a tick".into()));
            }
            check(produced, idx)?;
            idx += 1;
        }
    }
    Ok(engine)
}

/// Replays every completed tick of `log`.
pub fn replay(scenario: Scenario, log: &LogContents) -> Result<Engine, ReplayError> {
    replay_prefix(scenario, log, log.completed_len())
}

/// Engine and writer positioned after the last completed tick of a log file.
#[derive(Debug)]
pub struct Resumed {
    pub engine: Engine,
    pub writer: LogWriter,
    /// Records kept from the file.
    pub records: Vec<EventRecord>,
    /// Encoded lines of the kept records.
    pub lines: Vec<String>,
    /// Records dropped from an unfinished final tick.
    pub discarded: usize,
}

/// Replays `path` (missing means empty), cuts any unfinished tail and opens
/// the log for appending.
pub fn resume(scenario: Scenario, path: impl AsRef<Path>) -> Result<Resumed, ReplayError> {
    let path = path.as_ref();
    let log = read_log(path)?;
    let keep = log.completed_len();
    let engine = replay_prefix(scenario, &log, keep)?;
    let writer = LogWriter::resume(path, log.byte_len(keep), keep as u64 + 1)?;
    let discarded = log.records.len() - keep + usize::from(log.torn_line);
    if discarded > 0 {
        tracing::warn!(discarded, "dropped events of an unfinished tick");
    }
    let LogContents {
        mut records,
        mut lines,
        ..
    } = log;
    records.truncate(keep);
    lines.truncate(keep);
    Ok(Resumed {
        engine,
        writer,
        records,
        lines,
        discarded,
    })
}
