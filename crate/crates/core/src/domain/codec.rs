//! Canonical NDJSON encoding of [`EventRecord`]s.
//!
//! A line is a JSON object with keys in the fixed order `seq`, `t`, `kind`,
//! `payload`. Reals are written as the shortest decimal that round-trips, so
//! equal records always produce byte-equal lines.

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use super::{EventKind, EventPayload, EventRecord, Step};

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("event seq {seq}: non-finite value in {kind} payload")]
    NonFinite { seq: u64, kind: EventKind },
    #[error("event seq must be >= 1")]
    ZeroSeq,
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("empty line")]
    Empty,
    #[error("malformed event: {0}")]
    Malformed(String),
    #[error("unknown event kind {0:?}")]
    UnknownKind(String),
    #[error("invalid {kind} payload: {detail}")]
    Payload { kind: EventKind, detail: String },
    #[error("event seq must be >= 1")]
    ZeroSeq,
}

#[derive(Serialize)]
struct WireOut<'a> {
    seq: u64,
    t: Step,
    kind: EventKind,
    payload: &'a EventPayload,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WireIn<'a> {
    seq: u64,
    t: Step,
    kind: String,
    #[serde(borrow)]
    payload: &'a RawValue,
}

/// Encodes one event as a single NDJSON line, without the trailing newline.
pub fn encode_event(event: &EventRecord) -> Result<String, EncodingError> {
    if event.seq == 0 {
        return Err(EncodingError::ZeroSeq);
    }
    if event.payload.reals().iter().any(|v| !v.is_finite()) {
        return Err(EncodingError::NonFinite {
            seq: event.seq,
            kind: event.kind(),
        });
    }
    let wire = WireOut {
        seq: event.seq,
        t: event.t,
        kind: event.kind(),
        payload: &event.payload,
    };
    Ok(serde_json::to_string(&wire)?)
}

/// Decodes one NDJSON line. A trailing `\n` or `\r\n` is tolerated.
pub fn decode_event(line: &str) -> Result<EventRecord, SchemaError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.trim().is_empty() {
        return Err(SchemaError::Empty);
    }
    let wire: WireIn<'_> = serde_json::from_str(line).map_err(|e| SchemaError::Malformed(e.to_string()))?;
    if wire.seq == 0 {
        return Err(SchemaError::ZeroSeq);
    }
    let kind = EventKind::parse(&wire.kind).ok_or_else(|| SchemaError::UnknownKind(wire.kind.clone()))?;
    let body = wire.payload.get();
    let bad = |e: serde_json::Error| SchemaError::Payload {
        kind,
        detail: e.to_string(),
    };
    let payload = match kind {
        EventKind::Measurement => EventPayload::Measurement(serde_json::from_str(body).map_err(bad)?),
        EventKind::Alert => EventPayload::Alert(serde_json::from_str(body).map_err(bad)?),
        EventKind::StateChange => EventPayload::StateChange(serde_json::from_str(body).map_err(bad)?),
        EventKind::Diagnosis => EventPayload::Diagnosis(serde_json::from_str(body).map_err(bad)?),
        EventKind::Rul => EventPayload::Rul(serde_json::from_str(body).map_err(bad)?),
        EventKind::Recommendation => EventPayload::Recommendation(serde_json::from_str(body).map_err(bad)?),
        EventKind::Action => EventPayload::Action(serde_json::from_str(body).map_err(bad)?),
        EventKind::PolicyTick => EventPayload::PolicyTick(serde_json::from_str(body).map_err(bad)?),
    };
    Ok(EventRecord {
        seq: wire.seq,
        t: wire.t,
        payload,
    })
}
