use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use serde_json::value::RawValue;

use super::{stream, AppState, Logged};
use crate::decision::{Recommendation, WhatIfCandidate};
use crate::domain::codec::encode_event;
use crate::domain::{AssetId, ConditionState, EventKind, MaintenanceAction, Step};
use crate::engine::{AssetView, EngineError};
use crate::error::Error;
use crate::prognostics::RulEstimate;
use crate::signal::Spectrum;
use crate::simulator::AssetKind;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/v1/status", get(status))
        .route("/api/v1/assets", get(list_assets))
        .route("/api/v1/assets/{id}", get(get_asset))
        .route("/api/v1/alarms", get(alarms))
        .route("/api/v1/recommendations", get(recommendations))
        .route("/api/v1/actions", post(submit_action))
        .route("/api/v1/whatif", post(what_if))
        .route("/api/v1/stream", get(stream::events))
        .with_state(state)
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match &e {
            EngineError::UnknownAsset(_) => StatusCode::NOT_FOUND,
            EngineError::NotEligible { .. } | EngineError::Finished(_) => StatusCode::CONFLICT,
            EngineError::InvalidAction(_) => StatusCode::BAD_REQUEST,
            EngineError::Pipeline { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::Engine(e) => e.into(),
            other => ApiError(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
        }
    }
}

fn parse_id(raw: &str) -> Result<AssetId, ApiError> {
    AssetId::new(raw).map_err(|e| ApiError(StatusCode::NOT_FOUND, format!("unknown asset {raw:?}: {e}")))
}

/// JSON array of already-encoded event lines.
fn events_body(events: &[Logged]) -> Response {
    let mut body = String::with_capacity(events.iter().map(|e| e.line.len() + 1).sum::<usize>() + 2);
    body.push('[');
    for (i, e) in events.iter().enumerate() {
        if i > 0 {
            body.push(',');
        }
        body.push_str(&e.line);
    }
    body.push(']');
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

#[derive(Serialize)]
struct Status {
    t: Step,
    horizon: Step,
    last_seq: u64,
    policy: crate::decision::PolicyKind,
    cumulative_cost: f64,
    assets: usize,
}

async fn status(State(state): State<AppState>) -> Json<Status> {
    let s = state.snapshot();
    Json(Status {
        t: s.t,
        horizon: s.horizon,
        last_seq: s.last_seq,
        policy: s.policy,
        cumulative_cost: s.cumulative_cost,
        assets: s.assets.len(),
    })
}

#[derive(Serialize)]
struct AssetSummary<'a> {
    id: &'a AssetId,
    kind: AssetKind,
    profile: &'a str,
    h: f64,
    condition: ConditionState,
    rul: Option<&'a RulEstimate>,
    has_recommendation: bool,
    pending_actions: usize,
}

async fn list_assets(State(state): State<AppState>) -> Response {
    let s = state.snapshot();
    let list: Vec<AssetSummary> = s
        .assets
        .iter()
        .map(|a| AssetSummary {
            id: &a.id,
            kind: a.kind,
            profile: &a.profile,
            h: a.h,
            condition: a.condition,
            rul: a.rul.as_ref(),
            has_recommendation: a.recommendation.is_some(),
            pending_actions: a.pending.len(),
        })
        .collect();
    Json(list).into_response()
}

#[derive(Serialize)]
struct AssetDetail<'a> {
    t: Step,
    #[serde(flatten)]
    view: &'a AssetView,
    spectra: Vec<Spectrum>,
}

async fn get_asset(State(state): State<AppState>, Path(raw): Path<String>) -> Result<Response, ApiError> {
    let id = parse_id(&raw)?;
    let s = state.snapshot();
    let view = s
        .asset(&id)
        .ok_or_else(|| ApiError::from(EngineError::UnknownAsset(id.clone())))?;
    let spectra = state.spectra(&id)?;
    Ok(Json(AssetDetail {
        t: s.t,
        view,
        spectra,
    })
    .into_response())
}

#[derive(Deserialize)]
struct SinceQuery {
    #[serde(default)]
    since: u64,
}

async fn alarms(State(state): State<AppState>, Query(q): Query<SinceQuery>) -> Response {
    events_body(&state.events_since(q.since, Some(EventKind::Alert)))
}

async fn recommendations(State(state): State<AppState>) -> Response {
    let s = state.snapshot();
    let list: Vec<&Recommendation> = s
        .assets
        .iter()
        .filter_map(|a| a.recommendation.as_ref())
        .collect();
    Json(list).into_response()
}

/// `"replace"`, `"inspect"`, `"restore"` or a tagged action object.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ActionSpec {
    Name(String),
    Full(MaintenanceAction),
}

impl ActionSpec {
    fn resolve(self, delta: Option<f64>, default_delta: f64) -> Result<MaintenanceAction, ApiError> {
        match self {
            ActionSpec::Full(a) => Ok(a),
            ActionSpec::Name(n) => match n.as_str() {
                "replace" => Ok(MaintenanceAction::Replace),
                "inspect" => Ok(MaintenanceAction::Inspect),
                "restore" => Ok(MaintenanceAction::Restore {
                    delta: delta.unwrap_or(default_delta),
                }),
                other => Err(ApiError(
                    StatusCode::BAD_REQUEST,
                    format!("unknown action {other:?}; expected replace, restore or inspect"),
                )),
            },
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionBody {
    asset_id: String,
    action: ActionSpec,
    #[serde(default)]
    due: Option<Step>,
    #[serde(default)]
    delta: Option<f64>,
}

async fn submit_action(
    State(state): State<AppState>,
    Json(body): Json<ActionBody>,
) -> Result<Response, ApiError> {
    let id = parse_id(&body.asset_id)?;
    let action = body.action.resolve(body.delta, state.restore_delta())?;
    let queued = state.submit_action(&id, action, body.due)?;
    #[derive(Serialize)]
    struct Accepted {
        status: &'static str,
        #[serde(skip_serializing_if = "Option::is_none")]
        event: Option<Box<RawValue>>,
    }
    let internal = |e: String| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e);
    let payload = match &queued {
        Some(r) => {
            let line = encode_event(r).map_err(|e| internal(e.to_string()))?;
            Accepted {
                status: "queued",
                event: Some(RawValue::from_string(line).map_err(|e| internal(e.to_string()))?),
            }
        }
        None => Accepted {
            status: "duplicate",
            event: None,
        },
    };
    Ok((StatusCode::ACCEPTED, Json(payload)).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WhatIfBody {
    asset_id: String,
    action: ActionSpec,
    #[serde(default)]
    defer_steps: u64,
    #[serde(default)]
    delta: Option<f64>,
}

async fn what_if(State(state): State<AppState>, Json(body): Json<WhatIfBody>) -> Result<Response, ApiError> {
    let id = parse_id(&body.asset_id)?;
    let action = body.action.resolve(body.delta, state.restore_delta())?;
    let candidate = WhatIfCandidate {
        action,
        defer_steps: body.defer_steps,
    };
    let outcome = state.snapshot().what_if(&id, &candidate)?;
    Ok(Json(outcome).into_response())
}
