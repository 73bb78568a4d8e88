use std::collections::VecDeque;
use std::convert::Infallible;

use axum::extract::{Query, State};
use axum::http::HeaderMap;
use axum::response::sse::{Event, KeepAlive, Sse};
use futures::stream::{self, Stream};
use serde::Deserialize;
use tokio::sync::broadcast::error::RecvError;
use tokio::sync::broadcast::Receiver;

use super::{AppState, Logged};

#[derive(Deserialize)]
pub(super) struct StreamQuery {
    #[serde(default)]
    since: u64,
}

struct Cursor {
    state: AppState,
    rx: Receiver<Logged>,
    backlog: VecDeque<Logged>,
    last_seq: u64,
}

impl Cursor {
    async fn next(mut self) -> Option<(Result<Event, Infallible>, Self)> {
        loop {
            let logged = match self.backlog.pop_front() {
                Some(l) => l,
                None => match self.rx.recv().await {
                    Ok(l) => l,
                    Err(RecvError::Lagged(_)) => {
                        self.backlog = self.state.events_since(self.last_seq, None).into();
                        continue;
                    }
                    Err(RecvError::Closed) => return None,
                },
            };
            // catch-up and live delivery overlap; keep seq strictly increasing
            if logged.seq <= self.last_seq {
                continue;
            }
            self.last_seq = logged.seq;
            let event = Event::default()
                .id(logged.seq.to_string())
                .event(logged.kind.as_str())
                .data(&*logged.line);
            return Some((Ok(event), self));
        }
    }
}

/// Every logged event after `since` (or the `Last-Event-ID` header sent by a
/// reconnecting client), then live events as they are appended. The SSE id
/// is the event's seq.
pub(super) async fn events(
    State(state): State<AppState>,
    Query(q): Query<StreamQuery>,
    headers: HeaderMap,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let since = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok())
        .map_or(q.since, |id| id.max(q.since));
    // subscribe first so nothing appended during catch-up is missed
    let rx = state.subscribe();
    let backlog = state.events_since(since, None).into();
    let cursor = Cursor {
        state,
        rx,
        backlog,
        last_seq: since,
    };
    Sse::new(stream::unfold(cursor, Cursor::next)).keep_alive(KeepAlive::default())
}
