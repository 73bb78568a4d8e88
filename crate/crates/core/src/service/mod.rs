//! Level 7 plumbing: the HTTP/JSON API and live event stream consumed by
//! the operator console.
//!
//! One writer advances the engine (the tick loop); HTTP handlers read the
//! published [`FleetSnapshot`] and the in-memory copy of the event log.
//! Operator submissions take the engine lock only long enough to queue the
//! action and append its `queued` event.

mod routes;
mod stream;

use std::net::SocketAddr;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use tokio::sync::{broadcast, watch};

use crate::domain::{EventKind, EventRecord, MaintenanceAction, Step};
use crate::engine::log::LogWriter;
use crate::engine::{Engine, EngineError, FleetSnapshot};
use crate::error::{Error, Result};
use crate::signal::Spectrum;

pub use routes::router;

/// One logged event together with its canonical encoding.
#[derive(Debug, Clone)]
pub struct Logged {
    pub seq: u64,
    pub kind: EventKind,
    pub line: Arc<str>,
}

struct Core {
    engine: Engine,
    writer: Option<LogWriter>,
}

struct Inner {
    core: Mutex<Core>,
    events: RwLock<Vec<Logged>>,
    snapshot: watch::Sender<Arc<FleetSnapshot>>,
    tx: broadcast::Sender<Logged>,
}

/// Shared handle to the running engine.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    /// `history` holds the encoded events already in the log, in order.
    pub fn new(engine: Engine, writer: Option<LogWriter>, history: Vec<(EventRecord, String)>) -> Self {
        let snapshot = watch::Sender::new(Arc::new(engine.snapshot()));
        let (tx, _) = broadcast::channel(4096);
        let events = history
            .into_iter()
            .map(|(r, line)| Logged {
                seq: r.seq,
                kind: r.kind(),
                line: line.into(),
            })
            .collect();
        Self {
            inner: Arc::new(Inner {
                core: Mutex::new(Core { engine, writer }),
                events: RwLock::new(events),
                snapshot,
                tx,
            }),
        }
    }

    pub fn snapshot(&self) -> Arc<FleetSnapshot> {
        self.inner.snapshot.borrow().clone()
    }

    /// Logged events with `seq > since`, optionally of one kind.
    pub fn events_since(&self, since: u64, kind: Option<EventKind>) -> Vec<Logged> {
        let events = self.inner.events.read().expect("event list lock");
        // seq n sits at index n - 1
        let start = (since as usize).min(events.len());
        events[start..]
            .iter()
            .filter(|e| kind.is_none_or(|k| e.kind == k))
            .cloned()
            .collect()
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Logged> {
        self.inner.tx.subscribe()
    }

    pub fn spectra(&self, id: &crate::domain::AssetId) -> Result<Vec<Spectrum>, EngineError> {
        self.inner.core.lock().expect("engine lock").engine.spectra(id)
    }

    fn publish(&self, core: &mut Core, records: &[EventRecord]) -> Result<()> {
        let lines = match core.writer.as_mut() {
            Some(w) => {
                let lines = w.append_all(records)?;
                w.flush()?;
                lines
            }
            None => records
                .iter()
                .map(crate::domain::codec::encode_event)
                .collect::<Result<_, _>>()
                .map_err(crate::engine::log::LogError::from)?,
        };
        let mut events = self.inner.events.write().expect("event list lock");
        for (r, line) in records.iter().zip(lines) {
            let logged = Logged {
                seq: r.seq,
                kind: r.kind(),
                line: line.into(),
            };
            events.push(logged.clone());
            // no subscribers is fine
            let _ = self.inner.tx.send(logged);
        }
        drop(events);
        self.inner.snapshot.send_replace(Arc::new(core.engine.snapshot()));
        Ok(())
    }

    /// Advances one step. Returns `false` once the horizon is reached.
    pub fn tick(&self) -> Result<bool> {
        let mut core = self.inner.core.lock().expect("engine lock");
        if core.engine.finished() {
            return Ok(false);
        }
        let records = core.engine.tick()?;
        self.publish(&mut core, &records)?;
        Ok(true)
    }

    /// Queues an operator action; see [`Engine::submit_action`].
    pub fn submit_action(
        &self,
        id: &crate::domain::AssetId,
        action: MaintenanceAction,
        due: Option<Step>,
    ) -> Result<Option<EventRecord>> {
        let mut core = self.inner.core.lock().expect("engine lock");
        let queued = core.engine.submit_action(id, action, due)?;
        if let Some(r) = &queued {
            self.publish(&mut core, std::slice::from_ref(r))?;
        }
        Ok(queued)
    }

    pub fn restore_delta(&self) -> f64 {
        self.inner
            .core
            .lock()
            .expect("engine lock")
            .engine
            .scenario()
            .policy
            .restore_delta
    }
}

/// Ticks every `period` until the horizon or the first error.
pub async fn run_tick_loop(state: AppState, period: Duration) -> Result<()> {
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        interval.tick().await;
        if !state.tick()? {
            tracing::info!("horizon reached; serving read-only");
            return Ok(());
        }
    }
}

/// Binds `addr`, runs the tick loop and serves the API until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr, period: Duration) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Usage(format!("cannot bind {addr}: {e}")))?;
    tracing::info!(%addr, "serving");
    let ticker = tokio::spawn(run_tick_loop(state.clone(), period));
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    ticker.abort();
    Ok(())
}
