//! Serves the HTTP/JSON API and the event stream for the built-in scenario,
//! ticking every 200 ms. The event log goes to a temporary directory.
//!
//! ```text
//! cargo run --example serve_api
//! curl localhost:8080/api/v1/assets
//! curl -N localhost:8080/api/v1/stream?since=0
//! curl -X POST localhost:8080/api/v1/actions \
//!      -H 'content-type: application/json' \
//!      -d '{"asset_id":"wheel-01","action":"replace"}'
//! ```

use std::time::Duration;

use cbm::engine::log::LogWriter;
use cbm::engine::Engine;
use cbm::scenario::Scenario;
use cbm::service::{serve, AppState};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let dir = tempfile::tempdir()?;
    let log = dir.path().join("events.ndjson");
    eprintln!("event log: {}", log.display());
    let state = AppState::new(
        Engine::new(Scenario::railyard_default())?,
        Some(LogWriter::create(&log)?),
        Vec::new(),
    );
    serve(state, "127.0.0.1:8080".parse()?, Duration::from_millis(200)).await?;
    Ok(())
}
