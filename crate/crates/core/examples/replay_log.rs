//! The event log is the source of truth: write one, crash halfway through a
//! line, resume, and confirm the result matches an uninterrupted run byte for
//! byte.
//!
//! ```text
//! cargo run --example replay_log
//! ```

use cbm::domain::MaintenanceAction;
use cbm::engine::log::{read_log, LogWriter};
use cbm::engine::replay::{replay, resume};
use cbm::engine::Engine;
use cbm::scenario::Scenario;

fn drive(engine: &mut Engine, writer: &mut LogWriter, until: u64) -> Result<(), Box<dyn std::error::Error>> {
    while engine.clock() < until {
        // an operator request in the middle of the run is part of the log too
        if engine.clock() == 40 {
            let id = engine.asset_ids().next().unwrap().clone();
            if let Some(q) = engine.submit_action(&id, MaintenanceAction::Inspect, None)? {
                writer.append(&q)?;
            }
        }
        writer.append_all(&engine.tick()?)?;
    }
    writer.flush()?;
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let sc = Scenario::railyard_default().with_horizon(120);

    let reference = dir.path().join("reference.ndjson");
    let mut engine = Engine::new(sc.clone())?;
    let mut writer = LogWriter::create(&reference)?;
    drive(&mut engine, &mut writer, 120)?;
    drop(writer);
    let full = std::fs::read(&reference)?;
    println!(
        "reference run: {} events, {} bytes",
        engine.last_seq(),
        full.len()
    );

    // simulate a crash that tore the log in the middle of a line
    let crashed = dir.path().join("crashed.ndjson");
    std::fs::write(&crashed, &full[..full.len() * 3 / 5 + 17])?;
    let r = resume(sc.clone(), &crashed)?;
    println!(
        "resumed at step {} after dropping {} events of the unfinished tick",
        r.engine.clock(),
        r.discarded
    );
    let (mut engine, mut writer) = (r.engine, r.writer);
    drive(&mut engine, &mut writer, 120)?;
    drop(writer);
    println!(
        "byte-identical after resume: {}",
        std::fs::read(&crashed)? == full
    );

    let replayed = replay(sc, &read_log(&reference)?)?;
    println!(
        "replayed engine at step {} with cost {:.3} (original {:.3})",
        replayed.clock(),
        replayed.cumulative_cost(),
        engine.cumulative_cost()
    );
    Ok(())
}
