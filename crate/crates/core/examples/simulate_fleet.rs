//! Runs the built-in railyard scenario for a year of simulated days and prints
//! how each asset's condition evolved.
//!
//! ```text
//! cargo run --example simulate_fleet
//! ```

use std::collections::BTreeMap;

use cbm::domain::{ConditionState, EventPayload};
use cbm::engine::Engine;
use cbm::report::LogReport;
use cbm::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut engine = Engine::new(Scenario::railyard_default())?;
    let mut events = Vec::new();
    let mut first_alarm: BTreeMap<String, u64> = BTreeMap::new();
    while !engine.finished() {
        for r in engine.tick()? {
            if let EventPayload::StateChange(s) = &r.payload {
                if s.to == ConditionState::Alarm {
                    first_alarm.entry(s.asset.to_string()).or_insert(r.t);
                }
            }
            events.push(r);
        }
    }
    print!("{}", LogReport::from_records(&events).to_text());
    println!();
    for (asset, t) in &first_alarm {
        println!("{asset:<10} first alarm at step {t}");
    }
    let l = engine.ledger();
    println!(
        "\npreventive {}  emergency {}  unplanned {}  cost {:.1}",
        l.preventive,
        l.emergency,
        l.unplanned_failures,
        engine.cumulative_cost()
    );
    Ok(())
}
