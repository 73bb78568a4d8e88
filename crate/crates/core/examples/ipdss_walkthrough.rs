//! Level 6 state machine driven by hand: an asset degrades, gets diagnosed,
//! receives a RUL estimate and is scheduled for planned maintenance.
//!
//! ```text
//! cargo run --example ipdss_walkthrough
//! ```

use cbm::decision::ipdss::{step_ipdss, IpdssEvent, IpdssInput, IpdssState};
use cbm::domain::{AssetId, ConditionState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let asset = AssetId::new("track-05")?;
    let mut state = IpdssState::new(asset.clone());
    let script = [
        (12, IpdssInput::StateChange(ConditionState::Degraded)),
        (30, IpdssInput::StateChange(ConditionState::Alarm)),
        (30, IpdssInput::DiagnosisReady),
        (31, IpdssInput::RulReady(Some(24.6))),
        (32, IpdssInput::OperatorAck),
        (40, IpdssInput::RulReady(Some(9.2))),
        (44, IpdssInput::StateChange(ConditionState::Predicted)),
    ];
    let safety_margin = 5;
    for (t, input) in script {
        let (next, requests) = step_ipdss(
            &state,
            &IpdssEvent {
                asset: asset.clone(),
                t,
                input,
            },
            safety_margin,
        )?;
        println!(
            "t={t:<3} {:<40} -> {:<10} rate {:<8} pending {:<4} {requests:?}",
            format!("{input:?}"),
            format!("{:?}", next.condition),
            format!("{:?}", next.monitoring_rate),
            next.pending.map_or("-".to_string(), |d| d.to_string()),
        );
        state = next;
    }
    Ok(())
}
