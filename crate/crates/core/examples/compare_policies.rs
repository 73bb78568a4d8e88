//! Level 7 cost harness: the same fleet under corrective-only, time-based and
//! condition-based maintenance, then a sweep of the planning safety margin.
//!
//! ```text
//! cargo run --release --example compare_policies -- 100
//! ```

use cbm::decision::{compare_policies, evaluate_policy, PolicyKind};
use cbm::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(20);
    let sc = Scenario::railyard_default();
    println!("{} seeds of {} over {} steps\n", seeds, sc.name, sc.horizon_steps);
    println!(
        "{:<16} {:>10} {:>9} {:>10} {:>9} {:>12}",
        "policy", "mean_cost", "unplanned", "preventive", "emergency", "mean_spares"
    );
    for r in compare_policies(&sc, seeds)? {
        println!(
            "{:<16} {:>10.1} {:>9} {:>10} {:>9} {:>12.2}",
            r.policy.as_str(),
            r.mean_total_cost,
            r.unplanned_failures,
            r.preventive_count,
            r.emergency_count,
            r.mean_spare_stock
        );
    }

    println!("\ncondition-based, varying the safety margin:");
    for margin in [2, 5, 10, 15] {
        let mut cfg = sc.policy.with_kind(PolicyKind::ConditionBased);
        cfg.safety_margin = margin;
        let r = evaluate_policy(&sc, &cfg, seeds)?;
        println!(
            "  margin {margin:>2}: cost {:>7.1}  emergency {:>5}  unplanned {:>4}",
            r.mean_total_cost, r.emergency_count, r.unplanned_failures
        );
    }
    Ok(())
}
