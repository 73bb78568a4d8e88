//! The level 4 cascade: case-based reasoning first, then rules, then a
//! nominal wear model. Each snapshot below is answered by a different stage,
//! and the last one is recorded as a new case so the next lookup finds it.
//!
//! ```text
//! cargo run --example diagnosis_cascade
//! ```

use std::collections::BTreeMap;

use cbm::diagnosis::{
    diagnose, normalize_features, record_case, CascadeCounters, CaseLibrary, CaseRecord, Clause, Comparator,
    DiagnosisContext, FeatureSnapshot, NominalWearModel, Rule,
};
use cbm::domain::{
    AssetId, CaseId, ChannelId, ConditionState, MaintenanceAction, Placement, RuleId, TedsRecord,
};

fn teds(name: &str, nominal: f64, failure: f64) -> TedsRecord {
    TedsRecord {
        channel: ChannelId::new(name).unwrap(),
        quantity: name.into(),
        units: "mm".into(),
        range_min: 0.0,
        range_max: 40.0,
        nominal,
        failure_value: failure,
        placement: Placement::Wayside,
        lower_limit: None,
        upper_limit: None,
    }
}

fn snapshot(t: u64, age: u64, height: f64, thickness: f64) -> FeatureSnapshot {
    FeatureSnapshot {
        asset: AssetId::new("wheel-07").unwrap(),
        t,
        features: BTreeMap::from([
            (ChannelId::new("flange_height").unwrap(), height),
            (ChannelId::new("flange_thickness").unwrap(), thickness),
        ]),
        condition: ConditionState::Alarm,
        age_steps: age,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let teds_set = vec![
        teds("flange_height", 28.0, 36.0),
        teds("flange_thickness", 32.0, 22.0),
    ];
    // features are min-max normalised over the 0..40 range, in channel order
    let mut library = CaseLibrary::new(vec![CaseRecord {
        id: CaseId::new("hist-001")?,
        features: vec![0.85, 0.6],
        problem: "flange wear".into(),
        cause: "curve lubrication failure".into(),
        solution: MaintenanceAction::Replace,
    }])?;
    let rules = vec![Rule {
        id: RuleId::new("thin-flange")?,
        clauses: vec![Clause {
            channel: ChannelId::new("flange_thickness")?,
            op: Comparator::Lt,
            value: 23.0,
        }],
        fault_label: "thin flange".into(),
        cause: "accumulated wear".into(),
    }];
    let model = NominalWearModel::from_teds(&teds_set[1], 0.01);
    let mut counters = CascadeCounters::default();

    let snaps = [
        ("matches a past case", snapshot(10, 60, 34.0, 24.0)),
        ("trips a rule", snapshot(20, 90, 30.0, 22.5)),
        ("looks normal", snapshot(30, 20, 29.0, 30.0)),
        ("only deviates from the model", snapshot(40, 20, 29.0, 28.0)),
    ];
    for (what, snap) in &snaps {
        let ctx = DiagnosisContext {
            teds: &teds_set,
            library: &library,
            tau: 0.1,
            rules: &rules,
            model: Some(&model),
            k_sigma: 3.0,
            sigma: 0.2,
        };
        let d = diagnose(snap, &ctx, &mut counters)?;
        println!(
            "t={:<3} {what:<30} -> {:?}: {}, {}",
            snap.t, d.source, d.fault_label, d.cause
        );
        if snap.t == 40 {
            let id = record_case(
                &d,
                MaintenanceAction::Inspect,
                normalize_features(&snap.features, &teds_set)?,
                &mut library,
            )?;
            println!("      recorded as {id}");
        }
    }

    let again = snapshot(50, 20, 29.0, 28.0);
    let ctx = DiagnosisContext {
        teds: &teds_set,
        library: &library,
        tau: 0.1,
        rules: &rules,
        model: Some(&model),
        k_sigma: 3.0,
        sigma: 0.2,
    };
    let d = diagnose(&again, &ctx, &mut counters)?;
    let case = d.matched_case.map_or("-".into(), |c| c.to_string());
    println!("t=50  {:<30} -> {:?}: {case}", "same symptoms again", d.source);
    println!(
        "stage invocations: case {} rule {} model {}",
        counters.case_based, counters.rule_based, counters.model_based
    );
    Ok(())
}
