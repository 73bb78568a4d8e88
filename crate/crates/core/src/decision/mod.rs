//! Level 6: decision support.

pub mod ipdss;
pub mod policy;
pub mod recommend;

pub use ipdss::{step_ipdss, ActionRequest, IpdssEvent, IpdssInput, IpdssState, MonitoringRate};
pub use policy::{
    compare_policies, evaluate_policy, Costs, PolicyConfig, PolicyKind, PolicyReport, RunLedger,
};
pub use recommend::{
    project_candidate, recommend, Alternative, AlternativeKind, ProjectedOutcome, Rationale, RecommendParams,
    Recommendation, WhatIfCandidate,
};
