//! Level 4: health index and the diagnosis cascade.
//!
//! The cascade tries historical cases first, then condition rules, then a
//! residual check against the nominal wear model. The first stage that
//! produces a diagnosis wins and later stages are not run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    AssetId, CaseId, ChannelId, ConditionState, MaintenanceAction, RuleId, Step, TedsRecord,
};
use crate::monitor::{classify_condition, Thresholds};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosisError {
    #[error("no TEDS record for channel {0}")]
    MissingTeds(ChannelId),
    #[error("no health weight for channel {0}")]
    MissingWeight(ChannelId),
    #[error("feature {0} is not finite")]
    NonFinite(ChannelId),
    #[error("snapshot has no features")]
    EmptySnapshot,
    #[error("case feature dimension {got} does not match snapshot dimension {want}")]
    Dimension { got: usize, want: usize },
    #[error("case id {0} already present in library")]
    DuplicateCase(CaseId),
}

/// Latest filtered value of every channel of one asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSnapshot {
    pub asset: AssetId,
    pub t: Step,
    pub features: BTreeMap<ChannelId, f64>,
    pub condition: ConditionState,
    /// Steps since the component was last replaced.
    pub age_steps: Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthAssessment {
    pub asset: AssetId,
    pub t: Step,
    pub h: f64,
    pub condition: ConditionState,
    /// Recent `(t, h)` pairs, strictly increasing in `t`.
    pub history: Vec<(Step, f64)>,
}

/// Weighted, normalised deviation from nominal, clamped to `[0, 1]`.
pub fn health_index(
    features: &BTreeMap<ChannelId, f64>,
    teds_set: &[TedsRecord],
    weights: &BTreeMap<ChannelId, f64>,
) -> Result<f64, DiagnosisError> {
    if features.is_empty() {
        return Err(DiagnosisError::EmptySnapshot);
    }
    let mut sum = 0.0;
    for (channel, &value) in features {
        if !value.is_finite() {
            return Err(DiagnosisError::NonFinite(channel.clone()));
        }
        let teds = teds_set
            .iter()
            .find(|t| &t.channel == channel)
            .ok_or_else(|| DiagnosisError::MissingTeds(channel.clone()))?;
        let w = *weights
            .get(channel)
            .ok_or_else(|| DiagnosisError::MissingWeight(channel.clone()))?;
        sum += w * teds.normalized_deviation(value);
    }
    Ok(sum.clamp(0.0, 1.0))
}

pub fn compute_health_index(
    snap: &FeatureSnapshot,
    teds_set: &[TedsRecord],
    weights: &BTreeMap<ChannelId, f64>,
    thresholds: &Thresholds,
) -> Result<HealthAssessment, DiagnosisError> {
    let h = health_index(&snap.features, teds_set, weights)?;
    let condition = classify_condition(h, thresholds).expect("health index is clamped");
    Ok(HealthAssessment {
        asset: snap.asset.clone(),
        t: snap.t,
        h,
        condition,
        history: Vec::new(),
    })
}

/// Min-max normalised feature vector in channel order.
pub fn normalize_features(
    features: &BTreeMap<ChannelId, f64>,
    teds_set: &[TedsRecord],
) -> Result<Vec<f64>, DiagnosisError> {
    features
        .iter()
        .map(|(channel, &v)| {
            teds_set
                .iter()
                .find(|t| &t.channel == channel)
                .map(|t| t.min_max(v))
                .ok_or_else(|| DiagnosisError::MissingTeds(channel.clone()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosisSource {
    CaseBased,
    RuleBased,
    ModelBased,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnosis {
    pub asset: AssetId,
    pub t: Step,
    pub source: DiagnosisSource,
    pub fault_label: String,
    pub cause: String,
    pub matched_case: Option<CaseId>,
    pub matched_rule: Option<RuleId>,
    pub residual: Option<f64>,
}

impl Diagnosis {
    pub fn none(asset: AssetId, t: Step) -> Self {
        Self {
            asset,
            t,
            source: DiagnosisSource::None,
            fault_label: "unknown".into(),
            cause: "no case, rule or model deviation matched".into(),
            matched_case: None,
            matched_rule: None,
            residual: None,
        }
    }
}

/// A resolved maintenance case: symptoms, problem, cause and solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseRecord {
    pub id: CaseId,
    /// Min-max normalised features in channel order.
    pub features: Vec<f64>,
    pub problem: String,
    pub cause: String,
    pub solution: MaintenanceAction,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseLibrary {
    cases: Vec<CaseRecord>,
    #[serde(default)]
    learned: u64,
}

impl CaseLibrary {
    pub fn new(cases: Vec<CaseRecord>) -> Result<Self, DiagnosisError> {
        let mut lib = CaseLibrary::default();
        for c in cases {
            lib.insert(c)?;
        }
        Ok(lib)
    }

    pub fn cases(&self) -> &[CaseRecord] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn insert(&mut self, case: CaseRecord) -> Result<(), DiagnosisError> {
        if self.cases.iter().any(|c| c.id == case.id) {
            return Err(DiagnosisError::DuplicateCase(case.id));
        }
        self.cases.push(case);
        Ok(())
    }

    /// Nearest case by Euclidean distance; ties go to the lowest id.
    pub fn nearest(&self, query: &[f64]) -> Result<Option<(&CaseRecord, f64)>, DiagnosisError> {
        let mut best: Option<(&CaseRecord, f64)> = None;
        for case in &self.cases {
            if case.features.len() != query.len() {
                return Err(DiagnosisError::Dimension {
                    got: case.features.len(),
                    want: query.len(),
                });
            }
            let d = euclidean(&case.features, query);
            let better = match best {
                None => true,
                Some((b, bd)) => d < bd || (d == bd && case.id < b.id),
            };
            if better {
                best = Some((case, d));
            }
        }
        Ok(best)
    }

    fn fresh_id(&mut self) -> CaseId {
        loop {
            self.learned += 1;
            let id = CaseId::new(format!("learned-{:05}", self.learned)).expect("valid id");
            if !self.cases.iter().any(|c| c.id == id) {
                return id;
            }
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn diagnose_case_based(
    snap: &FeatureSnapshot,
    teds_set: &[TedsRecord],
    library: &CaseLibrary,
    tau: f64,
) -> Result<Option<Diagnosis>, DiagnosisError> {
    let query = normalize_features(&snap.features, teds_set)?;
    let Some((case, distance)) = library.nearest(&query)? else {
        return Ok(None);
    };
    if distance > tau {
        return Ok(None);
    }
    Ok(Some(Diagnosis {
        asset: snap.asset.clone(),
        t: snap.t,
        source: DiagnosisSource::CaseBased,
        fault_label: case.problem.clone(),
        cause: case.cause.clone(),
        matched_case: Some(case.id.clone()),
        matched_rule: None,
        residual: None,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparator {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Clause {
    pub channel: ChannelId,
    pub op: Comparator,
    pub value: f64,
}

impl Clause {
    /// A clause on a channel absent from the snapshot does not hold.
    pub fn holds(&self, features: &BTreeMap<ChannelId, f64>) -> bool {
        features
            .get(&self.channel)
            .is_some_and(|&v| self.op.holds(v, self.value))
    }
}

/// Conjunction of threshold clauses implying a fault.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub id: RuleId,
    pub clauses: Vec<Clause>,
    pub fault_label: String,
    pub cause: String,
}

impl Rule {
    pub fn fires(&self, features: &BTreeMap<ChannelId, f64>) -> bool {
        !self.clauses.is_empty() && self.clauses.iter().all(|c| c.holds(features))
    }
}

/// First rule in declared order whose clauses all hold.
pub fn diagnose_rule_based(snap: &FeatureSnapshot, rules: &[Rule]) -> Option<Diagnosis> {
    let rule = rules.iter().find(|r| r.fires(&snap.features))?;
    Some(Diagnosis {
        asset: snap.asset.clone(),
        t: snap.t,
        source: DiagnosisSource::RuleBased,
        fault_label: rule.fault_label.clone(),
        cause: rule.cause.clone(),
        matched_case: None,
        matched_rule: Some(rule.id.clone()),
        residual: None,
    })
}

/// Nominal wear curve of the primary feature: linear in component age.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NominalWearModel {
    pub channel: ChannelId,
    pub intercept: f64,
    pub slope_per_step: f64,
}

impl NominalWearModel {
    /// Curve followed by a noiseless, shock-free sensor on `teds` when the
    /// component degrades by `drift` per step.
    pub fn from_teds(teds: &TedsRecord, drift: f64) -> Self {
        Self {
            channel: teds.channel.clone(),
            intercept: teds.nominal,
            slope_per_step: drift * teds.span(),
        }
    }

    pub fn predict(&self, age_steps: Step) -> f64 {
        self.intercept + self.slope_per_step * age_steps as f64
    }
}

pub const MODEL_DEVIATION: &str = "model_deviation";

pub fn diagnose_model_based(
    snap: &FeatureSnapshot,
    model: &NominalWearModel,
    k_sigma: f64,
    sigma: f64,
) -> Option<Diagnosis> {
    let observed = *snap.features.get(&model.channel)?;
    let residual = observed - model.predict(snap.age_steps);
    if residual.abs() <= k_sigma * sigma {
        return None;
    }
    Some(Diagnosis {
        asset: snap.asset.clone(),
        t: snap.t,
        source: DiagnosisSource::ModelBased,
        fault_label: MODEL_DEVIATION.into(),
        cause: format!(
            "{} deviates from the nominal wear curve by {residual:.4}",
            model.channel
        ),
        matched_case: None,
        matched_rule: None,
        residual: Some(residual),
    })
}

/// Everything the cascade consults for one asset kind.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosisContext<'a> {
    pub teds: &'a [TedsRecord],
    pub library: &'a CaseLibrary,
    pub tau: f64,
    pub rules: &'a [Rule],
    pub model: Option<&'a NominalWearModel>,
    pub k_sigma: f64,
    pub sigma: f64,
}

/// Per-stage invocation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CascadeCounters {
    pub case_based: u64,
    pub rule_based: u64,
    pub model_based: u64,
}

/// Case, then rule, then model. Stops at the first producer.
pub fn diagnose(
    snap: &FeatureSnapshot,
    ctx: &DiagnosisContext<'_>,
    counters: &mut CascadeCounters,
) -> Result<Diagnosis, DiagnosisError> {
    counters.case_based += 1;
    if let Some(d) = diagnose_case_based(snap, ctx.teds, ctx.library, ctx.tau)? {
        return Ok(d);
    }
    counters.rule_based += 1;
    if let Some(d) = diagnose_rule_based(snap, ctx.rules) {
        return Ok(d);
    }
    if let Some(model) = ctx.model {
        counters.model_based += 1;
        if let Some(d) = diagnose_model_based(snap, model, ctx.k_sigma, ctx.sigma) {
            return Ok(d);
        }
    }
    Ok(Diagnosis::none(snap.asset.clone(), snap.t))
}

/// Adds the outcome of a diagnosis to the library under a fresh id.
pub fn record_case(
    diag: &Diagnosis,
    action_taken: MaintenanceAction,
    normalized_features: Vec<f64>,
    library: &mut CaseLibrary,
) -> Result<CaseId, DiagnosisError> {
    if let Some(first) = library.cases.first() {
        if first.features.len() != normalized_features.len() {
            return Err(DiagnosisError::Dimension {
                got: normalized_features.len(),
                want: first.features.len(),
            });
        }
    }
    let id = library.fresh_id();
    library.insert(CaseRecord {
        id: id.clone(),
        features: normalized_features,
        problem: diag.fault_label.clone(),
        cause: diag.cause.clone(),
        solution: action_taken,
    })?;
    Ok(id)
}
