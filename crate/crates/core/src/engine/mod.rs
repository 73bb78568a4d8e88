//! The tick loop that wires the processing levels together.
//!
//! Every tick advances the clock by one step and, for each asset in scenario
//! order:
//!
//! 1. moves operator submissions from the queue into the schedule;
//! 2. advances ground truth (a failed asset accrues downtime instead) and
//!    schedules the corrective repair on a new failure;
//! 3. samples every channel `monitoring_rate` times and checks the limits;
//! 4. averages the samples of the step into the channel history, filters
//!    it and evaluates the virtual channels;
//! 5. computes the health index, classifies it and feeds each resulting
//!    state change to the IPDSS;
//! 6. runs the diagnosis cascade when the IPDSS asks for it;
//! 7. fits the trend and estimates RUL at Degraded or worse;
//! 8. applies the IPDSS requests allowed by the policy and, for
//!    `condition_based`, publishes a recommendation;
//! 9. executes every scheduled action whose due step has been reached.
//!
//! Events of one asset are appended in level order: measurements, alerts,
//! state changes, diagnosis, RUL, recommendation, actions. One
//! `policy_tick` closes the tick.

pub mod log;
pub mod replay;

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::decision::{
    project_candidate, recommend, step_ipdss, ActionRequest, Costs, IpdssEvent, IpdssInput, IpdssState,
    MonitoringRate, PolicyKind, ProjectedOutcome, RecommendParams, Recommendation, RunLedger,
    WhatIfCandidate,
};
use crate::diagnosis::{
    diagnose, health_index, normalize_features, record_case, CascadeCounters, CaseLibrary, Diagnosis,
    DiagnosisContext, DiagnosisSource, FeatureSnapshot, NominalWearModel,
};
use crate::domain::{
    ActionEvent, ActionOrigin, ActionPhase, AssetId, ChannelId, ConditionState, EventPayload, EventRecord,
    MaintenanceAction, PolicyTick, StateChange, Step, TedsRecord,
};
use crate::monitor::{
    check_limits, classify_condition, transition, Alert, LimitKind, Thresholds, HEALTH_CHANNEL,
};
use crate::prognostics::{estimate_rul, fit_trend, PrognosticsError, RulBand, RulEstimate};
use crate::scenario::{ProfileConfig, Scenario, ScenarioError};
use crate::signal::{spectrum, virtual_channel, Expr, Series, Spectrum};
use crate::simulator::{AssetKind, AssetState};

/// Per-step channel readings kept for filtering and spectra.
const RAW_CAP: usize = 256;
/// Health-index points kept per asset (at least the trend window).
const HISTORY_CAP: usize = 128;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("unknown asset {0}")]
    UnknownAsset(AssetId),
    #[error("asset {asset} is not eligible: {reason}")]
    NotEligible { asset: AssetId, reason: String },
    #[error("horizon of {0} steps already reached")]
    Finished(Step),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("pipeline failure on asset {asset}: {detail}")]
    Pipeline { asset: AssetId, detail: String },
}

/// An action waiting for its due step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PendingAction {
    pub action: MaintenanceAction,
    pub due: Step,
    pub origin: ActionOrigin,
    pub scheduled_at: Step,
}

/// Read-only view of one asset as published by the pipeline. Ground truth
/// is deliberately absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetView {
    pub id: AssetId,
    pub kind: AssetKind,
    pub profile: String,
    pub h: f64,
    pub condition: ConditionState,
    pub monitoring_rate: MonitoringRate,
    pub features: BTreeMap<ChannelId, f64>,
    pub history: Vec<(Step, f64)>,
    pub rul: Option<RulEstimate>,
    pub diagnosis: Option<Diagnosis>,
    pub recommendation: Option<Recommendation>,
    pub pending: Vec<PendingAction>,
    pub thresholds: Thresholds,
}

/// Consistent picture of the fleet after the last completed tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FleetSnapshot {
    pub t: Step,
    pub horizon: Step,
    pub last_seq: u64,
    pub policy: PolicyKind,
    pub costs: Costs,
    pub cumulative_cost: f64,
    pub assets: Vec<AssetView>,
}

impl FleetSnapshot {
    pub fn asset(&self, id: &AssetId) -> Option<&AssetView> {
        self.assets.iter().find(|a| &a.id == id)
    }

    /// Same projection as [`Engine::what_if`], computed from the snapshot.
    pub fn what_if(
        &self,
        id: &AssetId,
        candidate: &WhatIfCandidate,
    ) -> Result<ProjectedOutcome, EngineError> {
        let view = self
            .asset(id)
            .ok_or_else(|| EngineError::UnknownAsset(id.clone()))?;
        what_if_at(
            id,
            view.condition,
            view.rul.as_ref(),
            &view.thresholds,
            self.t,
            &self.costs,
            candidate,
        )
    }
}

fn what_if_at(
    id: &AssetId,
    condition: ConditionState,
    rul: Option<&RulEstimate>,
    thresholds: &Thresholds,
    now: Step,
    costs: &Costs,
    candidate: &WhatIfCandidate,
) -> Result<ProjectedOutcome, EngineError> {
    if condition < ConditionState::Alarm {
        return Err(EngineError::NotEligible {
            asset: id.clone(),
            reason: format!(
                "condition is {}, what-if needs alarm or worse",
                condition.as_str()
            ),
        });
    }
    let rul = rul
        .filter(|r| r.rul_steps.is_some())
        .ok_or_else(|| EngineError::NotEligible {
            asset: id.clone(),
            reason: "no degradation trend".into(),
        })?;
    Ok(project_candidate(rul, now, candidate, thresholds, costs))
}

/// Ground truth of a simulated asset, for tests and examples.
#[cfg(feature = "ground-truth")]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub true_h: f64,
    pub failed: bool,
    pub age_steps: Step,
}

struct ProfileRuntime {
    name: String,
    cfg: ProfileConfig,
    teds: Vec<TedsRecord>,
    weights: BTreeMap<ChannelId, f64>,
    virtuals: Vec<(ChannelId, Expr)>,
    model: NominalWearModel,
    model_sigma: f64,
    h_fail: f64,
}

impl ProfileRuntime {
    fn new(name: &str, cfg: &ProfileConfig) -> Result<Self, ScenarioError> {
        let virtuals = cfg
            .virtual_channels
            .iter()
            .map(|v| {
                Expr::parse(&v.expr)
                    .map(|e| (v.channel.clone(), e))
                    .map_err(|e| ScenarioError::Invalid(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            name: name.to_string(),
            cfg: cfg.clone(),
            teds: cfg.feature_teds(),
            weights: cfg.weights(),
            virtuals,
            model: cfg.wear_model(),
            model_sigma: cfg.model_sigma(),
            h_fail: cfg.rul_failure_level(),
        })
    }
}

struct AssetRuntime {
    id: AssetId,
    profile: usize,
    sim: AssetState,
    raw: BTreeMap<ChannelId, VecDeque<f64>>,
    features: BTreeMap<ChannelId, f64>,
    h: f64,
    history: VecDeque<(Step, f64)>,
    ipdss: IpdssState,
    rul: Option<RulEstimate>,
    diagnosis: Option<Diagnosis>,
    /// Normalised features at diagnosis time, consumed when a case is learned.
    case_features: Option<Vec<f64>>,
    recommendation: Option<Recommendation>,
    scheduled: Vec<PendingAction>,
    queue: Vec<PendingAction>,
}

impl AssetRuntime {
    fn reset_after_renewal(&mut self) {
        self.raw.clear();
        self.history.clear();
        self.rul = None;
        self.recommendation = None;
        self.case_features = None;
    }
}

/// Sequence counter plus the events of the tick being built.
struct Emitter<'a> {
    seq: &'a mut u64,
    t: Step,
    out: &'a mut Vec<EventRecord>,
}

impl Emitter<'_> {
    fn emit(&mut self, payload: EventPayload) {
        *self.seq += 1;
        self.out.push(EventRecord {
            seq: *self.seq,
            t: self.t,
            payload,
        });
    }
}

pub struct Engine {
    scenario: Scenario,
    clock: Step,
    seq: u64,
    profiles: Vec<ProfileRuntime>,
    assets: Vec<AssetRuntime>,
    libraries: BTreeMap<AssetKind, CaseLibrary>,
    ledger: RunLedger,
    counters: CascadeCounters,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("scenario", &self.scenario.name)
            .field("clock", &self.clock)
            .field("seq", &self.seq)
            .field("assets", &self.assets.len())
            .finish()
    }
}

impl Engine {
    pub fn new(scenario: Scenario) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let mut profiles = Vec::with_capacity(scenario.profiles.len());
        let mut index = BTreeMap::new();
        for (name, cfg) in &scenario.profiles {
            index.insert(name.clone(), profiles.len());
            profiles.push(ProfileRuntime::new(name, cfg)?);
        }
        let mut seeds: BTreeMap<AssetKind, Vec<_>> = BTreeMap::new();
        for p in &profiles {
            seeds
                .entry(p.cfg.kind)
                .or_default()
                .extend(p.cfg.cases.iter().cloned());
        }
        let libraries = seeds
            .into_iter()
            .map(|(kind, cases)| {
                CaseLibrary::new(cases)
                    .map(|lib| (kind, lib))
                    .map_err(|e| ScenarioError::Invalid(format!("{} cases: {e}", kind.as_str())))
            })
            .collect::<Result<_, _>>()?;
        let assets = scenario
            .assets
            .iter()
            .map(|entry| {
                let pi = index[&entry.profile];
                let sim = AssetState::new(
                    entry.id.clone(),
                    profiles[pi].cfg.asset_profile(),
                    scenario.master_seed,
                )
                .with_true_h(entry.initial_h);
                AssetRuntime {
                    id: entry.id.clone(),
                    profile: pi,
                    sim,
                    raw: BTreeMap::new(),
                    features: BTreeMap::new(),
                    h: 0.0,
                    history: VecDeque::new(),
                    ipdss: IpdssState::new(entry.id.clone()),
                    rul: None,
                    diagnosis: None,
                    case_features: None,
                    recommendation: None,
                    scheduled: Vec::new(),
                    queue: Vec::new(),
                }
            })
            .collect();
        Ok(Self {
            scenario,
            clock: 0,
            seq: 0,
            profiles,
            assets,
            libraries,
            ledger: RunLedger::default(),
            counters: CascadeCounters::default(),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Last completed step; 0 before the first tick.
    pub fn clock(&self) -> Step {
        self.clock
    }

    pub fn last_seq(&self) -> u64 {
        self.seq
    }

    pub fn finished(&self) -> bool {
        self.clock >= self.scenario.horizon_steps
    }

    pub fn ledger(&self) -> &RunLedger {
        &self.ledger
    }

    pub fn cumulative_cost(&self) -> f64 {
        self.ledger.total_cost(&self.scenario.policy.costs)
    }

    pub fn cascade_counters(&self) -> CascadeCounters {
        self.counters
    }

    pub fn case_library(&self, kind: AssetKind) -> Option<&CaseLibrary> {
        self.libraries.get(&kind)
    }

    pub fn asset_ids(&self) -> impl Iterator<Item = &AssetId> {
        self.assets.iter().map(|a| &a.id)
    }

    fn find(&self, id: &AssetId) -> Result<&AssetRuntime, EngineError> {
        self.assets
            .iter()
            .find(|a| &a.id == id)
            .ok_or_else(|| EngineError::UnknownAsset(id.clone()))
    }

    #[cfg(feature = "ground-truth")]
    pub fn ground_truth(&self, id: &AssetId) -> Option<GroundTruth> {
        self.find(id).ok().map(|a| GroundTruth {
            true_h: a.sim.true_h(),
            failed: a.sim.failed(),
            age_steps: a.sim.age_steps(),
        })
    }

    pub fn asset_view(&self, id: &AssetId) -> Result<AssetView, EngineError> {
        Ok(self.view(self.find(id)?))
    }

    fn view(&self, a: &AssetRuntime) -> AssetView {
        let p = &self.profiles[a.profile];
        AssetView {
            id: a.id.clone(),
            kind: p.cfg.kind,
            profile: p.name.clone(),
            h: a.h,
            condition: a.ipdss.condition,
            monitoring_rate: a.ipdss.monitoring_rate,
            features: a.features.clone(),
            history: a.history.iter().copied().collect(),
            rul: a.rul.clone(),
            diagnosis: a.diagnosis.clone(),
            recommendation: a.recommendation.clone(),
            pending: a.queue.iter().chain(&a.scheduled).copied().collect(),
            thresholds: p.cfg.thresholds,
        }
    }

    pub fn snapshot(&self) -> FleetSnapshot {
        FleetSnapshot {
            t: self.clock,
            horizon: self.scenario.horizon_steps,
            last_seq: self.seq,
            policy: self.scenario.policy.kind,
            costs: self.scenario.policy.costs,
            cumulative_cost: self.cumulative_cost(),
            assets: self.assets.iter().map(|a| self.view(a)).collect(),
        }
    }

    /// Spectra of the channels that configure a spectrum window, over the
    /// most recent per-step readings. Channels with too short a history are
    /// omitted.
    pub fn spectra(&self, id: &AssetId) -> Result<Vec<Spectrum>, EngineError> {
        let a = self.find(id)?;
        let p = &self.profiles[a.profile];
        let mut out = Vec::new();
        for ch in &p.cfg.channels {
            let (Some(n), Some(raw)) = (ch.spectrum_window, a.raw.get(&ch.channel)) else {
                continue;
            };
            if raw.len() < n {
                continue;
            }
            let values: Vec<f64> = raw.iter().skip(raw.len() - n).copied().collect();
            let window = Series::new(ch.channel.clone(), self.clock + 1 - n as Step, values);
            out.push(spectrum(&window).map_err(|e| EngineError::Pipeline {
                asset: a.id.clone(),
                detail: e.to_string(),
            })?);
        }
        Ok(out)
    }

    /// Prices a candidate action against the asset's current trend. Pure.
    pub fn what_if(
        &self,
        id: &AssetId,
        candidate: &WhatIfCandidate,
    ) -> Result<ProjectedOutcome, EngineError> {
        let a = self.find(id)?;
        let p = &self.profiles[a.profile];
        what_if_at(
            id,
            a.ipdss.condition,
            a.rul.as_ref(),
            &p.cfg.thresholds,
            self.clock,
            &self.scenario.policy.costs,
            candidate,
        )
    }

    /// Queues an operator action for execution at `due` (default and
    /// minimum: the next step). Returns the `queued` event, or `None` when an
    /// identical action is already waiting.
    pub fn submit_action(
        &mut self,
        id: &AssetId,
        action: MaintenanceAction,
        due: Option<Step>,
    ) -> Result<Option<EventRecord>, EngineError> {
        if let MaintenanceAction::Restore { delta } = action {
            if !(delta.is_finite() && delta > 0.0) {
                return Err(EngineError::InvalidAction(format!(
                    "restore delta must be > 0, got {delta}"
                )));
            }
        }
        if self.finished() {
            return Err(EngineError::Finished(self.clock));
        }
        let now = self.clock;
        let due = due.unwrap_or(now + 1).max(now + 1);
        let a = self
            .assets
            .iter_mut()
            .find(|a| &a.id == id)
            .ok_or_else(|| EngineError::UnknownAsset(id.clone()))?;
        if a.queue.iter().any(|q| q.action == action && q.due == due) {
            return Ok(None);
        }
        a.queue.push(PendingAction {
            action,
            due,
            origin: ActionOrigin::Operator,
            scheduled_at: now,
        });
        self.seq += 1;
        Ok(Some(EventRecord {
            seq: self.seq,
            t: now,
            payload: EventPayload::Action(ActionEvent {
                asset: id.clone(),
                action,
                due,
                origin: ActionOrigin::Operator,
                phase: ActionPhase::Queued,
            }),
        }))
    }

    /// Advances one step and returns the events it produced, in log order.
    pub fn tick(&mut self) -> Result<Vec<EventRecord>, EngineError> {
        if self.finished() {
            return Err(EngineError::Finished(self.clock));
        }
        let t = self.clock + 1;
        let mut out = Vec::new();
        for i in 0..self.assets.len() {
            self.step_asset(i, t, &mut out)?;
        }
        self.ledger.spare_part_steps += self.spares_held(t);
        self.ledger.steps += 1;
        self.clock = t;
        let tick = PolicyTick {
            policy: self.scenario.policy.kind,
            assets: self.assets.len() as u64,
            in_alarm: self
                .assets
                .iter()
                .filter(|a| a.ipdss.condition >= ConditionState::Alarm)
                .count() as u64,
            failed: self.assets.iter().filter(|a| a.sim.failed()).count() as u64,
            cumulative_cost: self.cumulative_cost(),
        };
        Emitter {
            seq: &mut self.seq,
            t,
            out: &mut out,
        }
        .emit(EventPayload::PolicyTick(tick));
        Ok(out)
    }

    /// Ticks until `step` (inclusive) or the horizon, whichever comes first.
    pub fn run_until(&mut self, step: Step) -> Result<Vec<EventRecord>, EngineError> {
        let mut all = Vec::new();
        while self.clock < step && !self.finished() {
            all.extend(self.tick()?);
        }
        Ok(all)
    }

    /// Ticks to the horizon, discarding events.
    pub fn run_to_end(&mut self) -> Result<(), EngineError> {
        while !self.finished() {
            self.tick()?;
        }
        Ok(())
    }

    /// Spare parts on hand during step `t`.
    fn spares_held(&self, t: Step) -> u64 {
        let policy = &self.scenario.policy;
        let n = self.assets.len() as u64;
        match policy.kind {
            PolicyKind::CorrectiveOnly => n,
            PolicyKind::TimeBased => {
                let interval = policy.interval();
                let next = (t / interval + 1) * interval;
                let held =
                    next <= self.scenario.horizon_steps && next.saturating_sub(policy.spare_lead_time) <= t;
                if held {
                    n
                } else {
                    0
                }
            }
            PolicyKind::ConditionBased => self
                .assets
                .iter()
                .flat_map(|a| &a.scheduled)
                .filter(|pa| {
                    pa.action == MaintenanceAction::Replace
                        && matches!(pa.origin, ActionOrigin::Planned | ActionOrigin::Operator)
                        && pa.scheduled_at.max(pa.due.saturating_sub(policy.spare_lead_time)) <= t
                        && t < pa.due
                })
                .count() as u64,
        }
    }

    fn step_asset(&mut self, i: usize, t: Step, out: &mut Vec<EventRecord>) -> Result<(), EngineError> {
        let Engine {
            scenario,
            seq,
            profiles,
            assets,
            libraries,
            ledger,
            counters,
            ..
        } = self;
        let policy = &scenario.policy;
        let cb = policy.kind == PolicyKind::ConditionBased;
        let a = &mut assets[i];
        let p = &profiles[a.profile];
        let asset_id = a.id.clone();
        let pipeline = move |detail: String| EngineError::Pipeline {
            asset: asset_id.clone(),
            detail,
        };

        let mut actions: Vec<ActionEvent> = Vec::new();
        let action_event = |pa: &PendingAction, phase: ActionPhase, asset: &AssetId| ActionEvent {
            asset: asset.clone(),
            action: pa.action,
            due: pa.due,
            origin: pa.origin,
            phase,
        };

        // operator submissions
        for mut pa in std::mem::take(&mut a.queue) {
            pa.scheduled_at = t;
            actions.push(action_event(&pa, ActionPhase::Scheduled, &a.id));
            a.scheduled.push(pa);
        }

        // level 1: ground truth
        if a.sim.failed() {
            ledger.downtime_steps += 1;
        } else {
            a.sim.advance().map_err(|e| pipeline(e.to_string()))?;
            if a.sim.failed() {
                ledger.unplanned_failures += 1;
                ledger.downtime_steps += 1;
                let pa = PendingAction {
                    action: MaintenanceAction::Replace,
                    due: t + policy.repair_delay,
                    origin: ActionOrigin::Corrective,
                    scheduled_at: t,
                };
                actions.push(action_event(&pa, ActionPhase::Scheduled, &a.id));
                a.scheduled.push(pa);
            }
        }

        // levels 1 and 3: sampling and limit checks
        let rate = a.ipdss.monitoring_rate.samples_per_step();
        let mut measurements = Vec::new();
        let mut alerts: Vec<Alert> = Vec::new();
        for (ch, teds) in p.cfg.channels.iter().zip(&p.teds) {
            let mut sum = 0.0;
            for _ in 0..rate {
                let m = a
                    .sim
                    .sample(&ch.channel, t)
                    .map_err(|e| pipeline(e.to_string()))?;
                alerts.extend(check_limits(&m, teds));
                sum += m.value;
                measurements.push(m);
            }
            let hist = a.raw.entry(ch.channel.clone()).or_default();
            hist.push_back(sum / f64::from(rate));
            if hist.len() > RAW_CAP {
                hist.pop_front();
            }
        }

        // level 2: filtering and virtual channels
        a.features.clear();
        for ch in &p.cfg.channels {
            let hist = &a.raw[&ch.channel];
            let series = Series::new(
                ch.channel.clone(),
                t + 1 - hist.len() as Step,
                hist.iter().copied().collect(),
            );
            let filtered = ch.filter.apply(&series).map_err(|e| pipeline(e.to_string()))?;
            let last = filtered.last().expect("filtered history is non-empty");
            a.features.insert(ch.channel.clone(), last);
        }
        if !p.virtuals.is_empty() {
            let points: Vec<Series> = a
                .features
                .iter()
                .map(|(c, v)| Series::new(c.clone(), t, vec![*v]))
                .collect();
            let refs: Vec<&Series> = points.iter().collect();
            for (name, expr) in &p.virtuals {
                let s = virtual_channel(name.clone(), &refs, expr)
                    .map_err(|e| pipeline(format!("virtual channel {name}: {e}")))?;
                a.features.insert(name.clone(), s.values[0]);
            }
        }

        // level 3/4: health index and condition
        let th = &p.cfg.thresholds;
        let h = health_index(&a.features, &p.teds, &p.weights).map_err(|e| pipeline(e.to_string()))?;
        let condition = classify_condition(h, th).map_err(|e| pipeline(e.to_string()))?;
        a.h = h;
        a.history.push_back((t, h));
        while a.history.len() > HISTORY_CAP.max(p.cfg.prognostics.window) {
            a.history.pop_front();
        }

        let mut state_changes = Vec::new();
        let mut requests: VecDeque<ActionRequest> = VecDeque::new();
        let margin = policy.safety_margin;
        let step = |state: &mut IpdssState, input: IpdssInput, reqs: &mut VecDeque<ActionRequest>| {
            let ev = IpdssEvent {
                asset: state.asset.clone(),
                t,
                input,
            };
            let (next, out) = step_ipdss(state, &ev, margin).expect("event routed to its own asset");
            *state = next;
            reqs.extend(out);
        };
        let prev = a.ipdss.condition;
        for tr in transition(prev, condition) {
            state_changes.push(StateChange {
                asset: a.id.clone(),
                from: tr.from,
                to: tr.to,
                h,
            });
            step(&mut a.ipdss, IpdssInput::StateChange(tr.to), &mut requests);
        }
        let entered_alarm = prev < ConditionState::Alarm && condition == ConditionState::Alarm;
        if condition < ConditionState::Alarm {
            a.recommendation = None;
        }

        let mut health_alert = None;
        let mut diagnosis_ev = None;
        let mut rul_ev = None;
        let mut planned_now = false;
        let mut rul_done = false;
        loop {
            while let Some(req) = requests.pop_front() {
                match req {
                    ActionRequest::RaiseAlert => {
                        health_alert = Some(Alert {
                            asset: a.id.clone(),
                            channel: ChannelId::new(HEALTH_CHANNEL).expect("valid id"),
                            t,
                            limit_kind: LimitKind::Upper,
                            observed: h,
                            limit: th.alarm_level,
                        });
                    }
                    ActionRequest::RunDiagnosis => {
                        let snap = FeatureSnapshot {
                            asset: a.id.clone(),
                            t,
                            features: a.features.clone(),
                            condition,
                            age_steps: a.sim.age_steps(),
                        };
                        let library = &libraries[&p.cfg.kind];
                        let ctx = DiagnosisContext {
                            teds: &p.teds,
                            library,
                            tau: p.cfg.diagnosis.tau,
                            rules: &p.cfg.rules,
                            model: Some(&p.model),
                            k_sigma: p.cfg.diagnosis.k_sigma,
                            sigma: p.model_sigma,
                        };
                        let d = diagnose(&snap, &ctx, counters).map_err(|e| pipeline(e.to_string()))?;
                        a.case_features = Some(
                            normalize_features(&a.features, &p.teds).map_err(|e| pipeline(e.to_string()))?,
                        );
                        a.diagnosis = Some(d.clone());
                        diagnosis_ev = Some(d);
                        step(&mut a.ipdss, IpdssInput::DiagnosisReady, &mut requests);
                    }
                    ActionRequest::CancelPending { due } => {
                        if let Some(k) = a
                            .scheduled
                            .iter()
                            .position(|pa| pa.origin == ActionOrigin::Planned && pa.due == due)
                        {
                            let pa = a.scheduled.remove(k);
                            actions.push(action_event(&pa, ActionPhase::Cancelled, &a.id));
                        }
                    }
                    ActionRequest::EmergencyCorrective => {
                        let already = a.scheduled.iter().any(|pa| {
                            matches!(pa.origin, ActionOrigin::Emergency | ActionOrigin::Corrective)
                        });
                        if cb && !a.sim.failed() && !already {
                            let pa = PendingAction {
                                action: MaintenanceAction::Replace,
                                due: t,
                                origin: ActionOrigin::Emergency,
                                scheduled_at: t,
                            };
                            actions.push(action_event(&pa, ActionPhase::Scheduled, &a.id));
                            a.scheduled.push(pa);
                            a.recommendation = None;
                        }
                    }
                    ActionRequest::SchedulePlannedCorrective { due } => {
                        if cb {
                            let pa = PendingAction {
                                action: MaintenanceAction::Replace,
                                due,
                                origin: ActionOrigin::Planned,
                                scheduled_at: t,
                            };
                            actions.push(action_event(&pa, ActionPhase::Scheduled, &a.id));
                            a.scheduled.push(pa);
                            planned_now = true;
                        }
                    }
                }
            }
            if rul_done {
                break;
            }
            rul_done = true;

            // level 5: prognostics
            if condition < ConditionState::Degraded {
                a.rul = None;
                continue;
            }
            let window = p.cfg.prognostics.window;
            let skip = a.history.len().saturating_sub(window);
            let recent: Vec<(Step, f64)> = a.history.iter().skip(skip).copied().collect();
            if recent.len() < 2 {
                continue;
            }
            let trend = fit_trend(&recent, window).map_err(|e| pipeline(e.to_string()))?;
            let h_now = trend.fitted_now().clamp(0.0, 1.0);
            let est = match estimate_rul(
                a.id.clone(),
                &trend,
                h_now,
                p.h_fail,
                p.cfg.prognostics.slope_epsilon,
            ) {
                Ok(est) => est,
                Err(PrognosticsError::AlreadyFailed { .. }) => RulEstimate {
                    asset: a.id.clone(),
                    t: trend.t_ref,
                    h_now,
                    rul_steps: Some(0.0),
                    band: (trend.residual_sigma > 0.0).then_some(RulBand {
                        lower: 0.0,
                        upper: 0.0,
                    }),
                    basis: trend,
                },
                Err(e) => return Err(pipeline(e.to_string())),
            };
            let lower = est.lower();
            a.rul = Some(est.clone());
            rul_ev = Some(est);
            if condition == ConditionState::Alarm {
                step(&mut a.ipdss, IpdssInput::RulReady(lower), &mut requests);
            }
        }

        // level 6: recommendation
        let mut recommendation_ev = None;
        let advisory = entered_alarm && a.ipdss.pending.is_none();
        if cb && (planned_now || advisory) {
            let none = Diagnosis::none(a.id.clone(), t);
            let diag = a.diagnosis.as_ref().filter(|d| d.t == t).unwrap_or(&none);
            let params = RecommendParams {
                safety_margin: policy.safety_margin,
                reinspect_interval: policy.reinspect_interval,
                restore_delta: policy.restore_delta,
            };
            let rec = recommend(diag, a.rul.as_ref(), t, &policy.costs, &params);
            a.recommendation = Some(rec.clone());
            recommendation_ev = Some(rec);
        }

        // time-based renewals
        if policy.kind == PolicyKind::TimeBased && t.is_multiple_of(policy.interval()) {
            let pa = PendingAction {
                action: MaintenanceAction::Replace,
                due: t,
                origin: ActionOrigin::TimeBased,
                scheduled_at: t,
            };
            actions.push(action_event(&pa, ActionPhase::Scheduled, &a.id));
            a.scheduled.push(pa);
        }

        // execution
        let mut replaced = false;
        let mut k = 0;
        while k < a.scheduled.len() {
            if a.scheduled[k].due > t {
                k += 1;
                continue;
            }
            let pa = a.scheduled.remove(k);
            let moot = replaced
                && pa.action == MaintenanceAction::Replace
                && matches!(
                    pa.origin,
                    ActionOrigin::TimeBased | ActionOrigin::Corrective | ActionOrigin::Emergency
                );
            if moot {
                actions.push(action_event(&pa, ActionPhase::Cancelled, &a.id));
                continue;
            }
            a.sim.apply(&pa.action);
            match (pa.action, pa.origin) {
                (MaintenanceAction::Inspect, _) => ledger.inspections += 1,
                (_, ActionOrigin::Corrective) => {}
                (_, ActionOrigin::Emergency) => ledger.emergency += 1,
                _ => ledger.preventive += 1,
            }
            actions.push(action_event(&pa, ActionPhase::Executed, &a.id));
            if pa.origin == ActionOrigin::Planned && a.ipdss.pending == Some(pa.due) {
                a.ipdss.pending = None;
            }
            if pa.action.renews() {
                if let (Some(diag), Some(features)) = (&a.diagnosis, a.case_features.take()) {
                    if p.cfg.diagnosis.record_cases && diag.source != DiagnosisSource::None {
                        let lib = libraries.get_mut(&p.cfg.kind).expect("library per kind");
                        record_case(diag, pa.action, features, lib).map_err(|e| pipeline(e.to_string()))?;
                    }
                }
                a.reset_after_renewal();
            }
            if pa.action == MaintenanceAction::Replace {
                replaced = true;
                // a pending repair is moot once the component is new
                let mut j = 0;
                while j < a.scheduled.len() {
                    let later = a.scheduled[j];
                    if later.action == MaintenanceAction::Replace
                        && matches!(later.origin, ActionOrigin::Corrective | ActionOrigin::Emergency)
                    {
                        a.scheduled.remove(j);
                        actions.push(action_event(&later, ActionPhase::Cancelled, &a.id));
                    } else {
                        j += 1;
                    }
                }
            }
        }

        let mut em = Emitter { seq, t, out };
        for m in measurements {
            em.emit(EventPayload::Measurement(m));
        }
        for al in alerts.into_iter().chain(health_alert) {
            em.emit(EventPayload::Alert(al));
        }
        for sc in state_changes {
            em.emit(EventPayload::StateChange(sc));
        }
        if let Some(d) = diagnosis_ev {
            em.emit(EventPayload::Diagnosis(d));
        }
        if let Some(r) = rul_ev {
            em.emit(EventPayload::Rul(r));
        }
        if let Some(r) = recommendation_ev {
            em.emit(EventPayload::Recommendation(r));
        }
        for ae in actions {
            em.emit(EventPayload::Action(ae));
        }
        Ok(())
    }
}
