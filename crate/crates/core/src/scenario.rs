//! Scenario files: fleet, per-kind asset profiles, processing chains,
//! diagnosis knowledge and the maintenance policy.
//!
//! Scenarios are TOML (or JSON when the file ends in `.json`). See
//! `scenarios/railyard-default.toml` for a documented example.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::{Costs, PolicyConfig, PolicyKind};
use crate::diagnosis::{CaseLibrary, CaseRecord, NominalWearModel, Rule};
use crate::domain::{AssetId, ChannelId, Placement, TedsRecord};
use crate::monitor::Thresholds;
use crate::prognostics::{DEFAULT_SLOPE_EPSILON, DEFAULT_WINDOW};
use crate::signal::{Expr, FilterSpec};
use crate::simulator::{AssetKind, AssetProfile};

const RAILYARD_DEFAULT: &str = include_str!("../scenarios/railyard-default.toml");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub master_seed: u64,
    pub horizon_steps: u64,
    pub policy: PolicyConfig,
    pub profiles: BTreeMap<String, ProfileConfig>,
    pub assets: Vec<AssetEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetEntry {
    pub id: AssetId,
    pub profile: String,
    /// Degradation at the start of the run.
    #[serde(default)]
    pub initial_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub channel: ChannelId,
    pub quantity: String,
    pub units: String,
    pub range_min: f64,
    pub range_max: f64,
    pub nominal: f64,
    pub failure_value: f64,
    pub placement: Placement,
    #[serde(default)]
    pub lower_limit: Option<f64>,
    #[serde(default)]
    pub upper_limit: Option<f64>,
    /// Contribution to the health index.
    pub weight: f64,
    #[serde(default)]
    pub filter: FilterSpec,
    /// Overrides the profile noise for this channel.
    #[serde(default)]
    pub noise_sigma: Option<f64>,
    /// Length of the trailing window whose spectrum is kept, if any.
    #[serde(default)]
    pub spectrum_window: Option<usize>,
}

impl ChannelConfig {
    pub fn teds(&self) -> TedsRecord {
        TedsRecord {
            channel: self.channel.clone(),
            quantity: self.quantity.clone(),
            units: self.units.clone(),
            range_min: self.range_min,
            range_max: self.range_max,
            nominal: self.nominal,
            failure_value: self.failure_value,
            placement: self.placement,
            lower_limit: self.lower_limit,
            upper_limit: self.upper_limit,
        }
    }
}

/// Channel computed from filtered physical channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VirtualChannelConfig {
    pub channel: ChannelId,
    pub expr: String,
    pub quantity: String,
    pub units: String,
    pub range_min: f64,
    pub range_max: f64,
    pub nominal: f64,
    pub failure_value: f64,
    pub placement: Placement,
    pub weight: f64,
}

impl VirtualChannelConfig {
    pub fn teds(&self) -> TedsRecord {
        TedsRecord {
            channel: self.channel.clone(),
            quantity: self.quantity.clone(),
            units: self.units.clone(),
            range_min: self.range_min,
            range_max: self.range_max,
            nominal: self.nominal,
            failure_value: self.failure_value,
            placement: self.placement,
            lower_limit: None,
            upper_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrognosticsConfig {
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_slope_epsilon")]
    pub slope_epsilon: f64,
    /// Health level treated as failure for RUL; defaults to the predicted level.
    #[serde(default)]
    pub failure_level: Option<f64>,
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

fn default_slope_epsilon() -> f64 {
    DEFAULT_SLOPE_EPSILON
}

impl Default for PrognosticsConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            slope_epsilon: DEFAULT_SLOPE_EPSILON,
            failure_level: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosisConfig {
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_k_sigma")]
    pub k_sigma: f64,
    /// Residual scale for the model check, in primary-channel units.
    /// Defaults to the primary channel noise, floored at 1% of its span.
    #[serde(default)]
    pub model_sigma: Option<f64>,
    /// Channel compared against the nominal wear curve; defaults to the first.
    #[serde(default)]
    pub primary_channel: Option<ChannelId>,
    /// Learn a case from every diagnosed episode that ends in an action.
    #[serde(default = "default_true")]
    pub record_cases: bool,
}

fn default_tau() -> f64 {
    0.15
}

fn default_k_sigma() -> f64 {
    3.0
}

fn default_true() -> bool {
    true
}

impl Default for DiagnosisConfig {
    fn default() -> Self {
        Self {
            tau: default_tau(),
            k_sigma: default_k_sigma(),
            model_sigma: None,
            primary_channel: None,
            record_cases: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub kind: AssetKind,
    pub drift: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub shock_rate: f64,
    #[serde(default = "default_shock_size")]
    pub shock_size: f64,
    #[serde(default = "default_failure_threshold")]
    pub failure_threshold: f64,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub prognostics: PrognosticsConfig,
    #[serde(default)]
    pub diagnosis: DiagnosisConfig,
    pub channels: Vec<ChannelConfig>,
    #[serde(default)]
    pub virtual_channels: Vec<VirtualChannelConfig>,
    #[serde(default)]
    pub rules: Vec<Rule>,
    #[serde(default)]
    pub cases: Vec<CaseRecord>,
}

fn default_shock_size() -> f64 {
    0.05
}

fn default_failure_threshold() -> f64 {
    1.0
}

impl ProfileConfig {
    /// A single dimensionless channel reading the degradation directly
    /// (nominal 0, failure 1). Handy for experiments with exact oracles.
    pub fn normalized(kind: AssetKind, drift: f64, noise_sigma: f64) -> Self {
        Self {
            kind,
            drift,
            noise_sigma,
            shock_rate: 0.0,
            shock_size: default_shock_size(),
            failure_threshold: 1.0,
            thresholds: Thresholds::default(),
            prognostics: PrognosticsConfig::default(),
            diagnosis: DiagnosisConfig::default(),
            channels: vec![ChannelConfig {
                channel: ChannelId::new("wear").expect("valid"),
                quantity: "normalized_wear".into(),
                units: "1".into(),
                range_min: -1.0,
                range_max: 2.0,
                nominal: 0.0,
                failure_value: 1.0,
                placement: Placement::OnboardSelf,
                lower_limit: None,
                upper_limit: None,
                weight: 1.0,
                filter: FilterSpec::None,
                noise_sigma: None,
                spectrum_window: None,
            }],
            virtual_channels: Vec::new(),
            rules: Vec::new(),
            cases: Vec::new(),
        }
    }

    pub fn asset_profile(&self) -> AssetProfile {
        AssetProfile {
            kind: self.kind,
            drift: self.drift,
            noise_sigma: self.noise_sigma,
            shock_rate: self.shock_rate,
            shock_size: self.shock_size,
            failure_threshold: self.failure_threshold,
            channels: self.channels.iter().map(ChannelConfig::teds).collect(),
            channel_noise: self
                .channels
                .iter()
                .filter_map(|c| c.noise_sigma.map(|s| (c.channel.clone(), s)))
                .collect(),
        }
    }

    /// TEDS for every feature, physical channels first.
    pub fn feature_teds(&self) -> Vec<TedsRecord> {
        self.channels
            .iter()
            .map(ChannelConfig::teds)
            .chain(self.virtual_channels.iter().map(VirtualChannelConfig::teds))
            .collect()
    }

    pub fn weights(&self) -> BTreeMap<ChannelId, f64> {
        self.channels
            .iter()
            .map(|c| (c.channel.clone(), c.weight))
            .chain(
                self.virtual_channels
                    .iter()
                    .map(|v| (v.channel.clone(), v.weight)),
            )
            .collect()
    }

    pub fn feature_count(&self) -> usize {
        self.channels.len() + self.virtual_channels.len()
    }

    pub fn primary_channel(&self) -> &ChannelConfig {
        self.diagnosis
            .primary_channel
            .as_ref()
            .and_then(|p| self.channels.iter().find(|c| &c.channel == p))
            .unwrap_or(&self.channels[0])
    }

    pub fn wear_model(&self) -> NominalWearModel {
        NominalWearModel::from_teds(&self.primary_channel().teds(), self.drift)
    }

    pub fn model_sigma(&self) -> f64 {
        self.diagnosis.model_sigma.unwrap_or_else(|| {
            let p = self.primary_channel();
            let noise = p.noise_sigma.unwrap_or(self.noise_sigma);
            noise.max(0.01 * (p.failure_value - p.nominal).abs())
        })
    }

    pub fn rul_failure_level(&self) -> f64 {
        self.prognostics
            .failure_level
            .unwrap_or(self.thresholds.predicted_level)
    }

    pub fn case_library(&self) -> Result<CaseLibrary, ScenarioError> {
        CaseLibrary::new(self.cases.clone()).map_err(|e| ScenarioError::Invalid(e.to_string()))
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)] // negations also reject NaN
    pub fn validate(&self, name: &str) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(format!("profile {name}: {m}")));
        if let Err(e) = self.asset_profile().validate() {
            return bad(e.to_string());
        }
        if let Err(e) = self.thresholds.validate() {
            return bad(e.to_string());
        }
        let mut names = BTreeSet::new();
        for teds in self.feature_teds() {
            if let Err(e) = teds.validate() {
                return bad(e.to_string());
            }
            if !names.insert(teds.channel.clone()) {
                return bad(format!("duplicate channel {}", teds.channel));
            }
        }
        let weights = self.weights();
        if weights.values().any(|w| !w.is_finite() || *w < 0.0) {
            return bad("weights must be >= 0".into());
        }
        let total: f64 = weights.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("weights sum to {total}, expected 1"));
        }
        for c in &self.channels {
            if let Err(e) = c.filter.validate() {
                return bad(format!("channel {}: {e}", c.channel));
            }
            if let Some(n) = c.spectrum_window {
                if !(2..=crate::signal::MAX_SPECTRUM_LEN).contains(&n) {
                    return bad(format!("channel {}: spectrum_window {n}", c.channel));
                }
            }
        }
        for v in &self.virtual_channels {
            let expr = match Expr::parse(&v.expr) {
                Ok(e) => e,
                Err(e) => return bad(format!("virtual channel {}: {e}", v.channel)),
            };
            for var in expr.variables() {
                if !self.channels.iter().any(|c| c.channel.as_str() == var) {
                    return bad(format!("virtual channel {}: unknown input {var}", v.channel));
                }
            }
        }
        if self.prognostics.window < 2 {
            return bad("prognostics.window must be >= 2".into());
        }
        if !(self.prognostics.slope_epsilon > 0.0) {
            return bad("prognostics.slope_epsilon must be > 0".into());
        }
        if let Some(level) = self.prognostics.failure_level {
            if !(level > 0.0 && level <= 1.0) {
                return bad("prognostics.failure_level must lie in (0, 1]".into());
            }
        }
        let d = &self.diagnosis;
        if !(d.tau > 0.0 && d.k_sigma > 0.0) {
            return bad("diagnosis.tau and diagnosis.k_sigma must be > 0".into());
        }
        if !(self.model_sigma() > 0.0) {
            return bad("diagnosis.model_sigma must be > 0".into());
        }
        if let Some(p) = &d.primary_channel {
            if !self.channels.iter().any(|c| &c.channel == p) {
                return bad(format!("primary channel {p} is not a physical channel"));
            }
        }
        for rule in &self.rules {
            if rule.clauses.is_empty() {
                return bad(format!("rule {} has no clauses", rule.id));
            }
            for clause in &rule.clauses {
                if !names.contains(&clause.channel) {
                    return bad(format!("rule {}: unknown channel {}", rule.id, clause.channel));
                }
            }
        }
        for case in &self.cases {
            if case.features.len() != self.feature_count() {
                return bad(format!(
                    "case {} has {} features, expected {}",
                    case.id,
                    case.features.len(),
                    self.feature_count()
                ));
            }
        }
        self.case_library()?;
        Ok(())
    }
}

impl Scenario {
    pub fn from_toml_str(src: &str) -> Result<Self, ScenarioError> {
        let sc: Scenario = toml::from_str(src).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_json_str(src: &str) -> Result<Self, ScenarioError> {
        let sc: Scenario = serde_json::from_str(src).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&src)
        } else {
            Self::from_toml_str(&src)
        }
    }

    /// The shipped 12-asset railyard: four wheelsets, four pantographs and
    /// four track sections.
    pub fn railyard_default() -> Self {
        Self::from_toml_str(RAILYARD_DEFAULT).expect("built-in scenario is valid")
    }

    /// One asset on a noiseless normalised channel with pure linear drift.
    pub fn single_drift(drift: f64, horizon_steps: u64, policy: PolicyConfig) -> Self {
        let profile = ProfileConfig::normalized(AssetKind::WheelWear, drift, 0.0);
        Scenario {
            name: "single-drift".into(),
            master_seed: 1,
            horizon_steps,
            policy,
            profiles: BTreeMap::from([("wear".to_string(), profile)]),
            assets: vec![AssetEntry {
                id: AssetId::new("asset-1").expect("valid"),
                profile: "wear".into(),
                initial_h: 0.0,
            }],
        }
    }

    pub fn profile_of(&self, asset: &AssetEntry) -> &ProfileConfig {
        &self.profiles[&asset.profile]
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.horizon_steps == 0 {
            return Err(ScenarioError::Invalid("horizon_steps must be >= 1".into()));
        }
        self.policy.validate().map_err(ScenarioError::Invalid)?;
        let mut kinds = BTreeSet::new();
        for (name, p) in &self.profiles {
            p.validate(name)?;
            kinds.insert(p.kind);
        }
        let mut seen = BTreeSet::new();
        for a in &self.assets {
            if !seen.insert(&a.id) {
                return Err(ScenarioError::Invalid(format!("duplicate asset id {}", a.id)));
            }
            let Some(p) = self.profiles.get(&a.profile) else {
                return Err(ScenarioError::Invalid(format!(
                    "asset {} uses unknown profile {}",
                    a.id, a.profile
                )));
            };
            if !(a.initial_h.is_finite() && a.initial_h >= 0.0 && a.initial_h < p.failure_threshold) {
                return Err(ScenarioError::Invalid(format!(
                    "asset {}: initial_h must lie in [0, failure_threshold)",
                    a.id
                )));
            }
        }
        // case libraries are shared per kind, so profiles of one kind must agree on dimension
        let mut dims: BTreeMap<AssetKind, usize> = BTreeMap::new();
        for p in self.profiles.values() {
            if let Some(d) = dims.insert(p.kind, p.feature_count()) {
                if d != p.feature_count() {
                    return Err(ScenarioError::Invalid(format!(
                        "profiles of kind {} disagree on feature count",
                        p.kind.as_str()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon_steps = horizon;
        self
    }

    pub fn with_policy_kind(mut self, kind: PolicyKind) -> Self {
        self.policy.kind = kind;
        self
    }

    pub fn with_costs(mut self, costs: Costs) -> Self {
        self.policy.costs = costs;
        self
    }
}
