//! Level 1 stand-in: ground-truth degradation of railway assets and the
//! noisy sensors that observe it.
//!
//! Degradation is linear drift plus Bernoulli shocks. Each asset owns two
//! named random streams (`degradation` and `sensor`) seeded from the master
//! seed and the asset id, so the order in which assets are advanced never
//! changes any single trajectory, and the sampling rate never changes the
//! ground truth.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{AssetId, ChannelId, MaintenanceAction, Measurement, Step, TedsRecord};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("asset {0} has failed; repair it before advancing")]
    AlreadyFailed(AssetId),
    #[error("asset {asset} has no channel {channel}")]
    UnknownChannel { asset: AssetId, channel: ChannelId },
    #[error("invalid profile: {0}")]
    Profile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetKind {
    WheelWear,
    PantographStrip,
    TrackGeometry,
}

impl AssetKind {
    pub const ALL: [AssetKind; 3] = [
        AssetKind::WheelWear,
        AssetKind::PantographStrip,
        AssetKind::TrackGeometry,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AssetKind::WheelWear => "wheel_wear",
            AssetKind::PantographStrip => "pantograph_strip",
            AssetKind::TrackGeometry => "track_geometry",
        }
    }
}

/// Degradation and sensing parameters for one kind of asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetProfile {
    pub kind: AssetKind,
    /// Degradation added every step.
    pub drift: f64,
    /// Default standard deviation of sensor noise, in channel units.
    pub noise_sigma: f64,
    /// Per-step probability of a degradation jump.
    pub shock_rate: f64,
    pub shock_size: f64,
    /// Ground-truth degradation at functional failure.
    pub failure_threshold: f64,
    pub channels: Vec<TedsRecord>,
    /// Per-channel noise overrides.
    #[serde(default)]
    pub channel_noise: BTreeMap<ChannelId, f64>,
}

impl AssetProfile {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Profile(format!("{}: {m}", self.kind.as_str())));
        if !(self.drift.is_finite() && self.drift > 0.0) {
            return bad("drift must be > 0");
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.shock_rate) {
            return bad("shock_rate must lie in [0, 1]");
        }
        if !(self.shock_size.is_finite() && self.shock_size > 0.0) {
            return bad("shock_size must be > 0");
        }
        if !(self.failure_threshold.is_finite() && self.failure_threshold > 0.0) {
            return bad("failure_threshold must be > 0");
        }
        if self.channels.is_empty() {
            return bad("at least one channel is required");
        }
        for teds in &self.channels {
            teds.validate().map_err(|e| SimError::Profile(e.to_string()))?;
        }
        for (ch, sigma) in &self.channel_noise {
            if self.teds(ch).is_none() {
                return bad(&format!("noise override for unknown channel {ch}"));
            }
            if !(sigma.is_finite() && *sigma >= 0.0) {
                return bad("channel noise must be >= 0");
            }
        }
        Ok(())
    }

    pub fn teds(&self, channel: &ChannelId) -> Option<&TedsRecord> {
        self.channels.iter().find(|t| &t.channel == channel)
    }

    pub fn noise_for(&self, channel: &ChannelId) -> f64 {
        self.channel_noise
            .get(channel)
            .copied()
            .unwrap_or(self.noise_sigma)
    }
}

/// Derives a 256-bit stream seed from the master seed, asset and stream name.
pub fn stream_seed(master_seed: u64, asset: &AssetId, stream: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(asset.as_str().as_bytes());
    hasher.update([0u8]);
    hasher.update(stream.as_bytes());
    hasher.finalize().into()
}

/// Ground truth for one asset. Only the simulator reads `true_h`.
#[derive(Debug, Clone)]
pub struct AssetState {
    id: AssetId,
    profile: AssetProfile,
    true_h: f64,
    failed: bool,
    age_steps: Step,
    degradation_rng: ChaCha8Rng,
    sensor_rng: ChaCha8Rng,
}

impl AssetState {
    pub fn new(id: AssetId, profile: AssetProfile, master_seed: u64) -> Self {
        let degradation_rng = ChaCha8Rng::from_seed(stream_seed(master_seed, &id, "degradation"));
        let sensor_rng = ChaCha8Rng::from_seed(stream_seed(master_seed, &id, "sensor"));
        Self {
            id,
            profile,
            true_h: 0.0,
            failed: false,
            age_steps: 0,
            degradation_rng,
            sensor_rng,
        }
    }

    /// Starts the asset part-way through its life.
    pub fn with_true_h(mut self, h: f64) -> Self {
        self.true_h = h.max(0.0);
        self.failed = self.true_h >= self.profile.failure_threshold;
        self
    }

    pub fn id(&self) -> &AssetId {
        &self.id
    }

    pub fn profile(&self) -> &AssetProfile {
        &self.profile
    }

    pub fn true_h(&self) -> f64 {
        self.true_h
    }

    pub fn failed(&self) -> bool {
        self.failed
    }

    /// Steps since the component was last replaced.
    pub fn age_steps(&self) -> Step {
        self.age_steps
    }

    /// Advances one step. Returns whether a shock occurred.
    pub fn advance(&mut self) -> Result<bool, SimError> {
        if self.failed {
            return Err(SimError::AlreadyFailed(self.id.clone()));
        }
        // One draw per step regardless of shock_rate keeps the stream aligned.
        let u: f64 = self.degradation_rng.random();
        let shock = u < self.profile.shock_rate;
        self.true_h += self.profile.drift;
        if shock {
            self.true_h += self.profile.shock_size;
        }
        self.age_steps += 1;
        self.failed = self.true_h >= self.profile.failure_threshold;
        Ok(shock)
    }

    /// Reads one channel: linear map of the true degradation plus noise,
    /// clamped to the physical range.
    pub fn sample(&mut self, channel: &ChannelId, t: Step) -> Result<Measurement, SimError> {
        let teds = self
            .profile
            .teds(channel)
            .ok_or_else(|| SimError::UnknownChannel {
                asset: self.id.clone(),
                channel: channel.clone(),
            })?;
        let sigma = self.profile.noise_for(channel);
        let z: f64 = self.sensor_rng.sample(StandardNormal);
        let value = (teds.reading_at(self.true_h) + sigma * z).clamp(teds.range_min, teds.range_max);
        Ok(Measurement {
            asset: self.id.clone(),
            channel: channel.clone(),
            t,
            value,
        })
    }

    pub fn apply(&mut self, action: &MaintenanceAction) {
        match *action {
            MaintenanceAction::Replace => {
                self.true_h = 0.0;
                self.age_steps = 0;
            }
            MaintenanceAction::Restore { delta } => {
                self.true_h = (self.true_h - delta.max(0.0)).max(0.0);
            }
            MaintenanceAction::Inspect => {}
        }
        self.failed = self.true_h >= self.profile.failure_threshold;
    }
}

/// Functional form of [`AssetState::advance`].
pub fn advance_asset(mut state: AssetState) -> Result<(AssetState, bool), SimError> {
    let shock = state.advance()?;
    Ok((state, shock))
}

/// Functional form of [`AssetState::sample`]; `teds` selects the channel.
pub fn sample_channel(state: &mut AssetState, teds: &TedsRecord, t: Step) -> Result<Measurement, SimError> {
    state.sample(&teds.channel, t)
}

/// Functional form of [`AssetState::apply`].
pub fn apply_action(mut state: AssetState, action: &MaintenanceAction) -> AssetState {
    state.apply(action);
    state
}
