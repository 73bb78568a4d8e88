//! Level 5: linear degradation trend and remaining useful life.
//!
//! The confidence band offsets the current health by two residual standard
//! deviations and intersects the shifted lines with the failure level. It is
//! a heuristic spread, not a statistical prediction interval.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AssetId, Step};

pub const DEFAULT_WINDOW: usize = 30;
pub const DEFAULT_SLOPE_EPSILON: f64 = 1e-6;
/// Width of the band in residual standard deviations.
pub const BAND_SIGMAS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrognosticsError {
    #[error("need at least 2 distinct time points, got {0}")]
    InsufficientData(usize),
    #[error("window must be >= 2")]
    Window,
    #[error("non-finite health value in history")]
    NonFinite,
    #[error("health {h_now} already beyond failure level {h_fail}")]
    AlreadyFailed { h_now: f64, h_fail: f64 },
}

/// Least-squares line `h(t) = intercept + slope * t` over a trailing window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendModel {
    pub slope: f64,
    pub intercept: f64,
    pub residual_sigma: f64,
    pub window_len: usize,
    pub t_ref: Step,
}

impl TrendModel {
    pub fn at(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }

    /// Fitted health at the last point of the window.
    pub fn fitted_now(&self) -> f64 {
        self.at(self.t_ref as f64)
    }
}

pub fn fit_trend(history: &[(Step, f64)], window: usize) -> Result<TrendModel, PrognosticsError> {
    if window < 2 {
        return Err(PrognosticsError::Window);
    }
    let pts = &history[history.len().saturating_sub(window)..];
    if pts.iter().any(|(_, h)| !h.is_finite()) {
        return Err(PrognosticsError::NonFinite);
    }
    let mut distinct: Vec<Step> = pts.iter().map(|(t, _)| *t).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(PrognosticsError::InsufficientData(distinct.len()));
    }
    let n = pts.len() as f64;
    let t_mean = pts.iter().map(|(t, _)| *t as f64).sum::<f64>() / n;
    let h_mean = pts.iter().map(|(_, h)| h).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(t, h) in pts {
        let dt = t as f64 - t_mean;
        sxx += dt * dt;
        sxy += dt * (h - h_mean);
    }
    let slope = sxy / sxx;
    let intercept = h_mean - slope * t_mean;
    let residual_sigma = if pts.len() > 2 {
        let ss: f64 = pts
            .iter()
            .map(|&(t, h)| {
                let r = h - (intercept + slope * t as f64);
                r * r
            })
            .sum();
        (ss / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(TrendModel {
        slope,
        intercept,
        residual_sigma,
        window_len: pts.len(),
        t_ref: pts.iter().map(|(t, _)| *t).max().expect("non-empty"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulBand {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulEstimate {
    pub asset: AssetId,
    pub t: Step,
    pub h_now: f64,
    /// Steps until the failure level; absent when there is no upward trend.
    pub rul_steps: Option<f64>,
    pub band: Option<RulBand>,
    pub basis: TrendModel,
}

impl RulEstimate {
    /// Projected step at which the failure level is reached.
    pub fn failure_step(&self) -> Option<f64> {
        self.rul_steps.map(|r| self.t as f64 + r)
    }

    /// Lower end of the band, or the point estimate when there is no band.
    pub fn lower(&self) -> Option<f64> {
        self.band.map(|b| b.lower).or(self.rul_steps)
    }

    pub fn upper(&self) -> Option<f64> {
        self.band.map(|b| b.upper).or(self.rul_steps)
    }
}

pub fn estimate_rul(
    asset: AssetId,
    trend: &TrendModel,
    h_now: f64,
    h_fail: f64,
    slope_epsilon: f64,
) -> Result<RulEstimate, PrognosticsError> {
    if h_now > h_fail {
        return Err(PrognosticsError::AlreadyFailed { h_now, h_fail });
    }
    let (rul_steps, band) = if trend.slope > slope_epsilon {
        let rul = (h_fail - h_now) / trend.slope;
        let band = (trend.residual_sigma > 0.0).then(|| {
            let spread = BAND_SIGMAS * trend.residual_sigma;
            RulBand {
                lower: ((h_fail - (h_now + spread)) / trend.slope).max(0.0),
                upper: (h_fail - (h_now - spread)) / trend.slope,
            }
        });
        (Some(rul), band)
    } else {
        (None, None)
    };
    Ok(RulEstimate {
        asset,
        t: trend.t_ref,
        h_now,
        rul_steps,
        band,
        basis: *trend,
    })
}

/// Projects the trend `horizon` steps past its last point, clamped to `[0, 1]`.
pub fn project_health(trend: &TrendModel, horizon: u64) -> Vec<(Step, f64)> {
    (1..=horizon)
        .map(|k| {
            let t = trend.t_ref + k;
            (t, trend.at(t as f64).clamp(0.0, 1.0))
        })
        .collect()
}
