//! Level 2: filtering, frequency spectra and virtual sensor channels.

pub mod expr;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ChannelId, Step};
pub use expr::{Expr, ExprError};

pub const MAX_SPECTRUM_LEN: usize = 65_536;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("inputs are not aligned: {0}")]
    Alignment(String),
    #[error("division by zero at sample {0}")]
    DivisionByZero(usize),
    #[error("expression error: {0}")]
    Expr(#[from] ExprError),
}

/// Evenly spaced samples of one channel. Sample `i` is at `t0 + i * dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub channel: ChannelId,
    pub t0: Step,
    pub dt: Step,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(channel: ChannelId, t0: Step, values: Vec<f64>) -> Self {
        Self {
            channel,
            t0,
            dt: 1,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Time of the last sample.
    pub fn t_end(&self) -> Step {
        self.t0 + self.dt * (self.values.len().saturating_sub(1) as Step)
    }

    fn check(&self) -> Result<(), SignalError> {
        if self.values.is_empty() {
            return Err(SignalError::Argument("series is empty".into()));
        }
        if self.dt == 0 {
            return Err(SignalError::Argument("dt must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumBin {
    pub k: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub channel: ChannelId,
    pub n: usize,
    pub bins: Vec<SpectrumBin>,
}

impl Spectrum {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.magnitude).collect()
    }
}

/// Trailing mean over `window` samples. Output sample `i` is the mean of
/// input samples `i ..= i + window - 1` and carries the time of the last one.
pub fn moving_average(s: &Series, window: usize) -> Result<Series, SignalError> {
    s.check()?;
    if window == 0 || window > s.len() {
        return Err(SignalError::Argument(format!(
            "window {window} outside 1..={}",
            s.len()
        )));
    }
    let w = window as f64;
    let values = s
        .values
        .windows(window)
        .map(|win| win.iter().sum::<f64>() / w)
        .collect();
    Ok(Series {
        channel: s.channel.clone(),
        t0: s.t0 + (window as Step - 1) * s.dt,
        dt: s.dt,
        values,
    })
}

/// Exponentially weighted moving average seeded with the first sample.
pub fn ewma(s: &Series, alpha: f64) -> Result<Series, SignalError> {
    s.check()?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(SignalError::Argument(format!("alpha {alpha} outside (0, 1]")));
    }
    let mut values = Vec::with_capacity(s.len());
    let mut y = s.values[0];
    values.push(y);
    for &x in &s.values[1..] {
        y = alpha * x + (1.0 - alpha) * y;
        values.push(y);
    }
    Ok(Series { values, ..s.clone() })
}

/// Magnitudes of the unnormalised DFT of the whole series.
pub fn spectrum(window: &Series) -> Result<Spectrum, SignalError> {
    let n = window.len();
    if !(2..=MAX_SPECTRUM_LEN).contains(&n) {
        return Err(SignalError::Argument(format!(
            "spectrum length {n} outside 2..={MAX_SPECTRUM_LEN}"
        )));
    }
    let mut buf: Vec<Complex<f64>> = window.values.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Ok(Spectrum {
        channel: window.channel.clone(),
        n,
        bins: buf
            .iter()
            .enumerate()
            .map(|(k, c)| SpectrumBin {
                k,
                magnitude: c.norm(),
            })
            .collect(),
    })
}

/// Evaluates `expr` pointwise over aligned input series, looking inputs up
/// by channel name.
pub fn virtual_channel(name: ChannelId, inputs: &[&Series], expr: &Expr) -> Result<Series, SignalError> {
    let first = inputs
        .first()
        .ok_or_else(|| SignalError::Argument("no inputs".into()))?;
    for s in inputs {
        s.check()?;
        if s.t0 != first.t0 || s.dt != first.dt || s.len() != first.len() {
            return Err(SignalError::Alignment(format!(
                "{} (t0={}, dt={}, len={}) vs {} (t0={}, dt={}, len={})",
                s.channel,
                s.t0,
                s.dt,
                s.len(),
                first.channel,
                first.t0,
                first.dt,
                first.len()
            )));
        }
    }
    for var in expr.variables() {
        if !inputs.iter().any(|s| s.channel.as_str() == var) {
            return Err(ExprError::UnknownIdentifier(var.to_string()).into());
        }
    }
    let mut values = Vec::with_capacity(first.len());
    for i in 0..first.len() {
        let lookup = |v: &str| {
            inputs
                .iter()
                .find(|s| s.channel.as_str() == v)
                .map(|s| s.values[i])
        };
        let y = expr.eval(&lookup).map_err(|e| match e {
            ExprError::DivisionByZero => SignalError::DivisionByZero(i),
            other => other.into(),
        })?;
        values.push(y);
    }
    Ok(Series {
        channel: name,
        t0: first.t0,
        dt: first.dt,
        values,
    })
}

/// Parses `src` and applies [`virtual_channel`].
pub fn virtual_channel_str(name: ChannelId, inputs: &[&Series], src: &str) -> Result<Series, SignalError> {
    virtual_channel(name, inputs, &Expr::parse(src)?)
}

/// Per-channel smoothing applied before features are extracted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterSpec {
    #[default]
    None,
    MovingAverage {
        window: usize,
    },
    Ewma {
        alpha: f64,
    },
}

impl FilterSpec {
    pub fn validate(&self) -> Result<(), SignalError> {
        match *self {
            FilterSpec::None => Ok(()),
            FilterSpec::MovingAverage { window } if window >= 1 => Ok(()),
            FilterSpec::MovingAverage { window } => {
                Err(SignalError::Argument(format!("moving average window {window}")))
            }
            FilterSpec::Ewma { alpha } if alpha > 0.0 && alpha <= 1.0 => Ok(()),
            FilterSpec::Ewma { alpha } => Err(SignalError::Argument(format!("ewma alpha {alpha}"))),
        }
    }

    /// Filters a history. A moving average shorter than its window averages
    /// whatever is available.
    pub fn apply(&self, s: &Series) -> Result<Series, SignalError> {
        match *self {
            FilterSpec::None => {
                s.check()?;
                Ok(s.clone())
            }
            FilterSpec::MovingAverage { window } => moving_average(s, window.min(s.len()).max(1)),
            FilterSpec::Ewma { alpha } => ewma(s, alpha),
        }
    }
}
