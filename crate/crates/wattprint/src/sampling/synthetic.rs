//! Synthetic providers backed by closed-form waveforms. These are the test
//! oracle source: the integral of each waveform is known analytically.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{NetworkCounters, PowerSample};

use super::{NetworkProvider, PowerProvider, SamplingError};

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum WaveformShape {
    Constant,
    Ramp,
    Step,
}

/// One channel's power over time.
///
/// `period_s` is the ramp duration for `Ramp` (the waveform holds
/// `amplitude_end_w` afterwards) and the full cycle length for `Step`
/// (start amplitude for the first half-cycle, end amplitude for the second).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct WaveformSpec {
    pub shape: WaveformShape,
    pub amplitude_start_w: f64,
    #[serde(default)]
    pub amplitude_end_w: f64,
    #[serde(default = "default_period")]
    pub period_s: f64,
}

fn default_period() -> f64 {
    1.0
}

impl WaveformSpec {
    pub fn validate(&self) -> Result<(), SamplingError> {
        let bad = |v: f64| !v.is_finite() || v < 0.0;
        if bad(self.amplitude_start_w) || bad(self.amplitude_end_w) {
            return Err(SamplingError::ChannelsUnavailable {
                channels: vec!["<negative waveform amplitude>".into()],
            });
        }
        if matches!(self.shape, WaveformShape::Step | WaveformShape::Ramp) && self.period_s <= 0.0
        {
            return Err(SamplingError::ChannelsUnavailable {
                channels: vec!["<non-positive waveform period>".into()],
            });
        }
        Ok(())
    }

    pub fn value_at(&self, t_s: f64) -> f64 {
        match self.shape {
            WaveformShape::Constant => self.amplitude_start_w,
            WaveformShape::Ramp => {
                let frac = (t_s / self.period_s).clamp(0.0, 1.0);
                self.amplitude_start_w + (self.amplitude_end_w - self.amplitude_start_w) * frac
            }
            WaveformShape::Step => {
                let phase = (t_s / self.period_s).fract();
                if phase < 0.5 {
                    self.amplitude_start_w
                } else {
                    self.amplitude_end_w
                }
            }
        }
    }
}

/// Evaluates a waveform per channel at each poll. Waveform time is measured
/// from `origin_ms`, so a provider can be re-anchored to any run window.
pub struct SyntheticPowerProvider {
    channels: BTreeMap<String, WaveformSpec>,
    origin_ms: u64,
}

impl SyntheticPowerProvider {
    pub fn new(channels: BTreeMap<String, WaveformSpec>, origin_ms: u64) -> Self {
        SyntheticPowerProvider {
            channels,
            origin_ms,
        }
    }
}

impl PowerProvider for SyntheticPowerProvider {
    fn poll(&mut self, now_ms: u64) -> Result<Option<PowerSample>, SamplingError> {
        let t_s = now_ms.saturating_sub(self.origin_ms) as f64 / 1000.0;
        let channels = self
            .channels
            .iter()
            .map(|(name, wf)| (name.clone(), wf.value_at(t_s)))
            .collect();
        Ok(Some(PowerSample {
            t_ms: now_ms,
            channels,
        }))
    }
}

/// Constant-rate cumulative byte counters.
pub struct SyntheticNetworkProvider {
    bytes_in_per_s: f64,
    bytes_out_per_s: f64,
    origin_ms: u64,
}

impl SyntheticNetworkProvider {
    pub fn new(bytes_in_per_s: f64, bytes_out_per_s: f64, origin_ms: u64) -> Self {
        SyntheticNetworkProvider {
            bytes_in_per_s,
            bytes_out_per_s,
            origin_ms,
        }
    }
}

impl NetworkProvider for SyntheticNetworkProvider {
    fn poll(&mut self, now_ms: u64) -> Result<Option<NetworkCounters>, SamplingError> {
        let t_s = now_ms.saturating_sub(self.origin_ms) as f64 / 1000.0;
        Ok(Some(NetworkCounters {
            t_ms: now_ms,
            bytes_in: (self.bytes_in_per_s * t_s) as u64,
            bytes_out: (self.bytes_out_per_s * t_s) as u64,
        }))
    }
}

/// Network provider that reports nothing, for runs where byte totals come
/// from the driver.
pub struct NullNetworkProvider;

impl NetworkProvider for NullNetworkProvider {
    fn poll(&mut self, _now_ms: u64) -> Result<Option<NetworkCounters>, SamplingError> {
        Ok(None)
    }
}
