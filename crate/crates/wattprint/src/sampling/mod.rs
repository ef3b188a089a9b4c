//! Pluggable power and network providers polled at a fixed interval to
//! produce [`ResourceTrace`]s.
//!
//! The reference build ships synthetic and replay providers; a platform
//! sensor provider is an extension point behind the same traits, which keeps
//! the whole test suite hardware-independent.

mod replay;
mod synthetic;

pub use replay::{parse_replay_file, ReplayNetworkProvider, ReplayPowerProvider};
pub use synthetic::{
    NullNetworkProvider, SyntheticNetworkProvider, SyntheticPowerProvider, WaveformShape,
    WaveformSpec,
};

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, NetworkCounters, PowerSample, ResourceTrace};

pub const MIN_INTERVAL_MS: u64 = 10;
pub const DEFAULT_INTERVAL_MS: u64 = 100;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("sampling interval {0} ms below minimum {MIN_INTERVAL_MS} ms")]
    IntervalTooSmall(u64),
    #[error("trace too short: {got} power samples collected before stop, need at least 2")]
    TraceTooShort { got: usize },
    #[error("power provider unavailable on channels: {}", .channels.join(", "))]
    ChannelsUnavailable { channels: Vec<String> },
    #[error("network counters decreased at sample index {index}")]
    NonMonotonicCounters { index: usize },
    #[error("provider timestamp did not advance past {t_ms} ms")]
    StalledTimestamp { t_ms: u64 },
    #[error("replay file line {line}: {reason}")]
    ReplayParse { line: usize, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("provider I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Monotonic time source for the sampler. `SystemClock` tracks real time;
/// `VirtualClock` advances instantly on sleep, which makes long sampling
/// windows testable in microseconds.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
    fn sleep_ms(&self, ms: u64);
}

pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        self.origin.elapsed().as_millis() as u64
    }

    fn sleep_ms(&self, ms: u64) {
        std::thread::sleep(Duration::from_millis(ms));
    }
}

pub struct VirtualClock {
    now: AtomicU64,
}

impl VirtualClock {
    pub fn starting_at(t_ms: u64) -> Self {
        VirtualClock {
            now: AtomicU64::new(t_ms),
        }
    }
}

impl Clock for VirtualClock {
    fn now_ms(&self) -> u64 {
        self.now.load(Ordering::SeqCst)
    }

    fn sleep_ms(&self, ms: u64) {
        self.now.fetch_add(ms, Ordering::SeqCst);
    }
}

/// Tells the sampling loop when to stop. Checked before each sample is
/// taken, so a fired stop never admits further samples.
pub trait StopCondition: Send + Sync {
    fn should_stop(&self, now_ms: u64) -> bool;
}

/// Stop once the clock has moved strictly past the deadline. Samples taken
/// exactly at the deadline are still included.
pub struct Deadline(pub u64);

impl StopCondition for Deadline {
    fn should_stop(&self, now_ms: u64) -> bool {
        now_ms > self.0
    }
}

/// Externally triggered stop, deliverable from the scenario orchestrator.
#[derive(Clone, Default)]
pub struct StopFlag(Arc<AtomicBool>);

impl StopFlag {
    pub fn new() -> Self {
        StopFlag(Arc::new(AtomicBool::new(false)))
    }

    pub fn trigger(&self) {
        self.0.store(true, Ordering::SeqCst);
    }
}

impl StopCondition for StopFlag {
    fn should_stop(&self, _now_ms: u64) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// Source of power samples. `poll` returns `Ok(None)` when the source is
/// exhausted (replay reached end of file); timestamps must strictly increase
/// across successive `Some` results.
pub trait PowerProvider: Send {
    fn poll(&mut self, now_ms: u64) -> Result<Option<PowerSample>, SamplingError>;
}

/// Source of cumulative network counters; same exhaustion and timestamp
/// contract as [`PowerProvider`]. Counters must be non-decreasing.
pub trait NetworkProvider: Send {
    fn poll(&mut self, now_ms: u64) -> Result<Option<NetworkCounters>, SamplingError>;
}

/// Poll both providers at a fixed interval until the stop condition fires or
/// both providers are exhausted, then freeze the result into an immutable
/// [`ResourceTrace`].
///
/// The sampler is the sole writer to the in-flight trace; samples are
/// appended in timestamp order.
pub fn sample_run(
    power: &mut dyn PowerProvider,
    network: &mut dyn NetworkProvider,
    clock: &dyn Clock,
    interval_ms: u64,
    stop: &dyn StopCondition,
) -> Result<ResourceTrace, SamplingError> {
    if interval_ms < MIN_INTERVAL_MS {
        return Err(SamplingError::IntervalTooSmall(interval_ms));
    }
    let mut power_samples: Vec<PowerSample> = Vec::new();
    let mut net_samples: Vec<NetworkCounters> = Vec::new();
    let mut power_done = false;
    let mut net_done = false;
    loop {
        let now = clock.now_ms();
        if stop.should_stop(now) {
            break;
        }
        if !power_done {
            match power.poll(now)? {
                Some(s) => {
                    s.validate()?;
                    if let Some(prev) = power_samples.last() {
                        if s.t_ms <= prev.t_ms {
                            return Err(SamplingError::StalledTimestamp { t_ms: prev.t_ms });
                        }
                    }
                    power_samples.push(s);
                }
                None => power_done = true,
            }
        }
        if !net_done {
            match network.poll(now)? {
                Some(c) => {
                    if let Some(prev) = net_samples.last() {
                        if c.t_ms <= prev.t_ms {
                            return Err(SamplingError::StalledTimestamp { t_ms: prev.t_ms });
                        }
                        if c.bytes_in < prev.bytes_in || c.bytes_out < prev.bytes_out {
                            return Err(SamplingError::NonMonotonicCounters {
                                index: net_samples.len(),
                            });
                        }
                    }
                    net_samples.push(c);
                }
                None => net_done = true,
            }
        }
        if power_done && net_done {
            break;
        }
        clock.sleep_ms(interval_ms);
    }
    if power_samples.len() < 2 {
        return Err(SamplingError::TraceTooShort {
            got: power_samples.len(),
        });
    }
    // the trace window is the sampled span, not the clock position after the
    // stop fired
    let start_t = match net_samples.first() {
        Some(c) => power_samples[0].t_ms.min(c.t_ms),
        None => power_samples[0].t_ms,
    };
    let end_t = match net_samples.last() {
        Some(c) => power_samples.last().unwrap().t_ms.max(c.t_ms),
        None => power_samples.last().unwrap().t_ms,
    };
    Ok(ResourceTrace::new(
        power_samples,
        net_samples,
        start_t,
        end_t,
    )?)
}

/// How a run's providers are configured. `parameters` are kind-specific:
/// synthetic takes waveforms or byte rates, replay takes a trace file path,
/// sensor takes platform hints.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PowerProviderSpec {
    Synthetic {
        channels: std::collections::BTreeMap<String, WaveformSpec>,
    },
    Replay {
        path: String,
    },
    Sensor {
        #[serde(default)]
        hints: std::collections::BTreeMap<String, String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetworkProviderSpec {
    Synthetic {
        #[serde(default)]
        bytes_in_per_s: f64,
        #[serde(default)]
        bytes_out_per_s: f64,
    },
    Replay {
        path: String,
    },
    Platform {},
}
