//! Domain types, physical-unit conversions, and factor-file validation
//! shared by every other module.
//!
//! All types here are immutable values after construction and can be shared
//! freely across threads.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CHANNEL_CPU: &str = "cpu";
pub const CHANNEL_MEMORY: &str = "memory";
pub const CHANNEL_MACHINE: &str = "machine";

pub const JOULES_PER_KWH: f64 = 3.6e6;
/// Decimal SI gigabyte. Life-cycle studies report per-GB factors in decimal
/// units, so 1 GB = 10^9 bytes throughout.
pub const BYTES_PER_GB: f64 = 1e9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid quantity {name}: {value} (must be finite and non-negative)")]
    InvalidQuantity { name: &'static str, value: f64 },
    #[error("factor file field `{field}`: {reason}")]
    FactorValidation { field: String, reason: String },
    #[error("trace invariant violated: {0}")]
    Trace(String),
}

/// Convert joules to kilowatt-hours.
pub fn joules_to_kwh(e: f64) -> Result<f64, ModelError> {
    if !e.is_finite() || e < 0.0 {
        return Err(ModelError::InvalidQuantity {
            name: "energy_j",
            value: e,
        });
    }
    Ok(e / JOULES_PER_KWH)
}

/// Convert a byte count to decimal gigabytes.
pub fn bytes_to_gb(b: f64) -> Result<f64, ModelError> {
    if !b.is_finite() || b < 0.0 {
        return Err(ModelError::InvalidQuantity {
            name: "bytes",
            value: b,
        });
    }
    Ok(b / BYTES_PER_GB)
}

/// Inverse of [`bytes_to_gb`].
pub fn gb_to_bytes(gb: f64) -> Result<f64, ModelError> {
    if !gb.is_finite() || gb < 0.0 {
        return Err(ModelError::InvalidQuantity {
            name: "gb",
            value: gb,
        });
    }
    Ok(gb * BYTES_PER_GB)
}

/// A named, scripted user scenario (e.g., Login) with ordered steps and a
/// standardized duration. Composite units reference basic units instead of
/// being executed directly.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FunctionalUnit {
    pub name: String,
    pub steps: Vec<String>,
    pub target_duration_s: f64,
    #[serde(default)]
    pub composite_of: Vec<String>,
}

impl FunctionalUnit {
    pub fn is_composite(&self) -> bool {
        !self.composite_of.is_empty()
    }
}

/// A measurement condition under which a campaign executes.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Configuration {
    pub label: String,
    pub ad_blocker: bool,
    pub cookie_blocking: bool,
    pub provider: String,
}

/// One instantaneous power reading. Channel names are an open set; `cpu`,
/// `memory`, and `machine` are the reserved well-known channels.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PowerSample {
    pub t_ms: u64,
    pub channels: BTreeMap<String, f64>,
}

impl PowerSample {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, w) in &self.channels {
            if !w.is_finite() || *w < 0.0 {
                return Err(ModelError::Trace(format!(
                    "power sample at t={} ms has invalid value {} on channel {}",
                    self.t_ms, w, name
                )));
            }
        }
        Ok(())
    }
}

/// Cumulative network byte counters at one instant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct NetworkCounters {
    pub t_ms: u64,
    pub bytes_in: u64,
    pub bytes_out: u64,
}

/// Timestamped power samples plus cumulative network counters for one run.
///
/// Timestamps are monotonic milliseconds from an arbitrary origin; wall-clock
/// time is recorded once per run as metadata only.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResourceTrace {
    pub power: Vec<PowerSample>,
    pub network: Vec<NetworkCounters>,
    pub start_t_ms: u64,
    pub end_t_ms: u64,
}

impl ResourceTrace {
    pub fn new(
        power: Vec<PowerSample>,
        network: Vec<NetworkCounters>,
        start_t_ms: u64,
        end_t_ms: u64,
    ) -> Result<Self, ModelError> {
        let trace = ResourceTrace {
            power,
            network,
            start_t_ms,
            end_t_ms,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.power.len() < 2 {
            return Err(ModelError::Trace(format!(
                "trace too short: {} power samples, need at least 2",
                self.power.len()
            )));
        }
        for s in &self.power {
            s.validate()?;
        }
        for w in self.power.windows(2) {
            if w[1].t_ms <= w[0].t_ms {
                return Err(ModelError::Trace(format!(
                    "power timestamps not strictly increasing at t={} ms",
                    w[1].t_ms
                )));
            }
        }
        for w in self.network.windows(2) {
            if w[1].t_ms <= w[0].t_ms {
                return Err(ModelError::Trace(format!(
                    "network timestamps not strictly increasing at t={} ms",
                    w[1].t_ms
                )));
            }
            if w[1].bytes_in < w[0].bytes_in || w[1].bytes_out < w[0].bytes_out {
                return Err(ModelError::Trace(format!(
                    "network counters decreased at t={} ms",
                    w[1].t_ms
                )));
            }
        }
        if let Some(first) = self.power.first() {
            if first.t_ms < self.start_t_ms {
                return Err(ModelError::Trace(
                    "first power sample precedes start_t".into(),
                ));
            }
        }
        if let Some(last) = self.power.last() {
            if last.t_ms > self.end_t_ms {
                return Err(ModelError::Trace("last power sample exceeds end_t".into()));
            }
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        (self.end_t_ms - self.start_t_ms) as f64 / 1000.0
    }
}

/// Grid intensity plus per-GB use-phase and embodied/EoL factors.
///
/// Factors are mandatory user input with provenance; there are no built-in
/// constants. A factor of exactly 0 is legal.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EmissionFactors {
    pub grid_intensity_kgco2e_per_kwh: f64,
    pub network_use_kgco2e_per_gb: f64,
    pub server_use_kgco2e_per_gb: f64,
    pub network_embodied_kgco2e_per_gb: f64,
    pub server_embodied_kgco2e_per_gb: f64,
    pub source_label: String,
}

/// Factor-file content as parsed, before validation. Every field is optional
/// at this stage so that absence can be reported as a named validation error
/// rather than a generic parse failure.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct RawFactors {
    pub grid_intensity_kgco2e_per_kwh: Option<f64>,
    pub network_use_kgco2e_per_gb: Option<f64>,
    pub server_use_kgco2e_per_gb: Option<f64>,
    pub network_embodied_kgco2e_per_gb: Option<f64>,
    pub server_embodied_kgco2e_per_gb: Option<f64>,
    pub source_label: Option<String>,
}

fn require_factor(value: Option<f64>, field: &str) -> Result<f64, ModelError> {
    let v = value.ok_or_else(|| ModelError::FactorValidation {
        field: field.to_string(),
        reason: "missing".into(),
    })?;
    if !v.is_finite() || v < 0.0 {
        return Err(ModelError::FactorValidation {
            field: field.to_string(),
            reason: format!("value {v} must be finite and non-negative"),
        });
    }
    Ok(v)
}

/// Validate parsed factor-file content into [`EmissionFactors`].
pub fn validate_factors(raw: &RawFactors) -> Result<EmissionFactors, ModelError> {
    let grid = require_factor(
        raw.grid_intensity_kgco2e_per_kwh,
        "grid_intensity_kgco2e_per_kwh",
    )?;
    let net_use = require_factor(raw.network_use_kgco2e_per_gb, "network_use_kgco2e_per_gb")?;
    let srv_use = require_factor(raw.server_use_kgco2e_per_gb, "server_use_kgco2e_per_gb")?;
    let net_emb = require_factor(
        raw.network_embodied_kgco2e_per_gb,
        "network_embodied_kgco2e_per_gb",
    )?;
    let srv_emb = require_factor(
        raw.server_embodied_kgco2e_per_gb,
        "server_embodied_kgco2e_per_gb",
    )?;
    let source_label = match &raw.source_label {
        Some(s) if !s.trim().is_empty() => s.clone(),
        Some(_) => {
            return Err(ModelError::FactorValidation {
                field: "source_label".into(),
                reason: "must be non-empty (factors must be attributable)".into(),
            })
        }
        None => {
            return Err(ModelError::FactorValidation {
                field: "source_label".into(),
                reason: "missing".into(),
            })
        }
    };
    Ok(EmissionFactors {
        grid_intensity_kgco2e_per_kwh: grid,
        network_use_kgco2e_per_gb: net_use,
        server_use_kgco2e_per_gb: srv_use,
        network_embodied_kgco2e_per_gb: net_emb,
        server_embodied_kgco2e_per_gb: srv_emb,
        source_label,
    })
}

/// User-device embodied-emission amortization parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MachineProfile {
    pub embodied_total_kgco2e: f64,
    pub lifetime_s: f64,
    pub usage_share: f64,
}

impl MachineProfile {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.embodied_total_kgco2e.is_finite() || self.embodied_total_kgco2e < 0.0 {
            return Err(ModelError::InvalidQuantity {
                name: "embodied_total_kgco2e",
                value: self.embodied_total_kgco2e,
            });
        }
        if !self.lifetime_s.is_finite() || self.lifetime_s <= 0.0 {
            return Err(ModelError::InvalidQuantity {
                name: "lifetime_s",
                value: self.lifetime_s,
            });
        }
        if !self.usage_share.is_finite() || !(0.0..=1.0).contains(&self.usage_share) {
            return Err(ModelError::InvalidQuantity {
                name: "usage_share",
                value: self.usage_share,
            });
        }
        Ok(())
    }
}

/// Which source supplied the per-run byte totals, in precedence order:
/// driver-reported counters, replay file, platform counters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum NetworkSource {
    Driver,
    Replay,
    Synthetic,
    Platform,
}

/// Measured results for one execution of one functional unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub unit: String,
    pub configuration: String,
    pub trace: ResourceTrace,
    pub energy_j: BTreeMap<String, f64>,
    /// Channels that were absent from part of the trace; their energy covers
    /// only the sub-intervals where the channel was present.
    pub partial_channels: Vec<String>,
    pub bytes_total: u64,
    pub run_index: u32,
    pub network_source: NetworkSource,
}

/// A run that failed during a keep-going campaign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunFailure {
    pub unit: String,
    pub run_index: u32,
    pub message: String,
}

/// A set of repeated executions of every basic unit under one configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignRecord {
    pub configuration: Configuration,
    /// Runs grouped by unit name, in execution order within each group.
    pub runs: BTreeMap<String, Vec<RunRecord>>,
    pub n_runs_per_unit: u32,
    pub complete: bool,
    pub failures: Vec<RunFailure>,
}
