//! Pure computations over recorded traces: energy integration, idle-baseline
//! adjustment, run statistics, composite-unit estimation, campaign
//! comparison, and global extrapolation.
//!
//! Everything here operates on immutable records and is safe to evaluate
//! concurrently.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emissions::EmissionBreakdown;
use crate::model::{ModelError, ResourceTrace, RunRecord, CHANNEL_MACHINE};

pub const DAYS_PER_YEAR: f64 = 365.0;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("trace too short: {got} power samples, need at least 2")]
    TraceTooShort { got: usize },
    #[error("cannot aggregate: {0}")]
    Aggregation(String),
    #[error("composite `{composite}` references unit `{member}` which has no stats")]
    MissingCompositeMember { composite: String, member: String },
    #[error("composite `{0}` has an empty member list")]
    EmptyComposite(String),
    #[error("idle-baseline adjustment unavailable: {0}")]
    AdjustmentUnavailable(String),
    #[error("campaigns share no unit names")]
    NoSharedUnits,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Per-channel energy from trapezoidal integration of a trace. Channels in
/// `partial` were missing from some samples; their energy covers only the
/// sub-intervals where both interval endpoints carried the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyIntegral {
    pub joules: BTreeMap<String, f64>,
    pub partial: BTreeSet<String>,
}

/// Trapezoidal rule per channel over the trace window. Exact for
/// piecewise-linear power sampled at breakpoints.
pub fn integrate_energy(trace: &ResourceTrace) -> Result<EnergyIntegral, AnalysisError> {
    if trace.power.len() < 2 {
        return Err(AnalysisError::TraceTooShort {
            got: trace.power.len(),
        });
    }
    let mut channels: BTreeSet<&str> = BTreeSet::new();
    for s in &trace.power {
        channels.extend(s.channels.keys().map(String::as_str));
    }
    let mut joules = BTreeMap::new();
    let mut partial = BTreeSet::new();
    for ch in channels {
        let mut total = 0.0;
        let mut missing_anywhere = false;
        for w in trace.power.windows(2) {
            match (w[0].channels.get(ch), w[1].channels.get(ch)) {
                (Some(p0), Some(p1)) => {
                    let dt_s = (w[1].t_ms - w[0].t_ms) as f64 / 1000.0;
                    total += 0.5 * (p0 + p1) * dt_s;
                }
                _ => missing_anywhere = true,
            }
        }
        joules.insert(ch.to_string(), total);
        if missing_anywhere {
            partial.insert(ch.to_string());
        }
    }
    Ok(EnergyIntegral { joules, partial })
}

/// Mean / sample standard deviation / count for one measured quantity.
/// `sample_std` is `None` when n = 1 (dispersion undefined, never reported
/// as zero).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct StatSummary {
    pub mean: f64,
    pub sample_std: Option<f64>,
    pub n: u32,
}

impl StatSummary {
    /// Direct mean and n-1 standard deviation over the values.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sample_std = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            Some((ss / (n - 1) as f64).sqrt())
        } else {
            None
        };
        StatSummary {
            mean,
            sample_std,
            n: n as u32,
        }
    }
}

/// Per-unit statistics over the repeated runs of a campaign.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct UnitStats {
    pub unit: String,
    pub per_channel_energy_j: BTreeMap<String, StatSummary>,
    pub bytes: StatSummary,
    pub duration_s: StatSummary,
    /// Channels flagged partial in at least one run.
    pub partial_channels: BTreeSet<String>,
}

/// Mean and sample standard deviation (n-1 denominator) per channel, bytes,
/// and duration over the runs of one unit.
pub fn aggregate_runs(records: &[RunRecord]) -> Result<UnitStats, AnalysisError> {
    let first = records
        .first()
        .ok_or_else(|| AnalysisError::Aggregation("no runs supplied".into()))?;
    for r in records {
        if r.unit != first.unit {
            return Err(AnalysisError::Aggregation(format!(
                "mixed units `{}` and `{}`",
                first.unit, r.unit
            )));
        }
        if r.configuration != first.configuration {
            return Err(AnalysisError::Aggregation(format!(
                "mixed configurations `{}` and `{}`",
                first.configuration, r.configuration
            )));
        }
    }
    let mut channels: BTreeSet<&str> = BTreeSet::new();
    for r in records {
        channels.extend(r.energy_j.keys().map(String::as_str));
    }
    let mut per_channel = BTreeMap::new();
    for ch in channels {
        let values: Vec<f64> = records
            .iter()
            .filter_map(|r| r.energy_j.get(ch).copied())
            .collect();
        per_channel.insert(ch.to_string(), StatSummary::from_values(&values));
    }
    let bytes: Vec<f64> = records.iter().map(|r| r.bytes_total as f64).collect();
    let durations: Vec<f64> = records.iter().map(|r| r.trace.duration_s()).collect();
    let partial_channels = records
        .iter()
        .flat_map(|r| r.partial_channels.iter().cloned())
        .collect();
    Ok(UnitStats {
        unit: first.unit.clone(),
        per_channel_energy_j: per_channel,
        bytes: StatSummary::from_values(&bytes),
        duration_s: StatSummary::from_values(&durations),
        partial_channels,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct AdjustedEnergy {
    pub raw_j: f64,
    pub adjusted_j: f64,
    /// True when the subtraction went negative and was floored to 0.
    pub floored: bool,
}

/// Subtract the idle baseline (machine-channel mean power of the Idle unit)
/// from a unit's raw energy, floored at zero.
pub fn idle_adjust(
    raw_j: f64,
    idle_stats: &UnitStats,
    duration_s: f64,
) -> Result<AdjustedEnergy, AnalysisError> {
    let idle_energy = idle_stats
        .per_channel_energy_j
        .get(CHANNEL_MACHINE)
        .ok_or_else(|| {
            AnalysisError::AdjustmentUnavailable(
                "idle stats carry no machine channel".into(),
            )
        })?;
    if idle_stats.duration_s.mean <= 0.0 {
        return Err(AnalysisError::AdjustmentUnavailable(
            "idle duration mean is not positive".into(),
        ));
    }
    let idle_power_w = idle_energy.mean / idle_stats.duration_s.mean;
    let adjusted = raw_j - idle_power_w * duration_s;
    if adjusted < 0.0 {
        Ok(AdjustedEnergy {
            raw_j,
            adjusted_j: 0.0,
            floored: true,
        })
    } else {
        Ok(AdjustedEnergy {
            raw_j,
            adjusted_j: adjusted,
            floored: false,
        })
    }
}

fn add_summaries(parts: &[StatSummary]) -> StatSummary {
    let mean = parts.iter().map(|s| s.mean).sum();
    // independence assumption: variances add
    let sample_std = parts
        .iter()
        .map(|s| s.sample_std)
        .collect::<Option<Vec<f64>>>()
        .map(|stds| stds.iter().map(|s| s * s).sum::<f64>().sqrt());
    let n = parts.iter().map(|s| s.n).min().unwrap_or(0);
    StatSummary {
        mean,
        sample_std,
        n,
    }
}

/// Estimate a composite unit by summing its members' stats. Means and byte
/// counts add; standard deviations combine as the root of summed variances
/// under an independence assumption across basic units.
pub fn compose_units(
    stats: &BTreeMap<String, UnitStats>,
    composite: &crate::model::FunctionalUnit,
) -> Result<UnitStats, AnalysisError> {
    if composite.composite_of.is_empty() {
        return Err(AnalysisError::EmptyComposite(composite.name.clone()));
    }
    let mut members = Vec::new();
    for name in &composite.composite_of {
        members.push(stats.get(name).ok_or_else(|| {
            AnalysisError::MissingCompositeMember {
                composite: composite.name.clone(),
                member: name.clone(),
            }
        })?);
    }
    let mut channels: BTreeSet<&str> = BTreeSet::new();
    for m in &members {
        channels.extend(m.per_channel_energy_j.keys().map(String::as_str));
    }
    let mut per_channel = BTreeMap::new();
    for ch in channels {
        let parts: Vec<StatSummary> = members
            .iter()
            .filter_map(|m| m.per_channel_energy_j.get(ch).copied())
            .collect();
        per_channel.insert(ch.to_string(), add_summaries(&parts));
    }
    let bytes = add_summaries(&members.iter().map(|m| m.bytes).collect::<Vec<_>>());
    let duration =
        add_summaries(&members.iter().map(|m| m.duration_s).collect::<Vec<_>>());
    let partial_channels = members
        .iter()
        .flat_map(|m| m.partial_channels.iter().cloned())
        .collect();
    Ok(UnitStats {
        unit: composite.name.clone(),
        per_channel_energy_j: per_channel,
        bytes,
        duration_s: duration,
        partial_channels,
    })
}

/// Per-unit stats (and emission breakdowns) of one campaign, as consumed by
/// [`compare`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignStats {
    pub label: String,
    pub per_unit: BTreeMap<String, UnitStats>,
    pub per_unit_emissions: BTreeMap<String, EmissionBreakdown>,
}

/// Componentwise emission delta; unlike a breakdown, components may be
/// negative.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
pub struct EmissionDelta {
    pub user_use_kgco2e: f64,
    pub network_use_kgco2e: f64,
    pub server_use_kgco2e: f64,
    pub network_embodied_eol_kgco2e: f64,
    pub server_embodied_eol_kgco2e: f64,
    pub user_embodied_kgco2e: f64,
    pub total_kgco2e: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitComparison {
    pub delta_energy_j: BTreeMap<String, f64>,
    pub delta_bytes: f64,
    pub delta_emissions_kgco2e: Option<EmissionDelta>,
    /// Machine-channel energy delta relative to the left mean; `None` when
    /// the left mean is 0 or the channel is absent.
    pub relative_delta: Option<f64>,
    /// Welch's t statistic per channel; `None` where either side's std is
    /// undefined, or where both stds are 0 with a nonzero delta.
    pub welch_t: BTreeMap<String, Option<f64>>,
}

/// Per-unit deltas between two campaigns. Sign convention: every delta is
/// right minus left.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub left: String,
    pub right: String,
    pub sign_convention: String,
    pub per_unit: BTreeMap<String, UnitComparison>,
}

fn welch_t(a: &StatSummary, b: &StatSummary) -> Option<f64> {
    let (sa, sb) = (a.sample_std?, b.sample_std?);
    let delta = b.mean - a.mean;
    let denom = (sa * sa / a.n as f64 + sb * sb / b.n as f64).sqrt();
    if denom == 0.0 {
        if delta == 0.0 {
            Some(0.0)
        } else {
            None
        }
    } else {
        Some(delta / denom)
    }
}

/// Compare two campaigns unit by unit. Only units present in both are
/// reported; no shared units is an error.
pub fn compare(
    left: &CampaignStats,
    right: &CampaignStats,
) -> Result<ComparisonReport, AnalysisError> {
    let mut per_unit = BTreeMap::new();
    for (name, ls) in &left.per_unit {
        let Some(rs) = right.per_unit.get(name) else {
            continue;
        };
        let mut channels: BTreeSet<&str> = BTreeSet::new();
        channels.extend(ls.per_channel_energy_j.keys().map(String::as_str));
        channels.extend(rs.per_channel_energy_j.keys().map(String::as_str));
        let mut delta_energy = BTreeMap::new();
        let mut welch = BTreeMap::new();
        for ch in channels {
            let (l, r) = (
                ls.per_channel_energy_j.get(ch),
                rs.per_channel_energy_j.get(ch),
            );
            if let (Some(l), Some(r)) = (l, r) {
                delta_energy.insert(ch.to_string(), r.mean - l.mean);
                welch.insert(ch.to_string(), welch_t(l, r));
            }
        }
        let relative_delta = match (
            ls.per_channel_energy_j.get(CHANNEL_MACHINE),
            rs.per_channel_energy_j.get(CHANNEL_MACHINE),
        ) {
            (Some(l), Some(r)) if l.mean > 0.0 => Some((r.mean - l.mean) / l.mean),
            _ => None,
        };
        let delta_emissions = match (
            left.per_unit_emissions.get(name),
            right.per_unit_emissions.get(name),
        ) {
            (Some(l), Some(r)) => Some(EmissionDelta {
                user_use_kgco2e: r.user_use_kgco2e - l.user_use_kgco2e,
                network_use_kgco2e: r.network_use_kgco2e - l.network_use_kgco2e,
                server_use_kgco2e: r.server_use_kgco2e - l.server_use_kgco2e,
                network_embodied_eol_kgco2e: r.network_embodied_eol_kgco2e
                    - l.network_embodied_eol_kgco2e,
                server_embodied_eol_kgco2e: r.server_embodied_eol_kgco2e
                    - l.server_embodied_eol_kgco2e,
                user_embodied_kgco2e: r.user_embodied_kgco2e - l.user_embodied_kgco2e,
                total_kgco2e: r.total_kgco2e - l.total_kgco2e,
            }),
            _ => None,
        };
        per_unit.insert(
            name.clone(),
            UnitComparison {
                delta_energy_j: delta_energy,
                delta_bytes: rs.bytes.mean - ls.bytes.mean,
                delta_emissions_kgco2e: delta_emissions,
                relative_delta,
                welch_t: welch,
            },
        );
    }
    if per_unit.is_empty() {
        return Err(AnalysisError::NoSharedUnits);
    }
    Ok(ComparisonReport {
        left: left.label.clone(),
        right: right.label.clone(),
        sign_convention: "right_minus_left".into(),
        per_unit,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct AnnualTotals {
    pub energy_kwh_per_year: f64,
    pub emissions_kgco2e_per_year: f64,
}

/// Scale per-interaction energy and emissions by a daily interaction volume
/// to annual totals.
pub fn extrapolate(
    per_interaction_kwh: f64,
    per_interaction_kgco2e: f64,
    daily_volume: f64,
) -> Result<AnnualTotals, AnalysisError> {
    for (name, v) in [
        ("per_interaction_kwh", per_interaction_kwh),
        ("per_interaction_kgco2e", per_interaction_kgco2e),
        ("daily_volume", daily_volume),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(ModelError::InvalidQuantity { name, value: v }.into());
        }
    }
    Ok(AnnualTotals {
        energy_kwh_per_year: per_interaction_kwh * daily_volume * DAYS_PER_YEAR,
        emissions_kgco2e_per_year: per_interaction_kgco2e * daily_volume * DAYS_PER_YEAR,
    })
}
