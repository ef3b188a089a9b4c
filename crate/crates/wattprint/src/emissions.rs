//! Converts measured energy and traffic into greenhouse-gas emissions:
//! use-phase via grid intensity, network/server and embodied/EoL via per-GB
//! factors, user-device embodied via linear lifetime amortization.
//!
//! Network and server components are allocated (traffic-proportional per-GB
//! shares), not metered; reports label them as such.

use serde::{Deserialize, Serialize};

use crate::analysis::UnitStats;
use crate::model::{
    bytes_to_gb, joules_to_kwh, EmissionFactors, MachineProfile, ModelError, CHANNEL_MACHINE,
};

/// Per-component emissions for one functional unit. `total` is always the
/// sum of the six components.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
pub struct EmissionBreakdown {
    pub user_use_kgco2e: f64,
    pub network_use_kgco2e: f64,
    pub server_use_kgco2e: f64,
    pub network_embodied_eol_kgco2e: f64,
    pub server_embodied_eol_kgco2e: f64,
    pub user_embodied_kgco2e: f64,
    pub total_kgco2e: f64,
}

/// Linearly propagated standard deviations for the measured-input-driven
/// components (user embodied has no measured dispersion input besides
/// duration, propagated the same way).
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
pub struct EmissionStd {
    pub user_use_kgco2e: Option<f64>,
    pub network_use_kgco2e: Option<f64>,
    pub server_use_kgco2e: Option<f64>,
    pub network_embodied_eol_kgco2e: Option<f64>,
    pub server_embodied_eol_kgco2e: Option<f64>,
    pub user_embodied_kgco2e: Option<f64>,
}

/// Electricity use to emissions via the average grid energy mix.
pub fn use_phase_emissions(energy_kwh: f64, factors: &EmissionFactors) -> Result<f64, ModelError> {
    if !energy_kwh.is_finite() || energy_kwh < 0.0 {
        return Err(ModelError::InvalidQuantity {
            name: "energy_kwh",
            value: energy_kwh,
        });
    }
    Ok(energy_kwh * factors.grid_intensity_kgco2e_per_kwh)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficEmissions {
    pub network_kgco2e: f64,
    pub server_kgco2e: f64,
}

/// Traffic-proportional allocation of network and server use-phase
/// emissions.
pub fn network_server_emissions(
    bytes: f64,
    factors: &EmissionFactors,
) -> Result<TrafficEmissions, ModelError> {
    let gb = bytes_to_gb(bytes)?;
    Ok(TrafficEmissions {
        network_kgco2e: gb * factors.network_use_kgco2e_per_gb,
        server_kgco2e: gb * factors.server_use_kgco2e_per_gb,
    })
}

/// Traffic-proportional allocation of embodied and end-of-life emissions for
/// the network and server sides.
pub fn embodied_eol_emissions(
    bytes: f64,
    factors: &EmissionFactors,
) -> Result<TrafficEmissions, ModelError> {
    let gb = bytes_to_gb(bytes)?;
    Ok(TrafficEmissions {
        network_kgco2e: gb * factors.network_embodied_kgco2e_per_gb,
        server_kgco2e: gb * factors.server_embodied_kgco2e_per_gb,
    })
}

/// Share of the user device's embodied emissions attributable to a run
/// window: linear in wall-clock duration over the device lifetime, scaled by
/// the usage share.
pub fn user_embodied_share(
    machine: &MachineProfile,
    duration_s: f64,
) -> Result<f64, ModelError> {
    machine.validate()?;
    if !duration_s.is_finite() || duration_s < 0.0 {
        return Err(ModelError::InvalidQuantity {
            name: "duration_s",
            value: duration_s,
        });
    }
    Ok(machine.embodied_total_kgco2e * machine.usage_share * duration_s / machine.lifetime_s)
}

/// Assemble the full breakdown for one unit from its mean energy, bytes, and
/// duration.
pub fn total_footprint(
    stats: &UnitStats,
    factors: &EmissionFactors,
    machine: &MachineProfile,
) -> Result<EmissionBreakdown, ModelError> {
    let machine_energy = stats
        .per_channel_energy_j
        .get(CHANNEL_MACHINE)
        .ok_or(ModelError::InvalidQuantity {
            name: "machine_channel_energy_j",
            value: f64::NAN,
        })?;
    let user_use = use_phase_emissions(joules_to_kwh(machine_energy.mean)?, factors)?;
    let traffic_use = network_server_emissions(stats.bytes.mean, factors)?;
    let traffic_embodied = embodied_eol_emissions(stats.bytes.mean, factors)?;
    let user_embodied = user_embodied_share(machine, stats.duration_s.mean)?;
    let total = user_use
        + traffic_use.network_kgco2e
        + traffic_use.server_kgco2e
        + traffic_embodied.network_kgco2e
        + traffic_embodied.server_kgco2e
        + user_embodied;
    Ok(EmissionBreakdown {
        user_use_kgco2e: user_use,
        network_use_kgco2e: traffic_use.network_kgco2e,
        server_use_kgco2e: traffic_use.server_kgco2e,
        network_embodied_eol_kgco2e: traffic_embodied.network_kgco2e,
        server_embodied_eol_kgco2e: traffic_embodied.server_kgco2e,
        user_embodied_kgco2e: user_embodied,
        total_kgco2e: total,
    })
}

/// Linear propagation of per-run dispersion into emission components:
/// sigma_emission = sigma_input x factor.
pub fn emission_std(
    stats: &UnitStats,
    factors: &EmissionFactors,
    machine: &MachineProfile,
) -> EmissionStd {
    let energy_std = stats
        .per_channel_energy_j
        .get(CHANNEL_MACHINE)
        .and_then(|s| s.sample_std);
    let bytes_std = stats.bytes.sample_std;
    let duration_std = stats.duration_s.sample_std;
    let per_gb = |factor: f64| bytes_std.map(|s| s / crate::model::BYTES_PER_GB * factor);
    EmissionStd {
        user_use_kgco2e: energy_std
            .map(|s| s / crate::model::JOULES_PER_KWH * factors.grid_intensity_kgco2e_per_kwh),
        network_use_kgco2e: per_gb(factors.network_use_kgco2e_per_gb),
        server_use_kgco2e: per_gb(factors.server_use_kgco2e_per_gb),
        network_embodied_eol_kgco2e: per_gb(factors.network_embodied_kgco2e_per_gb),
        server_embodied_eol_kgco2e: per_gb(factors.server_embodied_kgco2e_per_gb),
        user_embodied_kgco2e: duration_std.map(|s| {
            machine.embodied_total_kgco2e * machine.usage_share * s / machine.lifetime_s
        }),
    }
}
