//! Self-describing report documents. Scorecards and spreadsheets are
//! generated downstream from these files without re-measurement, so every
//! numeric field carries its unit in the key name.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    aggregate_runs, compare, compose_units, idle_adjust, AdjustedEnergy, AnalysisError,
    CampaignStats, ComparisonReport, UnitStats,
};
use crate::emissions::{emission_std, total_footprint, EmissionBreakdown, EmissionStd};
use crate::model::{
    CampaignRecord, EmissionFactors, MachineProfile, ModelError, CHANNEL_MACHINE,
};
use crate::scenario::ScenarioSpec;

pub const SCHEMA_VERSION: &str = "1.0";

/// The unit of measurement for a campaign, with both raw statistics and the
/// derived emission breakdown.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitReport {
    pub composite: bool,
    pub energy_j: BTreeMap<String, crate::analysis::StatSummary>,
    pub bytes: crate::analysis::StatSummary,
    pub duration_s: crate::analysis::StatSummary,
    /// Raw and idle-baseline-adjusted machine energy; absent when the
    /// campaign has no Idle unit.
    pub idle_adjusted: Option<AdjustedEnergy>,
    pub emissions_kgco2e: EmissionBreakdown,
    pub emissions_std_kgco2e: EmissionStd,
}

/// Scenario parameters echoed into the report so a reader needs no other
/// file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioEcho {
    pub services: Vec<String>,
    pub n_runs: u32,
    pub sampling_interval_ms: u64,
    pub units: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: String,
    /// Wall-clock generation time; suppressed by `--no-timestamp` so report
    /// files can be compared byte for byte.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix_s: Option<u64>,
    pub scenario: ScenarioEcho,
    pub campaign: String,
    pub complete: bool,
    pub failures: Vec<String>,
    pub per_unit: BTreeMap<String, UnitReport>,
    pub factors: EmissionFactors,
    pub machine: MachineProfile,
    pub flags: Vec<String>,
    pub notes: Vec<String>,
}

/// The unit name whose measurements serve as the idle baseline.
pub const IDLE_UNIT: &str = "Idle";

/// Turn a finished campaign into a report document: per-unit statistics,
/// idle adjustment, composite estimation, and emission breakdowns.
pub fn build_report(
    spec: &ScenarioSpec,
    campaign: &CampaignRecord,
    factors: &EmissionFactors,
    machine: &MachineProfile,
    timestamp: Option<u64>,
) -> Result<ReportDocument, AnalysisError> {
    let mut stats: BTreeMap<String, UnitStats> = BTreeMap::new();
    for (unit, runs) in &campaign.runs {
        stats.insert(unit.clone(), aggregate_runs(runs)?);
    }
    let mut composites: BTreeMap<String, UnitStats> = BTreeMap::new();
    for unit in spec.composite_units() {
        // a composite missing a failed member is skipped, not fatal
        if let Ok(s) = compose_units(&stats, unit) {
            composites.insert(unit.name.clone(), s);
        }
    }
    let idle_stats = stats.get(IDLE_UNIT).cloned();

    let mut flags: Vec<String> = Vec::new();
    if !campaign.complete {
        flags.push("incomplete_campaign".into());
    }
    let mut per_unit = BTreeMap::new();
    for (name, unit_stats) in stats.iter().chain(composites.iter()) {
        let is_composite = composites.contains_key(name);
        let emissions = total_footprint(unit_stats, factors, machine).map_err(map_model)?;
        let std = emission_std(unit_stats, factors, machine);
        let idle_adjusted = match (&idle_stats, unit_stats.per_channel_energy_j.get(CHANNEL_MACHINE))
        {
            (Some(idle), Some(machine_energy)) if name != IDLE_UNIT => {
                let adj = idle_adjust(
                    machine_energy.mean,
                    idle,
                    unit_stats.duration_s.mean,
                )?;
                if adj.floored {
                    flags.push(format!("idle_adjustment_floored:{name}"));
                }
                Some(adj)
            }
            _ => None,
        };
        for ch in &unit_stats.partial_channels {
            flags.push(format!("partial_channel:{name}:{ch}"));
        }
        per_unit.insert(
            name.clone(),
            UnitReport {
                composite: is_composite,
                energy_j: unit_stats.per_channel_energy_j.clone(),
                bytes: unit_stats.bytes,
                duration_s: unit_stats.duration_s,
                idle_adjusted,
                emissions_kgco2e: emissions,
                emissions_std_kgco2e: std,
            },
        );
    }
    flags.sort();
    flags.dedup();
    Ok(ReportDocument {
        schema_version: SCHEMA_VERSION.to_string(),
        generated_unix_s: timestamp,
        scenario: ScenarioEcho {
            services: spec.services.clone(),
            n_runs: spec.n_runs,
            sampling_interval_ms: spec.sampling_interval_ms,
            units: spec.units.iter().map(|u| u.name.clone()).collect(),
        },
        campaign: campaign.configuration.label.clone(),
        complete: campaign.complete,
        failures: campaign
            .failures
            .iter()
            .map(|f| format!("{} run {}: {}", f.unit, f.run_index, f.message))
            .collect(),
        per_unit,
        factors: factors.clone(),
        machine: machine.clone(),
        flags,
        notes: vec![
            "network/server components are allocated by traffic share (per-GB), not metered"
                .into(),
            "composite std assumes independence across basic units".into(),
            "emission std is linear propagation of the measured input's std".into(),
        ],
    })
}

fn map_model(e: ModelError) -> AnalysisError {
    AnalysisError::Model(e)
}

/// Reconstruct comparison inputs from a stored report.
pub fn campaign_stats_of(report: &ReportDocument) -> CampaignStats {
    let mut per_unit = BTreeMap::new();
    let mut per_unit_emissions = BTreeMap::new();
    for (name, unit) in &report.per_unit {
        per_unit.insert(
            name.clone(),
            UnitStats {
                unit: name.clone(),
                per_channel_energy_j: unit.energy_j.clone(),
                bytes: unit.bytes,
                duration_s: unit.duration_s,
                partial_channels: Default::default(),
            },
        );
        per_unit_emissions.insert(name.clone(), unit.emissions_kgco2e);
    }
    CampaignStats {
        label: report.campaign.clone(),
        per_unit,
        per_unit_emissions,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonDocument {
    pub schema_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix_s: Option<u64>,
    #[serde(flatten)]
    pub comparison: ComparisonReport,
}

/// Compare two stored reports (B minus A).
pub fn compare_reports(
    left: &ReportDocument,
    right: &ReportDocument,
    timestamp: Option<u64>,
) -> Result<ComparisonDocument, AnalysisError> {
    let report = compare(&campaign_stats_of(left), &campaign_stats_of(right))?;
    Ok(ComparisonDocument {
        schema_version: SCHEMA_VERSION.to_string(),
        generated_unix_s: timestamp,
        comparison: report,
    })
}
