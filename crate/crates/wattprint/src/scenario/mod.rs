//! Scenario files, driver supervision, and campaign orchestration.

mod driver;
pub mod protocol;

pub use driver::run_unit;

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

use crate::model::{CampaignRecord, Configuration, FunctionalUnit, RunFailure};
use crate::sampling::{
    NetworkProviderSpec, PowerProviderSpec, SamplingError, WaveformShape, WaveformSpec,
    MIN_INTERVAL_MS,
};
use crate::scenario::protocol::ProtocolError;

pub const DEFAULT_N_RUNS: u32 = 5;
pub const DEFAULT_COOLDOWN_S: f64 = 5.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario file: {0}")]
    Parse(String),
    #[error("scenario field `{field}`: {reason}")]
    Validation { field: String, reason: String },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("run failed for unit `{unit}` run {run_index}: {message}")]
    Run {
        unit: String,
        run_index: u32,
        message: String,
    },
    #[error("driver timed out after {budget_s} s for unit `{unit}` run {run_index}")]
    Timeout {
        unit: String,
        run_index: u32,
        budget_s: f64,
    },
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("driver I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// A parsed, validated scenario: services, configurations, functional units,
/// repetition count, sampling setup, and the driver invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub services: Vec<String>,
    pub configurations: Vec<Configuration>,
    pub units: Vec<FunctionalUnit>,
    pub n_runs: u32,
    pub sampling_interval_ms: u64,
    pub driver_command: String,
    /// Logical gap between consecutive runs, so one run's tail activity is
    /// never attributed to the next run's window.
    pub cooldown_s: f64,
    pub power_provider: PowerProviderSpec,
    pub network_provider: NetworkProviderSpec,
}

impl ScenarioSpec {
    pub fn basic_units(&self) -> impl Iterator<Item = &FunctionalUnit> {
        self.units.iter().filter(|u| !u.is_composite())
    }

    pub fn composite_units(&self) -> impl Iterator<Item = &FunctionalUnit> {
        self.units.iter().filter(|u| u.is_composite())
    }

    pub fn configuration(&self, label: &str) -> Option<&Configuration> {
        self.configurations.iter().find(|c| c.label == label)
    }
}

#[derive(Debug, Deserialize)]
struct RawScenario {
    #[serde(default)]
    services: Vec<String>,
    configurations: Vec<Configuration>,
    units: Vec<FunctionalUnit>,
    n_runs: Option<u32>,
    sampling_interval_ms: Option<u64>,
    driver_command: String,
    cooldown_s: Option<f64>,
    power_provider: Option<PowerProviderSpec>,
    network_provider: Option<NetworkProviderSpec>,
}

fn default_power_provider() -> PowerProviderSpec {
    // hermetic default: a flat 10 W machine channel
    PowerProviderSpec::Synthetic {
        channels: std::collections::BTreeMap::from([(
            crate::model::CHANNEL_MACHINE.to_string(),
            WaveformSpec {
                shape: WaveformShape::Constant,
                amplitude_start_w: 10.0,
                amplitude_end_w: 10.0,
                period_s: 1.0,
            },
        )]),
    }
}

/// Parse and validate scenario file content.
pub fn parse_scenario(content: &str) -> Result<ScenarioSpec, ScenarioError> {
    let raw: RawScenario =
        toml::from_str(content).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let spec = ScenarioSpec {
        services: raw.services,
        configurations: raw.configurations,
        units: raw.units,
        n_runs: raw.n_runs.unwrap_or(DEFAULT_N_RUNS),
        sampling_interval_ms: raw
            .sampling_interval_ms
            .unwrap_or(crate::sampling::DEFAULT_INTERVAL_MS),
        driver_command: raw.driver_command,
        cooldown_s: raw.cooldown_s.unwrap_or(DEFAULT_COOLDOWN_S),
        power_provider: raw.power_provider.unwrap_or_else(default_power_provider),
        network_provider: raw
            .network_provider
            .unwrap_or(NetworkProviderSpec::Synthetic {
                bytes_in_per_s: 0.0,
                bytes_out_per_s: 0.0,
            }),
    };
    validate_spec(&spec)?;
    Ok(spec)
}

fn validate_spec(spec: &ScenarioSpec) -> Result<(), ScenarioError> {
    let field_err = |field: &str, reason: String| ScenarioError::Validation {
        field: field.to_string(),
        reason,
    };
    if spec.n_runs < 1 {
        return Err(field_err("n_runs", "must be at least 1".into()));
    }
    if spec.sampling_interval_ms < MIN_INTERVAL_MS {
        return Err(field_err(
            "sampling_interval_ms",
            format!("must be at least {MIN_INTERVAL_MS} ms"),
        ));
    }
    if spec.driver_command.trim().is_empty() {
        return Err(field_err("driver_command", "must not be empty".into()));
    }
    if spec.units.is_empty() {
        return Err(field_err("units", "at least one unit is required".into()));
    }
    if !(spec.cooldown_s.is_finite() && spec.cooldown_s >= 0.0) {
        return Err(field_err("cooldown_s", "must be non-negative".into()));
    }
    let mut names = BTreeSet::new();
    for unit in &spec.units {
        if unit.name.is_empty() {
            return Err(field_err("units.name", "unit name must not be empty".into()));
        }
        if !names.insert(unit.name.as_str()) {
            return Err(field_err(
                "units.name",
                format!("duplicate unit name `{}`", unit.name),
            ));
        }
        if !(unit.target_duration_s.is_finite() && unit.target_duration_s > 0.0) {
            return Err(field_err(
                "units.target_duration_s",
                format!("unit `{}` must have a positive duration", unit.name),
            ));
        }
        if !unit.is_composite() && unit.steps.is_empty() {
            return Err(field_err(
                "units.steps",
                format!("basic unit `{}` needs at least one step", unit.name),
            ));
        }
        // step names travel as single wire-protocol tokens
        if let Some(step) = unit.steps.iter().find(|s| s.contains(char::is_whitespace)) {
            return Err(field_err(
                "units.steps",
                format!("step `{step}` of unit `{}` must not contain whitespace", unit.name),
            ));
        }
    }
    let basic: BTreeSet<&str> = spec.basic_units().map(|u| u.name.as_str()).collect();
    for unit in spec.composite_units() {
        for member in &unit.composite_of {
            if !basic.contains(member.as_str()) {
                return Err(field_err(
                    "units.composite_of",
                    format!(
                        "composite `{}` references `{member}`, which is not a basic unit in this scenario",
                        unit.name
                    ),
                ));
            }
        }
    }
    let mut labels = BTreeSet::new();
    for config in &spec.configurations {
        if !labels.insert(config.label.as_str()) {
            return Err(field_err(
                "configurations.label",
                format!("duplicate configuration label `{}`", config.label),
            ));
        }
    }
    if let PowerProviderSpec::Synthetic { channels } = &spec.power_provider {
        for wf in channels.values() {
            wf.validate()?;
        }
    }
    Ok(())
}

/// Execute n_runs of every basic unit sequentially under one configuration.
///
/// In keep-going mode failed runs are recorded and the campaign continues,
/// marked incomplete; otherwise the first failure aborts the campaign.
pub fn run_campaign(
    spec: &ScenarioSpec,
    config_label: &str,
    keep_going: bool,
) -> Result<CampaignRecord, ScenarioError> {
    let config = spec.configuration(config_label).ok_or_else(|| {
        ScenarioError::Validation {
            field: "config".into(),
            reason: format!("configuration `{config_label}` is not declared in the scenario"),
        }
    })?;
    let cooldown_ms = (spec.cooldown_s * 1000.0).round() as u64;
    let mut runs: std::collections::BTreeMap<String, Vec<crate::model::RunRecord>> =
        Default::default();
    let mut failures: Vec<RunFailure> = Vec::new();
    let mut cursor_ms: u64 = 0;
    for unit in spec.basic_units() {
        for run_index in 0..spec.n_runs {
            match run_unit(spec, unit, config, run_index, cursor_ms) {
                Ok(record) => {
                    cursor_ms = record.trace.end_t_ms + cooldown_ms;
                    runs.entry(unit.name.clone()).or_default().push(record);
                }
                Err(e) if keep_going => {
                    failures.push(RunFailure {
                        unit: unit.name.clone(),
                        run_index,
                        message: e.to_string(),
                    });
                    cursor_ms += (unit.target_duration_s * 1000.0).round() as u64 + cooldown_ms;
                }
                Err(e @ (ScenarioError::Run { .. } | ScenarioError::Timeout { .. })) => {
                    return Err(e)
                }
                Err(e) => {
                    return Err(ScenarioError::Run {
                        unit: unit.name.clone(),
                        run_index,
                        message: e.to_string(),
                    })
                }
            }
        }
    }
    Ok(CampaignRecord {
        configuration: config.clone(),
        runs,
        n_runs_per_unit: spec.n_runs,
        complete: failures.is_empty(),
        failures,
    })
}
