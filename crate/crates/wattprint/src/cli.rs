//! Command implementations behind the `wattprint` binary. Diagnostics go to
//! stderr; reports go to files or stdout (`--out -`).

use std::path::Path;

use crate::analysis::{extrapolate, AnalysisError, AnnualTotals};
use crate::model::{validate_factors, EmissionFactors, MachineProfile, RawFactors};
use crate::report::{build_report, compare_reports, ComparisonDocument, ReportDocument};
use crate::scenario::{parse_scenario, run_campaign, ScenarioError};

/// Exit codes: 1 validation, 2 run/protocol, 3 I/O.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Run(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Run(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Run(m) | CliError::Io(m) => m,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match &e {
            ScenarioError::Parse(_)
            | ScenarioError::Validation { .. }
            | ScenarioError::Unsupported(_) => CliError::Validation(e.to_string()),
            ScenarioError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Run(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn load_factors(path: &Path) -> Result<EmissionFactors, CliError> {
    let content = read_file(path)?;
    let raw: RawFactors = toml::from_str(&content)
        .map_err(|e| CliError::Validation(format!("factor file {}: {e}", path.display())))?;
    validate_factors(&raw).map_err(|e| CliError::Validation(e.to_string()))
}

fn load_machine(path: &Path) -> Result<MachineProfile, CliError> {
    let content = read_file(path)?;
    let machine: MachineProfile = toml::from_str(&content)
        .map_err(|e| CliError::Validation(format!("machine file {}: {e}", path.display())))?;
    machine
        .validate()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(machine)
}

fn write_output(out: &str, content: &str) -> Result<(), CliError> {
    if out == "-" {
        use std::io::Write;
        std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Io(e.to_string()))
    } else {
        std::fs::write(out, content)
            .map_err(|e| CliError::Io(format!("cannot write {out}: {e}")))
    }
}

fn now_unix_s() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn to_pretty_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Run a full campaign for one configuration and write the report document.
#[allow(clippy::too_many_arguments)]
pub fn cmd_run(
    scenario_path: &Path,
    factors_path: &Path,
    machine_path: &Path,
    config_label: &str,
    out: &str,
    keep_going: bool,
    no_timestamp: bool,
) -> Result<ReportDocument, CliError> {
    let spec = parse_scenario(&read_file(scenario_path)?)?;
    let factors = load_factors(factors_path)?;
    let machine = load_machine(machine_path)?;
    let campaign = run_campaign(&spec, config_label, keep_going)?;
    let timestamp = if no_timestamp { None } else { Some(now_unix_s()) };
    let report = build_report(&spec, &campaign, &factors, &machine, timestamp)?;
    write_output(out, &to_pretty_json(&report)?)?;
    Ok(report)
}

fn load_report(path: &Path) -> Result<ReportDocument, CliError> {
    let content = read_file(path)?;
    serde_json::from_str(&content)
        .map_err(|e| CliError::Validation(format!("report {}: {e}", path.display())))
}

/// Compare two stored reports (B minus A) and write the comparison document.
pub fn cmd_compare(
    report_a: &Path,
    report_b: &Path,
    out: &str,
    no_timestamp: bool,
) -> Result<ComparisonDocument, CliError> {
    let left = load_report(report_a)?;
    let right = load_report(report_b)?;
    if left.schema_version != right.schema_version {
        return Err(CliError::Validation(format!(
            "schema mismatch: {} vs {}",
            left.schema_version, right.schema_version
        )));
    }
    let timestamp = if no_timestamp { None } else { Some(now_unix_s()) };
    let doc = compare_reports(&left, &right, timestamp)?;
    write_output(out, &to_pretty_json(&doc)?)?;
    Ok(doc)
}

#[derive(Debug, serde::Serialize)]
pub struct ExtrapolationDocument {
    pub schema_version: String,
    pub per_interaction_kwh: f64,
    pub per_interaction_kgco2e: f64,
    pub daily_volume: f64,
    pub annual_energy_kwh: f64,
    pub annual_emissions_kgco2e: f64,
}

/// Scale per-interaction footprint to annual totals and write the document.
pub fn cmd_extrapolate(
    per_kwh: f64,
    per_kgco2e: f64,
    daily_volume: f64,
    out: &str,
) -> Result<ExtrapolationDocument, CliError> {
    let AnnualTotals {
        energy_kwh_per_year,
        emissions_kgco2e_per_year,
    } = extrapolate(per_kwh, per_kgco2e, daily_volume)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let doc = ExtrapolationDocument {
        schema_version: crate::report::SCHEMA_VERSION.into(),
        per_interaction_kwh: per_kwh,
        per_interaction_kgco2e: per_kgco2e,
        daily_volume,
        annual_energy_kwh: energy_kwh_per_year,
        annual_emissions_kgco2e: emissions_kgco2e_per_year,
    };
    write_output(out, &to_pretty_json(&doc)?)?;
    Ok(doc)
}
