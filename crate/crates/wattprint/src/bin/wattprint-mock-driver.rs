//! Bundled mock driver: executes any functional unit by sleeping out its
//! target duration, step by step, and reporting configurable network totals.
//!
//! Reported timestamps follow the planned step schedule (exact millisecond
//! offsets from run start) so that repeated campaigns are deterministic; the
//! real sleeps keep concurrent wall-clock sampling meaningful.

use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;

use wattprint::scenario::parse_scenario;

#[derive(Parser)]
#[command(name = "wattprint-mock-driver")]
struct Args {
    /// Scenario file used to look up unit steps and target durations
    #[arg(long)]
    scenario: PathBuf,
    /// Total bytes received to report at the end of each run
    #[arg(long, default_value_t = 0)]
    bytes_in: u64,
    /// Total bytes sent to report at the end of each run
    #[arg(long, default_value_t = 0)]
    bytes_out: u64,
    /// Emit `ERR <message>` instead of executing this unit
    #[arg(long)]
    fail_unit: Option<String>,
    #[arg(long, default_value = "mock failure")]
    fail_message: String,
}

fn run() -> Result<(), String> {
    let args = Args::parse();
    let content = std::fs::read_to_string(&args.scenario)
        .map_err(|e| format!("cannot read scenario {}: {e}", args.scenario.display()))?;
    let spec = parse_scenario(&content).map_err(|e| e.to_string())?;

    let stdin = std::io::stdin();
    let mut command = String::new();
    stdin
        .lock()
        .read_line(&mut command)
        .map_err(|e| e.to_string())?;
    let tokens: Vec<&str> = command.trim().split(' ').filter(|t| !t.is_empty()).collect();
    // unit names may contain spaces; the config label is the last token
    if tokens.len() < 3 || tokens[0] != "RUN" {
        return Err(format!(
            "expected `RUN <unit> <config>`, got `{}`",
            command.trim()
        ));
    }
    let unit_name = tokens[1..tokens.len() - 1].join(" ");
    let unit_name = unit_name.as_str();

    let unit = spec
        .units
        .iter()
        .find(|u| u.name == unit_name)
        .ok_or_else(|| format!("unit `{unit_name}` not in scenario"))?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut emit = |line: String| -> Result<(), String> {
        writeln!(out, "{line}").map_err(|e| e.to_string())?;
        out.flush().map_err(|e| e.to_string())
    };

    emit("READY".into())?;
    if args.fail_unit.as_deref() == Some(unit_name) {
        emit(format!("ERR {}", args.fail_message))?;
        return Ok(());
    }

    let total_ms = (unit.target_duration_s * 1000.0).round() as u64;
    let n_steps = unit.steps.len().max(1) as u64;
    let mut t_ms: u64 = 0;
    for (i, step) in unit.steps.iter().enumerate() {
        // distribute the duration over steps, remainder on the last one
        let step_ms = if i as u64 == n_steps - 1 {
            total_ms - t_ms
        } else {
            total_ms / n_steps
        };
        emit(format!("STEP {step} START {t_ms}"))?;
        std::thread::sleep(Duration::from_millis(step_ms));
        t_ms += step_ms;
        emit(format!("STEP {step} END {t_ms}"))?;
    }
    if args.bytes_in > 0 || args.bytes_out > 0 {
        emit(format!("NET {} {}", args.bytes_in, args.bytes_out))?;
    }
    emit("DONE 0".into())?;
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wattprint-mock-driver: {e}");
            ExitCode::FAILURE
        }
    }
}
