use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wattprint::cli;

#[derive(Parser)]
#[command(
    name = "wattprint",
    about = "Energy and carbon footprint harness for scripted service interactions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a measurement campaign for one configuration and write a report
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        factors: PathBuf,
        #[arg(long)]
        machine: PathBuf,
        /// Configuration label declared in the scenario file
        #[arg(long)]
        config: String,
        /// Output path, or `-` for stdout
        #[arg(long)]
        out: String,
        /// Record failed runs and continue instead of aborting
        #[arg(long)]
        keep_going: bool,
        /// Omit the generation timestamp, for byte-identical report files
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Compare two report files (deltas are B minus A)
    Compare {
        report_a: PathBuf,
        report_b: PathBuf,
        #[arg(long)]
        out: String,
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Scale a per-interaction footprint to annual totals
    Extrapolate {
        #[arg(long)]
        per_kwh: f64,
        #[arg(long)]
        per_kgco2e: f64,
        #[arg(long)]
        daily_volume: f64,
        #[arg(long)]
        out: String,
    },
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let result = match args.command {
        Command::Run {
            scenario,
            factors,
            machine,
            config,
            out,
            keep_going,
            no_timestamp,
        } => cli::cmd_run(
            &scenario,
            &factors,
            &machine,
            &config,
            &out,
            keep_going,
            no_timestamp,
        )
        .map(|_| ()),
        Command::Compare {
            report_a,
            report_b,
            out,
            no_timestamp,
        } => cli::cmd_compare(&report_a, &report_b, &out, no_timestamp).map(|_| ()),
        Command::Extrapolate {
            per_kwh,
            per_kgco2e,
            daily_volume,
            out,
        } => cli::cmd_extrapolate(per_kwh, per_kgco2e, daily_volume, &out).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wattprint: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
