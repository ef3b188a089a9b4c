//! Supervises one external driver process for one run: sends the RUN
//! command, validates the event stream against the wire-protocol grammar,
//! and turns the run window into a measured [`RunRecord`].
//!
//! The driver is a child process speaking a newline protocol rather than an
//! embedded browser library; the bundled mock driver makes the whole suite
//! hermetic.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use crate::analysis::integrate_energy;
use crate::model::{Configuration, FunctionalUnit, NetworkSource, ResourceTrace, RunRecord};
use crate::sampling::{
    sample_run, Deadline, NetworkProviderSpec, NullNetworkProvider, PowerProviderSpec,
    ReplayNetworkProvider, ReplayPowerProvider, SyntheticNetworkProvider,
    SyntheticPowerProvider, VirtualClock,
};

use super::protocol::{parse_event_line, DriverEvent, StreamValidator};
use super::{ScenarioError, ScenarioSpec};

/// Post-hoc tolerance on the standardized unit duration: the driver is
/// responsible for pacing, the harness checks |observed - target| <= 10%.
pub const DURATION_TOLERANCE: f64 = 0.10;

/// Timeout budget as a multiple of the unit's target duration.
pub const TIMEOUT_FACTOR: f64 = 2.0;

struct DriverSession {
    child: Child,
    lines: mpsc::Receiver<std::io::Result<String>>,
}

impl DriverSession {
    fn spawn(command: &str) -> Result<Self, ScenarioError> {
        let argv: Vec<&str> = command.split_whitespace().collect();
        if argv.is_empty() {
            return Err(ScenarioError::Validation {
                field: "driver_command".into(),
                reason: "must not be empty".into(),
            });
        }
        let mut child = Command::new(argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdout = child.stdout.take().expect("stdout was piped");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(DriverSession { child, lines: rx })
    }

    fn send_run(&mut self, unit: &str, config: &str) -> Result<(), ScenarioError> {
        let stdin = self.child.stdin.as_mut().expect("stdin was piped");
        writeln!(stdin, "RUN {unit} {config}")?;
        stdin.flush()?;
        Ok(())
    }
}

impl Drop for DriverSession {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

struct RunOutcome {
    window_start_ms: u64,
    window_end_ms: u64,
    net_totals: Option<(u64, u64)>,
}

fn supervise(
    session: &mut DriverSession,
    unit: &FunctionalUnit,
    run_index: u32,
) -> Result<RunOutcome, ScenarioError> {
    let budget = Duration::from_secs_f64(unit.target_duration_s * TIMEOUT_FACTOR);
    let deadline = Instant::now() + budget;
    let mut validator = StreamValidator::new();
    let mut window_start: Option<u64> = None;
    let mut window_end: Option<u64> = None;
    let mut net_totals: Option<(u64, u64)> = None;
    loop {
        let remaining = deadline
            .checked_duration_since(Instant::now())
            .unwrap_or(Duration::ZERO);
        let line = match session.lines.recv_timeout(remaining) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(ScenarioError::Io(e)),
            Err(mpsc::RecvTimeoutError::Timeout) => {
                return Err(ScenarioError::Timeout {
                    unit: unit.name.clone(),
                    run_index,
                    budget_s: budget.as_secs_f64(),
                })
            }
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                // stream ended without a terminator
                validator.finish()?;
                unreachable!("finish() rejects unterminated streams");
            }
        };
        let event = parse_event_line(&line)?;
        validator.accept(&event, &line)?;
        match event {
            DriverEvent::StepStart { t_ms, .. } => {
                window_start.get_or_insert(t_ms);
            }
            DriverEvent::StepEnd { t_ms, .. } => {
                window_end = Some(t_ms);
            }
            DriverEvent::Net {
                bytes_in,
                bytes_out,
            } => {
                net_totals = Some((bytes_in, bytes_out));
            }
            DriverEvent::Done { code: 0 } => break,
            DriverEvent::Done { code } => {
                return Err(ScenarioError::Run {
                    unit: unit.name.clone(),
                    run_index,
                    message: format!("driver reported DONE with nonzero code {code}"),
                })
            }
            DriverEvent::Err { message } => {
                return Err(ScenarioError::Run {
                    unit: unit.name.clone(),
                    run_index,
                    message,
                })
            }
            DriverEvent::Ready => {}
        }
    }
    let (window_start_ms, window_end_ms) = match (window_start, window_end) {
        (Some(s), Some(e)) if e > s => (s, e),
        _ => {
            return Err(ScenarioError::Run {
                unit: unit.name.clone(),
                run_index,
                message: "driver completed without a usable step window".into(),
            })
        }
    };
    Ok(RunOutcome {
        window_start_ms,
        window_end_ms,
        net_totals,
    })
}

fn build_trace(
    spec: &ScenarioSpec,
    outcome: &RunOutcome,
    offset_ms: u64,
) -> Result<(ResourceTrace, NetworkSource), ScenarioError> {
    let start = offset_ms + outcome.window_start_ms;
    let end = offset_ms + outcome.window_end_ms;
    match &spec.power_provider {
        PowerProviderSpec::Synthetic { channels } => {
            // waveform phase is anchored to the run window, so repeated runs
            // of the same unit see identical power and the campaign is
            // deterministic
            let clock = VirtualClock::starting_at(start);
            let mut power = SyntheticPowerProvider::new(channels.clone(), start);
            let trace = match &spec.network_provider {
                NetworkProviderSpec::Synthetic {
                    bytes_in_per_s,
                    bytes_out_per_s,
                } => {
                    let mut net =
                        SyntheticNetworkProvider::new(*bytes_in_per_s, *bytes_out_per_s, start);
                    sample_run(
                        &mut power,
                        &mut net,
                        &clock,
                        spec.sampling_interval_ms,
                        &Deadline(end),
                    )?
                }
                NetworkProviderSpec::Replay { path } => {
                    let mut net = ReplayNetworkProvider::from_file(std::path::Path::new(path))?;
                    sample_run(
                        &mut power,
                        &mut net,
                        &clock,
                        spec.sampling_interval_ms,
                        &Deadline(end),
                    )?
                }
                NetworkProviderSpec::Platform {} => {
                    let mut net = NullNetworkProvider;
                    sample_run(
                        &mut power,
                        &mut net,
                        &clock,
                        spec.sampling_interval_ms,
                        &Deadline(end),
                    )?
                }
            };
            let source = match &spec.network_provider {
                NetworkProviderSpec::Synthetic { .. } => NetworkSource::Synthetic,
                NetworkProviderSpec::Replay { .. } => NetworkSource::Replay,
                NetworkProviderSpec::Platform {} => NetworkSource::Platform,
            };
            Ok((trace, source))
        }
        PowerProviderSpec::Replay { path } => {
            let mut power = ReplayPowerProvider::from_file(std::path::Path::new(path))?;
            let mut net: Box<dyn crate::sampling::NetworkProvider> =
                match &spec.network_provider {
                    NetworkProviderSpec::Replay { path } => Box::new(
                        ReplayNetworkProvider::from_file(std::path::Path::new(path))?,
                    ),
                    _ => Box::new(NullNetworkProvider),
                };
            let clock = VirtualClock::starting_at(0);
            let stop = crate::sampling::StopFlag::new(); // replay stops at exhaustion
            let trace = sample_run(
                &mut power,
                net.as_mut(),
                &clock,
                spec.sampling_interval_ms,
                &stop,
            )?;
            Ok((trace, NetworkSource::Replay))
        }
        PowerProviderSpec::Sensor { .. } => Err(ScenarioError::Unsupported(
            "platform sensor provider is not available in this build; use synthetic or replay"
                .into(),
        )),
    }
}

/// Run one basic functional unit once: launch the driver, send
/// `RUN <unit> <config>`, validate the event stream, and assemble the
/// measured record. The trace spans the first STEP_START to the last
/// STEP_END, offset by `offset_ms` onto the campaign timeline.
pub fn run_unit(
    spec: &ScenarioSpec,
    unit: &FunctionalUnit,
    config: &Configuration,
    run_index: u32,
    offset_ms: u64,
) -> Result<RunRecord, ScenarioError> {
    if unit.is_composite() {
        return Err(ScenarioError::Validation {
            field: "unit".into(),
            reason: format!(
                "composite unit `{}` is estimated by composition, not executed",
                unit.name
            ),
        });
    }
    let mut session = DriverSession::spawn(&spec.driver_command)?;
    session.send_run(&unit.name, &config.label)?;
    let outcome = supervise(&mut session, unit, run_index)?;
    drop(session);

    let observed_s = (outcome.window_end_ms - outcome.window_start_ms) as f64 / 1000.0;
    let drift = (observed_s - unit.target_duration_s).abs() / unit.target_duration_s;
    if drift > DURATION_TOLERANCE {
        return Err(ScenarioError::Run {
            unit: unit.name.clone(),
            run_index,
            message: format!(
                "run duration {observed_s:.3} s deviates more than {:.0}% from target {} s",
                DURATION_TOLERANCE * 100.0,
                unit.target_duration_s
            ),
        });
    }

    let (trace, provider_source) = build_trace(spec, &outcome, offset_ms)?;
    let energy = integrate_energy(&trace).map_err(|e| ScenarioError::Run {
        unit: unit.name.clone(),
        run_index,
        message: e.to_string(),
    })?;

    // precedence: driver-reported counters over provider counters
    let (bytes_total, network_source) = match outcome.net_totals {
        Some((bytes_in, bytes_out)) => (bytes_in + bytes_out, NetworkSource::Driver),
        None => {
            let total = match (trace.network.first(), trace.network.last()) {
                (Some(first), Some(last)) => {
                    (last.bytes_in - first.bytes_in) + (last.bytes_out - first.bytes_out)
                }
                _ => 0,
            };
            (total, provider_source)
        }
    };

    Ok(RunRecord {
        unit: unit.name.clone(),
        configuration: config.label.clone(),
        trace,
        energy_j: energy.joules,
        partial_channels: energy.partial.into_iter().collect(),
        bytes_total,
        run_index,
        network_source,
    })
}
