//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines.

mod common;

use std::collections::BTreeMap;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::ScenarioFixture;
use wattprint::analysis::{aggregate_runs, compare, integrate_energy};
use wattprint::emissions::{
    embodied_eol_emissions, network_server_emissions, total_footprint, use_phase_emissions,
};
use wattprint::model::{EmissionFactors, MachineProfile, CHANNEL_MACHINE};
use wattprint::sampling::{
    sample_run, Deadline, SyntheticNetworkProvider, SyntheticPowerProvider, VirtualClock,
    WaveformShape, WaveformSpec,
};
use wattprint::scenario::protocol::validate_stream;

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

fn waveform(shape: WaveformShape, start: f64, end: f64, period_s: f64) -> WaveformSpec {
    WaveformSpec {
        shape,
        amplitude_start_w: start,
        amplitude_end_w: end,
        period_s,
    }
}

// 1. Integration oracle: constant and ramp waveforms, < 1 s.
#[test]
fn criterion_1_integration_oracle() {
    let started = Instant::now();

    let clock = VirtualClock::starting_at(0);
    let mut power = SyntheticPowerProvider::new(
        BTreeMap::from([(
            CHANNEL_MACHINE.to_string(),
            waveform(WaveformShape::Constant, 10.0, 10.0, 1.0),
        )]),
        0,
    );
    let mut net = SyntheticNetworkProvider::new(0.0, 0.0, 0);
    let trace = sample_run(&mut power, &mut net, &clock, 100, &Deadline(60_000)).unwrap();
    let e = integrate_energy(&trace).unwrap();
    assert!(
        rel_err(e.joules[CHANNEL_MACHINE], 600.0) < 1e-6,
        "constant: {} J",
        e.joules[CHANNEL_MACHINE]
    );

    let clock = VirtualClock::starting_at(0);
    let mut power = SyntheticPowerProvider::new(
        BTreeMap::from([(
            CHANNEL_MACHINE.to_string(),
            waveform(WaveformShape::Ramp, 0.0, 10.0, 10.0),
        )]),
        0,
    );
    let mut net = SyntheticNetworkProvider::new(0.0, 0.0, 0);
    let trace = sample_run(&mut power, &mut net, &clock, 100, &Deadline(10_000)).unwrap();
    let e = integrate_energy(&trace).unwrap();
    assert!(
        rel_err(e.joules[CHANNEL_MACHINE], 50.0) < 1e-9,
        "ramp: {} J",
        e.joules[CHANNEL_MACHINE]
    );

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 1 (integration oracle): PASS in {elapsed:?}");
}

fn factors_from(rng: &mut ChaCha8Rng) -> EmissionFactors {
    EmissionFactors {
        grid_intensity_kgco2e_per_kwh: rng.gen_range(0.0..2.0),
        network_use_kgco2e_per_gb: rng.gen_range(0.0..0.5),
        server_use_kgco2e_per_gb: rng.gen_range(0.0..0.5),
        network_embodied_kgco2e_per_gb: rng.gen_range(0.0..0.5),
        server_embodied_kgco2e_per_gb: rng.gen_range(0.0..0.5),
        source_label: "fuzz".into(),
    }
}

fn stats_of(energy_j: f64, bytes: f64, duration_s: f64) -> wattprint::analysis::UnitStats {
    let one = |mean| wattprint::analysis::StatSummary {
        mean,
        sample_std: Some(0.0),
        n: 5,
    };
    wattprint::analysis::UnitStats {
        unit: "u".into(),
        per_channel_energy_j: BTreeMap::from([(CHANNEL_MACHINE.to_string(), one(energy_j))]),
        bytes: one(bytes),
        duration_s: one(duration_s),
        partial_channels: Default::default(),
    }
}

// 2. Emission arithmetic against direct re-computation, >= 1000 cases, < 5 s.
#[test]
fn criterion_2_emission_arithmetic_oracle() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC02E);
    for _ in 0..1000 {
        let factors = factors_from(&mut rng);
        let machine = MachineProfile {
            embodied_total_kgco2e: rng.gen_range(0.0..1000.0),
            lifetime_s: rng.gen_range(1e6..1e9),
            usage_share: rng.gen_range(0.0..1.0),
        };
        let energy_j = rng.gen_range(0.0..1e7);
        let bytes = rng.gen_range(0.0..1e10);
        let duration_s = rng.gen_range(0.0..1e4);

        let kwh = energy_j / 3.6e6;
        let direct_use = kwh * factors.grid_intensity_kgco2e_per_kwh;
        assert!(rel_err(use_phase_emissions(kwh, &factors).unwrap(), direct_use) < 1e-12);

        let gb = bytes / 1e9;
        let traffic = network_server_emissions(bytes, &factors).unwrap();
        assert!(rel_err(traffic.network_kgco2e, gb * factors.network_use_kgco2e_per_gb) < 1e-12);
        assert!(rel_err(traffic.server_kgco2e, gb * factors.server_use_kgco2e_per_gb) < 1e-12);
        let embodied = embodied_eol_emissions(bytes, &factors).unwrap();
        assert!(
            rel_err(embodied.network_kgco2e, gb * factors.network_embodied_kgco2e_per_gb)
                < 1e-12
        );
        assert!(
            rel_err(embodied.server_kgco2e, gb * factors.server_embodied_kgco2e_per_gb) < 1e-12
        );

        // total is the component sum
        let b = total_footprint(&stats_of(energy_j, bytes, duration_s), &factors, &machine)
            .unwrap();
        let sum = b.user_use_kgco2e
            + b.network_use_kgco2e
            + b.server_use_kgco2e
            + b.network_embodied_eol_kgco2e
            + b.server_embodied_eol_kgco2e
            + b.user_embodied_kgco2e;
        assert!(rel_err(b.total_kgco2e, sum) < 1e-12);

        // additivity over summed stats
        let e2 = rng.gen_range(0.0..1e7);
        let by2 = rng.gen_range(0.0..1e10);
        let d2 = rng.gen_range(0.0..1e4);
        let b2 = total_footprint(&stats_of(e2, by2, d2), &factors, &machine).unwrap();
        let b12 = total_footprint(
            &stats_of(energy_j + e2, bytes + by2, duration_s + d2),
            &factors,
            &machine,
        )
        .unwrap();
        assert!(rel_err(b12.total_kgco2e, b.total_kgco2e + b2.total_kgco2e) < 1e-9);
        assert!(
            rel_err(b12.user_use_kgco2e, b.user_use_kgco2e + b2.user_use_kgco2e) < 1e-9
        );
    }

    // zero-factor isolation: one nonzero knob -> exactly one nonzero component
    let zero = EmissionFactors {
        grid_intensity_kgco2e_per_kwh: 0.0,
        network_use_kgco2e_per_gb: 0.0,
        server_use_kgco2e_per_gb: 0.0,
        network_embodied_kgco2e_per_gb: 0.0,
        server_embodied_kgco2e_per_gb: 0.0,
        source_label: "zero".into(),
    };
    let idle_machine = MachineProfile {
        embodied_total_kgco2e: 300.0,
        lifetime_s: 1e8,
        usage_share: 0.0,
    };
    let stats = stats_of(3.6e6, 1e9, 100.0);
    let isolating: Vec<(EmissionFactors, MachineProfile)> = vec![
        (
            EmissionFactors {
                grid_intensity_kgco2e_per_kwh: 0.5,
                ..zero.clone()
            },
            idle_machine.clone(),
        ),
        (
            EmissionFactors {
                network_use_kgco2e_per_gb: 0.5,
                ..zero.clone()
            },
            idle_machine.clone(),
        ),
        (
            EmissionFactors {
                server_use_kgco2e_per_gb: 0.5,
                ..zero.clone()
            },
            idle_machine.clone(),
        ),
        (
            EmissionFactors {
                network_embodied_kgco2e_per_gb: 0.5,
                ..zero.clone()
            },
            idle_machine.clone(),
        ),
        (
            EmissionFactors {
                server_embodied_kgco2e_per_gb: 0.5,
                ..zero.clone()
            },
            idle_machine.clone(),
        ),
        (
            zero.clone(),
            MachineProfile {
                usage_share: 1.0,
                ..idle_machine.clone()
            },
        ),
    ];
    for (factors, machine) in &isolating {
        let b = total_footprint(&stats, factors, machine).unwrap();
        let components = [
            b.user_use_kgco2e,
            b.network_use_kgco2e,
            b.server_use_kgco2e,
            b.network_embodied_eol_kgco2e,
            b.server_embodied_eol_kgco2e,
            b.user_embodied_kgco2e,
        ];
        let nonzero = components.iter().filter(|c| **c > 0.0).count();
        assert_eq!(nonzero, 1, "components: {components:?}");
        assert!(rel_err(b.total_kgco2e, components.iter().sum()) < 1e-12);
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("criterion 2 (emission arithmetic oracle): PASS in {elapsed:?}");
}

// 3. Statistics oracle: fixed hand-computed case plus antisymmetry.
#[test]
fn criterion_3_statistics_oracle() {
    use wattprint::analysis::{CampaignStats, StatSummary, UnitStats};
    use wattprint::model::{NetworkSource, PowerSample, ResourceTrace, RunRecord};

    let records: Vec<RunRecord> = (1..=5)
        .map(|i| {
            let w = i as f64;
            let power = vec![
                PowerSample {
                    t_ms: 0,
                    channels: BTreeMap::from([(CHANNEL_MACHINE.to_string(), w)]),
                },
                PowerSample {
                    t_ms: 1000,
                    channels: BTreeMap::from([(CHANNEL_MACHINE.to_string(), w)]),
                },
            ];
            RunRecord {
                unit: "U".into(),
                configuration: "cfg".into(),
                trace: ResourceTrace::new(power, vec![], 0, 1000).unwrap(),
                energy_j: BTreeMap::from([(CHANNEL_MACHINE.to_string(), i as f64)]),
                partial_channels: vec![],
                bytes_total: 0,
                run_index: i as u32,
                network_source: NetworkSource::Synthetic,
            }
        })
        .collect();
    let stats = aggregate_runs(&records).unwrap();
    let s = &stats.per_channel_energy_j[CHANNEL_MACHINE];
    assert!(rel_err(s.mean, 3.0) < 1e-9);
    assert!(rel_err(s.sample_std.unwrap(), 2.5f64.sqrt()) < 1e-9);

    let mut rng = ChaCha8Rng::seed_from_u64(0x57A7);
    for _ in 0..500 {
        let mk = |label: &str, rng: &mut ChaCha8Rng| {
            let per_unit: BTreeMap<String, UnitStats> = ["A", "B", "C"]
                .iter()
                .map(|name| {
                    (
                        name.to_string(),
                        UnitStats {
                            unit: name.to_string(),
                            per_channel_energy_j: BTreeMap::from([(
                                CHANNEL_MACHINE.to_string(),
                                StatSummary {
                                    mean: rng.gen_range(0.001..100.0),
                                    sample_std: Some(rng.gen_range(0.0..5.0)),
                                    n: 5,
                                },
                            )]),
                            bytes: StatSummary {
                                mean: rng.gen_range(0.0..1e6),
                                sample_std: Some(0.0),
                                n: 5,
                            },
                            duration_s: StatSummary {
                                mean: 1.0,
                                sample_std: Some(0.0),
                                n: 5,
                            },
                            partial_channels: Default::default(),
                        },
                    )
                })
                .collect();
            CampaignStats {
                label: label.into(),
                per_unit,
                per_unit_emissions: BTreeMap::new(),
            }
        };
        let a = mk("a", &mut rng);
        let b = mk("b", &mut rng);
        let ab = compare(&a, &b).unwrap();
        let ba = compare(&b, &a).unwrap();
        for (unit, fwd) in &ab.per_unit {
            let rev = &ba.per_unit[unit];
            for (ch, d) in &fwd.delta_energy_j {
                assert!(rel_err(*d, -rev.delta_energy_j[ch]) < 1e-12);
            }
            assert!(rel_err(fwd.delta_bytes, -rev.delta_bytes) < 1e-12);
        }
    }
    println!("criterion 3 (statistics oracle): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 4: protocol fuzzing with an independent conformance oracle.
// ---------------------------------------------------------------------------

/// Conformance re-derived from the protocol definition, independent of the
/// production parser.
fn stream_conforms(lines: &[String]) -> bool {
    enum Ev {
        Ready,
        Start(String, u64),
        End(String),
        Net,
        Done,
        Err,
    }
    let mut events = Vec::new();
    for line in lines {
        let tokens: Vec<&str> = line
            .trim_end_matches(['\r', '\n'])
            .split(' ')
            .filter(|t| !t.is_empty())
            .collect();
        let ev = match tokens.as_slice() {
            ["READY"] => Ev::Ready,
            ["STEP", name, "START", t] => match t.parse::<u64>() {
                Ok(t) => Ev::Start(name.to_string(), t),
                Err(_) => return false,
            },
            ["STEP", name, "END", t] => {
                if t.parse::<u64>().is_err() {
                    return false;
                }
                Ev::End(name.to_string())
            }
            ["NET", a, b] => {
                if a.parse::<u64>().is_err() || b.parse::<u64>().is_err() {
                    return false;
                }
                Ev::Net
            }
            ["DONE", code] => {
                if code.parse::<i32>().is_err() {
                    return false;
                }
                Ev::Done
            }
            ["ERR", rest @ ..] if !rest.is_empty() => Ev::Err,
            _ => return false,
        };
        events.push(ev);
    }
    let mut ready = false;
    let mut open: Option<String> = None;
    let mut terminated = false;
    let mut last_start: Option<u64> = None;
    for ev in events {
        if terminated {
            return false;
        }
        match ev {
            Ev::Ready => {
                if ready {
                    return false;
                }
                ready = true;
            }
            Ev::Start(name, t) => {
                if !ready || open.is_some() {
                    return false;
                }
                if let Some(prev) = last_start {
                    if t < prev {
                        return false;
                    }
                }
                last_start = Some(t);
                open = Some(name);
            }
            Ev::End(name) => {
                if !ready {
                    return false;
                }
                match &open {
                    Some(o) if *o == name => open = None,
                    _ => return false,
                }
            }
            Ev::Net => {
                if !ready {
                    return false;
                }
            }
            Ev::Done => {
                if !ready || open.is_some() {
                    return false;
                }
                terminated = true;
            }
            Ev::Err => {
                if !ready {
                    return false;
                }
                terminated = true;
            }
        }
    }
    terminated
}

fn random_valid_stream(rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut lines = vec!["READY".to_string()];
    let mut t: u64 = 0;
    let n_steps = rng.gen_range(0..5);
    for i in 0..n_steps {
        lines.push(format!("STEP s{i} START {t}"));
        t += rng.gen_range(1..500);
        if rng.gen_bool(0.3) {
            lines.push(format!(
                "NET {} {}",
                rng.gen_range(0u64..1_000_000),
                rng.gen_range(0u64..1_000_000)
            ));
        }
        lines.push(format!("STEP s{i} END {t}"));
    }
    if rng.gen_bool(0.9) {
        lines.push("DONE 0".to_string());
    } else {
        lines.push("ERR something went wrong".to_string());
    }
    lines
}

fn mutate_stream(rng: &mut ChaCha8Rng, lines: &mut Vec<String>) {
    match rng.gen_range(0..7) {
        0 if lines.len() > 1 => {
            let i = rng.gen_range(0..lines.len());
            lines.remove(i);
        }
        1 => {
            let i = rng.gen_range(0..lines.len());
            let line = lines[i].clone();
            lines.insert(i, line);
        }
        2 if lines.len() > 1 => {
            let i = rng.gen_range(0..lines.len());
            let j = rng.gen_range(0..lines.len());
            lines.swap(i, j);
        }
        3 => {
            let keep = rng.gen_range(0..=lines.len());
            lines.truncate(keep);
            if lines.is_empty() {
                lines.push(String::new());
            }
        }
        4 => {
            let i = rng.gen_range(0..lines.len());
            let mut tokens: Vec<String> =
                lines[i].split(' ').map(|s| s.to_string()).collect();
            let j = rng.gen_range(0..tokens.len());
            tokens[j] = ["XX", "-3", "", "START", "18446744073709551616"]
                [rng.gen_range(0..5)]
            .to_string();
            lines[i] = tokens.join(" ");
        }
        5 => {
            let i = rng.gen_range(0..=lines.len());
            let junk = [
                "HELLO",
                "STEP lonely END 99",
                "NET 1",
                "DONE",
                "READY",
                "STEP x START 5 extra",
            ][rng.gen_range(0..6)];
            lines.insert(i, junk.to_string());
        }
        _ => {
            lines.push("NET 10 20".to_string());
        }
    }
}

// 4. >= 10,000 mutated streams: parser verdict matches the independent
//    oracle, never panics, < 30 s.
#[test]
fn criterion_4_protocol_fuzzing() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF422);
    let mut nonconforming = 0usize;
    for _ in 0..10_000 {
        let mut lines = random_valid_stream(&mut rng);
        for _ in 0..rng.gen_range(0..=3) {
            mutate_stream(&mut rng, &mut lines);
        }
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let parser_accepts = validate_stream(&refs).is_ok();
        let oracle_accepts = stream_conforms(&lines);
        assert_eq!(
            parser_accepts, oracle_accepts,
            "verdict mismatch on stream: {lines:?}"
        );
        if !oracle_accepts {
            nonconforming += 1;
        }
    }
    assert!(
        nonconforming > 1000,
        "fuzzer produced too few non-conforming streams ({nonconforming})"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "criterion 4 (protocol fuzzing): PASS, {nonconforming} non-conforming streams rejected in {elapsed:?}"
    );
}

fn run_report(
    scenario: &str,
    factors: &str,
    machine: &str,
    config: &str,
    out: &std::path::Path,
) {
    let status = Command::new(common::harness_bin())
        .args([
            "run",
            "--scenario",
            scenario,
            "--factors",
            factors,
            "--machine",
            machine,
            "--config",
            config,
            "--out",
            &out.display().to_string(),
            "--no-timestamp",
        ])
        .status()
        .unwrap();
    assert!(status.success(), "run failed for config {config}");
}

// 5. Hermetic end-to-end: seven units x 5 runs x two configurations with
//    identical waveforms; all comparison deltas are 0, < 2 min.
#[test]
fn criterion_5_hermetic_end_to_end() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let fixture = ScenarioFixture {
        with_composite: true,
        ..Default::default()
    };
    let (s, f, m) = fixture.write(dir.path());
    let (s, f, m) = (
        s.display().to_string(),
        f.display().to_string(),
        m.display().to_string(),
    );
    let report_off = dir.path().join("report-off.json");
    let report_on = dir.path().join("report-on.json");
    run_report(&s, &f, &m, "adblock-off", &report_off);
    run_report(&s, &f, &m, "adblock-on", &report_on);

    // both reports carry all seven units x 5 runs plus the composite
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_off).unwrap()).unwrap();
    assert_eq!(doc["scenario"]["n_runs"], 5);
    assert_eq!(doc["per_unit"].as_object().unwrap().len(), 8);
    for (name, _) in common::SEVEN_UNITS {
        assert_eq!(doc["per_unit"][name]["energy_j"]["machine"]["n"], 5, "{name}");
    }
    assert_eq!(doc["per_unit"]["Session"]["composite"], true);

    let cmp_path = dir.path().join("comparison.json");
    let status = Command::new(common::harness_bin())
        .args([
            "compare",
            &report_off.display().to_string(),
            &report_on.display().to_string(),
            "--out",
            &cmp_path.display().to_string(),
            "--no-timestamp",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let cmp: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&cmp_path).unwrap()).unwrap();
    for (unit, body) in cmp["per_unit"].as_object().unwrap() {
        for (ch, d) in body["delta_energy_j"].as_object().unwrap() {
            let d = d.as_f64().unwrap();
            assert!(d.abs() < 1e-9, "{unit}/{ch} delta {d}");
        }
        assert!(body["delta_bytes"].as_f64().unwrap().abs() < 1e-9);
        let total = body["delta_emissions_kgco2e"]["total_kgco2e"].as_f64().unwrap();
        assert!(total.abs() < 1e-9, "{unit} emission delta {total}");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!("criterion 5 (hermetic end-to-end): PASS in {elapsed:?}");
}

// 6. Determinism: two executions yield byte-identical reports.
#[test]
fn criterion_6_byte_identical_reports() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let fixture = ScenarioFixture::default();
    let (s, f, m) = fixture.write(dir.path());
    let (s, f, m) = (
        s.display().to_string(),
        f.display().to_string(),
        m.display().to_string(),
    );
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    run_report(&s, &f, &m, "adblock-on", &first);
    run_report(&s, &f, &m, "adblock-on", &second);
    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "report files differ between executions");
    println!(
        "criterion 6 (deterministic reports): PASS in {:?}",
        started.elapsed()
    );
}

// 7. Extrapolation anchor: 333 billion daily interactions at 1e-6 kWh each.
#[test]
fn criterion_7_extrapolation_anchor() {
    let annual = wattprint::analysis::extrapolate(1e-6, 0.0, 3.33e11).unwrap();
    let expected = 1e-6 * 3.33e11 * 365.0;
    assert!(rel_err(annual.energy_kwh_per_year, expected) < 1e-6);
    assert!(rel_err(annual.energy_kwh_per_year, 1.21545e8) < 1e-6);
    println!("criterion 7 (extrapolation anchor): PASS");
}
