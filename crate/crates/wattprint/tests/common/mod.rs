#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub fn harness_bin() -> &'static str {
    env!("CARGO_BIN_EXE_wattprint")
}

pub fn mock_driver_bin() -> &'static str {
    env!("CARGO_BIN_EXE_wattprint-mock-driver")
}

/// The seven basic functional units of a web-mail scenario.
pub const SEVEN_UNITS: &[(&str, &[&str])] = &[
    ("Idle", &["wait"]),
    ("Login", &["open", "submit"]),
    ("Logout", &["menu", "confirm"]),
    ("No attachment", &["compose", "send"]),
    ("Attachment", &["compose", "attach", "send"]),
    ("Reply", &["open", "reply", "send"]),
    ("Delete", &["select", "delete"]),
];

pub struct ScenarioFixture {
    pub units: Vec<(String, Vec<String>)>,
    pub duration_s: f64,
    pub n_runs: u32,
    pub sampling_interval_ms: u64,
    pub bytes_in: u64,
    pub bytes_out: u64,
    /// Extra arguments appended to the mock-driver command.
    pub driver_extra: String,
    /// Add a "Session" composite of Login+Reply+Logout when those exist.
    pub with_composite: bool,
}

impl Default for ScenarioFixture {
    fn default() -> Self {
        ScenarioFixture {
            units: SEVEN_UNITS
                .iter()
                .map(|(n, s)| {
                    (
                        n.to_string(),
                        s.iter().map(|x| x.to_string()).collect(),
                    )
                })
                .collect(),
            duration_s: 0.4,
            n_runs: 5,
            sampling_interval_ms: 50,
            bytes_in: 1_000_000,
            bytes_out: 200_000,
            driver_extra: String::new(),
            with_composite: false,
        }
    }
}

impl ScenarioFixture {
    pub fn small() -> Self {
        ScenarioFixture {
            units: vec![
                ("Idle".into(), vec!["wait".into()]),
                ("Login".into(), vec!["open".into(), "submit".into()]),
            ],
            n_runs: 2,
            ..Default::default()
        }
    }

    /// Write scenario, factor, and machine files into `dir`; returns their
    /// paths as (scenario, factors, machine).
    pub fn write(&self, dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
        let scenario_path = dir.join("scenario.toml");
        let mut s = String::new();
        writeln!(s, "services = [\"mockmail\"]").unwrap();
        writeln!(s, "n_runs = {}", self.n_runs).unwrap();
        writeln!(s, "sampling_interval_ms = {}", self.sampling_interval_ms).unwrap();
        writeln!(s, "cooldown_s = 0.0").unwrap();
        writeln!(
            s,
            "driver_command = \"{} --scenario {} --bytes-in {} --bytes-out {}{}{}\"",
            mock_driver_bin(),
            scenario_path.display(),
            self.bytes_in,
            self.bytes_out,
            if self.driver_extra.is_empty() { "" } else { " " },
            self.driver_extra,
        )
        .unwrap();
        for label in ["adblock-on", "adblock-off"] {
            writeln!(s, "\n[[configurations]]").unwrap();
            writeln!(s, "label = \"{label}\"").unwrap();
            writeln!(s, "ad_blocker = {}", label == "adblock-on").unwrap();
            writeln!(s, "cookie_blocking = false").unwrap();
            writeln!(s, "provider = \"mockmail\"").unwrap();
        }
        for (name, steps) in &self.units {
            writeln!(s, "\n[[units]]").unwrap();
            writeln!(s, "name = \"{name}\"").unwrap();
            let quoted: Vec<String> = steps.iter().map(|x| format!("\"{x}\"")).collect();
            writeln!(s, "steps = [{}]", quoted.join(", ")).unwrap();
            writeln!(s, "target_duration_s = {:?}", self.duration_s).unwrap();
        }
        if self.with_composite {
            writeln!(s, "\n[[units]]").unwrap();
            writeln!(s, "name = \"Session\"").unwrap();
            writeln!(s, "steps = []").unwrap();
            writeln!(s, "target_duration_s = {:?}", self.duration_s * 3.0).unwrap();
            writeln!(s, "composite_of = [\"Login\", \"Reply\", \"Logout\"]").unwrap();
        }
        writeln!(s, "\n[power_provider]").unwrap();
        writeln!(s, "kind = \"synthetic\"").unwrap();
        writeln!(s, "\n[power_provider.channels.machine]").unwrap();
        writeln!(s, "shape = \"constant\"").unwrap();
        writeln!(s, "amplitude_start_w = 10.0").unwrap();
        writeln!(s, "\n[power_provider.channels.cpu]").unwrap();
        writeln!(s, "shape = \"constant\"").unwrap();
        writeln!(s, "amplitude_start_w = 3.0").unwrap();
        writeln!(s, "\n[network_provider]").unwrap();
        writeln!(s, "kind = \"synthetic\"").unwrap();
        std::fs::write(&scenario_path, s).unwrap();

        let factors_path = dir.join("factors.toml");
        std::fs::write(&factors_path, factors_toml()).unwrap();
        let machine_path = dir.join("machine.toml");
        std::fs::write(&machine_path, machine_toml()).unwrap();
        (scenario_path, factors_path, machine_path)
    }
}

pub fn factors_toml() -> &'static str {
    r#"grid_intensity_kgco2e_per_kwh = 0.25
network_use_kgco2e_per_gb = 0.01
server_use_kgco2e_per_gb = 0.02
network_embodied_kgco2e_per_gb = 0.005
server_embodied_kgco2e_per_gb = 0.007
source_label = "ICT sector study placeholder"
"#
}

pub fn machine_toml() -> &'static str {
    r#"embodied_total_kgco2e = 300.0
lifetime_s = 126144000.0
usage_share = 1.0
"#
}
