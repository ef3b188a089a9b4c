//! Replay providers: feed a previously recorded trace file back through the
//! sampler, losslessly.
//!
//! File format, newline-delimited UTF-8, sorted by t_ms:
//!   `P <t_ms> <channel>=<watts> [<channel>=<watts>...]`
//!   `N <t_ms> <bytes_in> <bytes_out>`

use std::collections::BTreeMap;
use std::path::Path;

use crate::model::{NetworkCounters, PowerSample};

use super::{NetworkProvider, PowerProvider, SamplingError};

pub fn parse_replay_file(
    content: &str,
) -> Result<(Vec<PowerSample>, Vec<NetworkCounters>), SamplingError> {
    let mut power = Vec::new();
    let mut network = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| SamplingError::ReplayParse {
            line: line_no,
            reason,
        };
        let mut tokens = line.split_whitespace();
        let tag = tokens.next().unwrap();
        match tag {
            "P" => {
                let t_ms: u64 = tokens
                    .next()
                    .ok_or_else(|| err("missing timestamp".into()))?
                    .parse()
                    .map_err(|e| err(format!("bad timestamp: {e}")))?;
                let mut channels = BTreeMap::new();
                for pair in tokens {
                    let (name, value) = pair
                        .split_once('=')
                        .ok_or_else(|| err(format!("expected channel=watts, got `{pair}`")))?;
                    let watts: f64 = value
                        .parse()
                        .map_err(|e| err(format!("bad watts for {name}: {e}")))?;
                    channels.insert(name.to_string(), watts);
                }
                if channels.is_empty() {
                    return Err(err("power record has no channels".into()));
                }
                if let Some(prev) = power.last() {
                    let prev: &PowerSample = prev;
                    if t_ms <= prev.t_ms {
                        return Err(err(format!(
                            "timestamps not strictly increasing ({} after {})",
                            t_ms, prev.t_ms
                        )));
                    }
                }
                power.push(PowerSample { t_ms, channels });
            }
            "N" => {
                let t_ms: u64 = tokens
                    .next()
                    .ok_or_else(|| err("missing timestamp".into()))?
                    .parse()
                    .map_err(|e| err(format!("bad timestamp: {e}")))?;
                let bytes_in: u64 = tokens
                    .next()
                    .ok_or_else(|| err("missing bytes_in".into()))?
                    .parse()
                    .map_err(|e| err(format!("bad bytes_in: {e}")))?;
                let bytes_out: u64 = tokens
                    .next()
                    .ok_or_else(|| err("missing bytes_out".into()))?
                    .parse()
                    .map_err(|e| err(format!("bad bytes_out: {e}")))?;
                if tokens.next().is_some() {
                    return Err(err("trailing tokens on network record".into()));
                }
                if let Some(prev) = network.last() {
                    let prev: &NetworkCounters = prev;
                    if t_ms <= prev.t_ms {
                        return Err(err("timestamps not strictly increasing".into()));
                    }
                }
                network.push(NetworkCounters {
                    t_ms,
                    bytes_in,
                    bytes_out,
                });
            }
            other => {
                return Err(err(format!("unknown record tag `{other}`")));
            }
        }
    }
    Ok((power, network))
}

/// Replays recorded power samples one per poll, byte-identical to the
/// recording, then reports exhaustion.
pub struct ReplayPowerProvider {
    samples: std::vec::IntoIter<PowerSample>,
}

impl ReplayPowerProvider {
    pub fn new(samples: Vec<PowerSample>) -> Self {
        ReplayPowerProvider {
            samples: samples.into_iter(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, SamplingError> {
        let content = std::fs::read_to_string(path)?;
        let (power, _) = parse_replay_file(&content)?;
        Ok(Self::new(power))
    }
}

impl PowerProvider for ReplayPowerProvider {
    fn poll(&mut self, _now_ms: u64) -> Result<Option<PowerSample>, SamplingError> {
        Ok(self.samples.next())
    }
}

pub struct ReplayNetworkProvider {
    counters: std::vec::IntoIter<NetworkCounters>,
}

impl ReplayNetworkProvider {
    pub fn new(counters: Vec<NetworkCounters>) -> Self {
        ReplayNetworkProvider {
            counters: counters.into_iter(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, SamplingError> {
        let content = std::fs::read_to_string(path)?;
        let (_, network) = parse_replay_file(&content)?;
        Ok(Self::new(network))
    }
}

impl NetworkProvider for ReplayNetworkProvider {
    fn poll(&mut self, _now_ms: u64) -> Result<Option<NetworkCounters>, SamplingError> {
        Ok(self.counters.next())
    }
}
