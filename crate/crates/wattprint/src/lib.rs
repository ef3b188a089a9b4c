//! wattprint: a measurement harness that quantifies the user-side energy
//! and greenhouse-gas footprint of scripted interactions with online
//! services, and allocates network/server and embodied/end-of-life emissions
//! from observed data traffic.
//!
//! The pipeline: a scenario file declares functional units (Login, Reply,
//! ...) and configurations (ad-blocker on/off, provider). An external driver
//! process executes each unit over a newline wire protocol while pluggable
//! providers sample power and network counters. Repeated runs are aggregated
//! into per-unit statistics, converted to emissions via user-supplied
//! factors, and written as machine-readable reports that can be compared
//! campaign against campaign.

pub mod analysis;
pub mod cli;
pub mod emissions;
pub mod model;
pub mod report;
pub mod sampling;
pub mod scenario;
