//! Config-driven runs of the wavewall model: constants, scenarios, sweeps,
//! CSV, SVG plots, reports and checkpoints.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod config;
pub mod output;
pub mod plots;
pub mod scenario;
pub mod sweep;

pub use config::{load_config, parse_config, ConfigError, RunConfig, ScenarioKind};
pub use scenario::{run_scenario, Check, HarnessError, ScenarioOutcome};
