//! Command-line scenario runner for the `aqm-core` machine models.
//!
//! A run reads one TOML scenario file, validates it completely, computes the
//! scenario and writes plot-ready CSV tables plus a JSON report.

pub mod cli;
pub mod config;
pub mod report;
pub mod scenarios;
pub mod table;

pub use config::{parse_config, ConfigError, Resolved, ScenarioConfig, ScenarioKind};
pub use report::RunReport;
pub use scenarios::{run_scenario, RunError, RunOptions};
pub use table::{emit_csv, Column, Table};
