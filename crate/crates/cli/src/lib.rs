//! Configuration, scenario orchestration and artifact output for the
//! `gflow` command line tool.

pub mod config;
pub mod output;
pub mod report;
pub mod scenario;

pub use config::{parse_config, parse_config_str, ConfigError, ExperimentConfig, Scenario};
pub use report::{exit, Check, Report, Status, SCHEMA};
pub use scenario::{execute, run_scenario, Outcome};
