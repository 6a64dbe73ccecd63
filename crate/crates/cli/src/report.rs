//! The `report.json` document.

use std::collections::BTreeMap;

use gflow_core::flow::Termination;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: &str = "gflow-report/1";

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const CHECK_FAILED: i32 = 2;
    pub const NUMERICAL_ABORT: i32 = 3;
    pub const CONFIG: i32 = 4;
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Named measured values and limits; non-finite values serialize as `null`.
    pub values: BTreeMap<String, f64>,
}

impl Check {
    pub fn new(name: &str, pass: bool, values: &[(&str, f64)]) -> Self {
        Check { name: name.to_string(), pass, values: values.iter().map(|&(k, v)| (k.to_string(), v)).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    CheckFailed,
    Aborted,
    ConfigError,
}

/// Fields serialize in declaration order and every map is sorted, so equal
/// runs produce identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub scenario: String,
    pub status: Status,
    pub exit_code: i32,
    pub config: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Scenario-specific payload.
    pub results: Value,
}

impl Report {
    pub fn new(scenario: &str, config: BTreeMap<String, Value>) -> Self {
        Report {
            schema: SCHEMA,
            scenario: scenario.to_string(),
            status: Status::Pass,
            exit_code: exit::OK,
            config,
            checks: Vec::new(),
            termination: None,
            error: None,
            results: Value::Null,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Sets status and exit code from the termination and the checks.
    pub fn finalize(&mut self) {
        let aborted = matches!(self.termination, Some(Termination::Aborted { .. }));
        (self.status, self.exit_code) = if aborted {
            (Status::Aborted, exit::NUMERICAL_ABORT)
        } else if self.all_passed() {
            (Status::Pass, exit::OK)
        } else {
            (Status::CheckFailed, exit::CHECK_FAILED)
        };
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serializes");
        bytes.push(b'\n');
        bytes
    }
}
