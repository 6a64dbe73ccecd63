use serde::Serialize;

use crate::geometry::CurvatureBundle;

use super::{FlowError, FlowParams, FlowState, Gauge};

/// Read-only view of the run handed to monitors.
pub struct Snapshot<'a> {
    pub state: &'a FlowState,
    pub bundle: &'a CurvatureBundle,
    pub params: &'a FlowParams,
    pub gauge: &'a Gauge,
    /// State one step earlier, absent for the initial sample.
    pub previous: Option<&'a FlowState>,
    pub step: usize,
}

/// A diagnostic producing a fixed set of columns per sample.
pub trait Monitor: Send {
    fn columns(&self) -> Vec<String>;
    fn sample(&mut self, snap: &Snapshot<'_>) -> Result<Vec<f64>, FlowError>;
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Aborted { kind: String, message: String, t: f64 },
}

/// Named time series sampled along a run. The first column is always `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonitorSeries {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub termination: Termination,
}

impl MonitorSeries {
    pub fn new(columns: Vec<String>) -> Self {
        MonitorSeries { columns, rows: Vec::new(), termination: Termination::Completed }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }
}
