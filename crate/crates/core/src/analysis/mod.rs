//! Parameter classification, gradient-bound envelopes and run diagnostics.

mod classify;
mod compare;
mod diagnostics;
mod envelope;
mod monitors;

pub use classify::{case_of, classify, classify_with, discriminant, CaseId, RegularityReport};
pub use compare::{compare_invariants, ColumnDeviation, InvariantComparison};
pub use diagnostics::{
    decay_monitor, metric_sandwich, perelman_entropy, perelman_entropy_with, shi_delta, DecayColumn, DecayReport,
    Sandwich, DECAY_COLUMNS,
};
pub use envelope::{envelope, verify_envelope, BoundEnvelope, EnvelopeVerdict, Violation};
pub use monitors::{
    initial_gradient_bound, standard_monitors, CurvatureMonitor, DecayMonitor, EntropyMonitor, GradientMonitor,
    MonitorConfig, SandwichMonitor, VolumeMonitor, STANDARD_COLUMNS,
};

use thiserror::Error;

use crate::flow::FlowError;
use crate::grid_fields::FieldError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("c̃ must be non-negative, got {0}")]
    NegativeCtilde(f64),
    #[error("τ must be positive, got {0}")]
    NonPositiveTau(f64),
    #[error("background metric is degenerate at point {0}")]
    DegenerateBackground(usize),
    #[error("sandwich power must be at least 1")]
    BadPower,
    #[error("series has no column `{0}`")]
    MissingColumn(String),
    #[error("entropy needs a periodic grid")]
    NotCompact,
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl From<AnalysisError> for FlowError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Field(f) => FlowError::Field(f),
            other => FlowError::BadControl(other.to_string()),
        }
    }
}
