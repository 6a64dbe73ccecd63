//! Time integration of the coupled metric/scalar-field flow
//! `∂g = −2Ric + 2α₁∇φ⊗∇φ + 2α₂∇²φ`, `∂φ = Δφ + β₁|∇φ|² + β₂φ`,
//! directly or in the De Turck gauge.

mod integrate;
mod rhs;
mod series;

pub use integrate::{
    cfl_limit, run, step, step_count, volume_form, volume_rate, volume_rate_residual, Scheme, StepControl,
};
pub use rhs::{deturck_vector, lie_derivative_metric, rhs, rhs_deturck, rhs_direct, Background, Gauge, Rhs};
pub(crate) use integrate::volume_rate_with;
pub use series::{Monitor, MonitorSeries, Snapshot, Termination};

use serde::Serialize;
use thiserror::Error;

use crate::grid_fields::{FieldError, MetricField, ScalarField};

/// The quadruple `(α₁, α₂, β₁, β₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl FlowParams {
    pub fn new(alpha1: f64, alpha2: f64, beta1: f64, beta2: f64) -> Self {
        FlowParams { alpha1, alpha2, beta1, beta2 }
    }

    /// Plain Ricci flow, `(0, 0, 0, 0)`.
    pub fn ricci() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    /// List's flow, `(4, 0, 0, 0)`.
    pub fn list() -> Self {
        Self::new(4.0, 0.0, 0.0, 0.0)
    }

    /// The associated quadruple `(α₁, 0, β₁ − α₂, β₂)` whose flow is
    /// diffeomorphic to this one.
    pub fn reduced(&self) -> Self {
        Self::new(self.alpha1, 0.0, self.beta1 - self.alpha2, self.beta2)
    }

    pub fn is_finite(&self) -> bool {
        [self.alpha1, self.alpha2, self.beta1, self.beta2].iter().all(|v| v.is_finite())
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha1, self.alpha2, self.beta1, self.beta2]
    }
}

/// A snapshot `(g, φ, t)` of the flow.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub g: MetricField,
    pub phi: ScalarField,
    pub t: f64,
}

impl FlowState {
    pub fn new(g: MetricField, phi: ScalarField) -> Self {
        FlowState { g, phi, t: 0.0 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("metric lost positive definiteness at point {point}, t = {t}")]
    PositivityLost { point: usize, t: f64 },
    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("metric eigenvalue ratio {ratio:e} exceeds {limit:e} at t = {t}")]
    EigenRatioExceeded { ratio: f64, limit: f64, t: f64 },
    #[error("invalid step control: {0}")]
    BadControl(String),
    #[error("flows are integrated on periodic grids only")]
    NotPeriodic,
}

impl FlowError {
    /// Whether this is a numerical failure of the run (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            FlowError::PositivityLost { .. } | FlowError::CflViolation { .. } | FlowError::EigenRatioExceeded { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FlowError::Field(_) => "FieldError",
            FlowError::PositivityLost { .. } => "PositivityLost",
            FlowError::CflViolation { .. } => "CflViolation",
            FlowError::EigenRatioExceeded { .. } => "EigenRatioExceeded",
            FlowError::BadControl(_) => "BadControl",
            FlowError::NotPeriodic => "NotPeriodic",
        }
    }
}
