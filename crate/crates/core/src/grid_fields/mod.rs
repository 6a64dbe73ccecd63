//! Structured grids, field storage, finite difference stencils and reductions.

mod field;
mod grid;
pub mod linalg;
mod reduce;
mod stencil;

pub use field::{
    sym_count, sym_index, Index, MetricField, ScalarField, Slot, SymTensorField, TensorField, MAX_RANK,
};
pub use grid::{Accuracy, GridSpec, Topology, MIN_POINTS_PER_AXIS};
pub use reduce::{field_reduce, Reduction};
pub use stencil::{derivative_values, grown_margin, mixed_values, partial_derivative, partial_scalar, partial_sym};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at point {point}")]
    NonFinite { point: usize },
    #[error("metric is not positive definite at point {point} (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { point: usize, min_eigenvalue: f64 },
    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("derivative order {0} not supported")]
    UnsupportedOrder(u32),
    #[error("patch of {n} points per axis too small for a stencil margin of {margin}")]
    PatchTooSmall { n: usize, margin: usize },
    #[error("no valid points left to reduce over")]
    EmptyRegion,
    #[error("tensor shapes do not match: {0}")]
    ShapeMismatch(String),
}
