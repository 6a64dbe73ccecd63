//! Deterministic band-limited initial data.

use crate::grid_fields::{FieldError, GridSpec, MetricField, ScalarField, Topology};

/// Default amplitude of metric perturbations.
pub const METRIC_AMPLITUDE: f64 = 0.05;
/// Default amplitude of the scalar field.
pub const PHI_AMPLITUDE: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricPreset {
    Flat,
    /// `δ + ε·(low trig modes)` in every component.
    Bump,
    /// `e^{2u}δ` with `u = ε sin(kx) sin(ky)`.
    Conformal,
    /// `(dx² + dy²)/(1 + x² + y²)` on a patch.
    Cigar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhiPreset {
    Zero,
    /// `A sin(kx)`.
    Sin,
    /// A few modes along every axis.
    Mix,
    /// Cigar potential `−ln(1 + x² + y²)`.
    CigarPotential,
}

impl MetricPreset {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "flat" => MetricPreset::Flat,
            "bump" => MetricPreset::Bump,
            "conformal" => MetricPreset::Conformal,
            "cigar" => MetricPreset::Cigar,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricPreset::Flat => "flat",
            MetricPreset::Bump => "bump",
            MetricPreset::Conformal => "conformal",
            MetricPreset::Cigar => "cigar",
        }
    }

    pub fn build(self, grid: GridSpec, amplitude: f64, k: f64) -> Result<MetricField, FieldError> {
        match self {
            MetricPreset::Flat => Ok(MetricField::flat(grid)),
            MetricPreset::Bump => bump_metric(grid, amplitude, k),
            MetricPreset::Conformal => {
                Ok(MetricField::conformal(&ScalarField::from_fn(grid, |x| amplitude * (k * x[0]).sin() * (k * x[1]).sin())))
            }
            MetricPreset::Cigar => cigar_metric(grid),
        }
    }
}

impl PhiPreset {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "zero" => PhiPreset::Zero,
            "sin" => PhiPreset::Sin,
            "mix" => PhiPreset::Mix,
            "cigar" => PhiPreset::CigarPotential,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            PhiPreset::Zero => "zero",
            PhiPreset::Sin => "sin",
            PhiPreset::Mix => "mix",
            PhiPreset::CigarPotential => "cigar",
        }
    }

    pub fn build(self, grid: GridSpec, amplitude: f64, k: f64) -> ScalarField {
        match self {
            PhiPreset::Zero => ScalarField::zeros(grid),
            PhiPreset::Sin => ScalarField::from_fn(grid, |x| amplitude * (k * x[0]).sin()),
            PhiPreset::Mix => phi_mix(grid, amplitude, k),
            PhiPreset::CigarPotential => cigar_potential(grid),
        }
    }
}

/// Symmetric perturbation of the identity by trig modes of wavenumber `k`.
pub fn bump_metric(grid: GridSpec, eps: f64, k: f64) -> Result<MetricField, FieldError> {
    let dim = grid.dim();
    MetricField::from_positions(grid, move |i, j, x| {
        let (s, c) = (|v: f64| (k * v).sin(), |v: f64| (k * v).cos());
        let pert = if dim == 2 {
            match (i, j) {
                (0, 0) => s(x[0]) * c(x[1]),
                (1, 1) => (k * x[0] + 0.4).cos() * s(x[1]),
                _ => 0.5 * (k * (x[0] + x[1])).sin(),
            }
        } else {
            match (i.min(j), i.max(j)) {
                (0, 0) => s(x[0]) * c(x[1]),
                (1, 1) => s(x[1]) * c(x[2]),
                (2, 2) => s(x[2]) * c(x[0]),
                (0, 1) => 0.5 * (k * (x[0] + x[2])).sin(),
                (0, 2) => 0.5 * (k * (x[1] + x[2])).cos(),
                _ => 0.5 * (k * (x[0] + x[1]) + 0.3).sin(),
            }
        };
        (if i == j { 1.0 } else { 0.0 }) + eps * pert
    })
}

/// Multi-axis scalar data `A(sin kx + ½cos(ky + 0.7) [+ ⅓ sin(kz + 1.1)])`.
pub fn phi_mix(grid: GridSpec, amplitude: f64, k: f64) -> ScalarField {
    let dim = grid.dim();
    ScalarField::from_fn(grid, |x| {
        let mut v = (k * x[0]).sin() + 0.5 * (k * x[1] + 0.7).cos();
        if dim == 3 {
            v += (k * x[2] + 1.1).sin() / 3.0;
        }
        amplitude * v
    })
}

fn require_planar_patch(grid: &GridSpec) -> Result<(), FieldError> {
    if grid.dim() != 2 || grid.topology() != Topology::InteriorPatch {
        return Err(FieldError::BadGrid("the cigar lives on a 2D interior patch".into()));
    }
    Ok(())
}

/// Hamilton's cigar `(dx² + dy²)/(1 + x² + y²)`.
pub fn cigar_metric(grid: GridSpec) -> Result<MetricField, FieldError> {
    require_planar_patch(&grid)?;
    MetricField::from_positions(grid, |i, j, x| {
        if i == j {
            1.0 / (1.0 + x[0] * x[0] + x[1] * x[1])
        } else {
            0.0
        }
    })
}

/// Cigar potential `f = −ln(1 + x² + y²)`, solving `Ric + ∇²f = 0`.
pub fn cigar_potential(grid: GridSpec) -> ScalarField {
    ScalarField::from_fn(grid, |x| -(1.0 + x[0] * x[0] + x[1] * x[1]).ln())
}

/// Exact cigar scalar curvature `4/(1 + x² + y²)`.
pub fn cigar_scalar_curvature(x: [f64; 3]) -> f64 {
    4.0 / (1.0 + x[0] * x[0] + x[1] * x[1])
}
