use std::f64::consts::PI;

use serde::Serialize;

use crate::flow::{FlowParams, MonitorSeries};
use crate::geometry::{covector_norm_sq, gradient, CurvatureBundle};
use crate::grid_fields::linalg::{det, generalized_eigenvalues};
use crate::grid_fields::{field_reduce, MetricField, Reduction, ScalarField};

use super::AnalysisError;

/// Extremes of `g` relative to `g̃`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sandwich {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `max_x Σᵢ λᵢ^{−n}`.
    pub u_n: f64,
}

/// Pointwise generalized eigenvalues of `g` with respect to `g̃`.
pub fn metric_sandwich(g: &MetricField, g_tilde: &MetricField, n: u32) -> Result<Sandwich, AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::BadPower);
    }
    let dim = g.grid().dim();
    let mut out = Sandwich { lambda_min: f64::INFINITY, lambda_max: f64::NEG_INFINITY, u_n: f64::NEG_INFINITY };
    for p in 0..g.grid().len() {
        let (a, b) = (g.matrix(p), g_tilde.matrix(p));
        let ev = if a == b {
            [1.0; 3]
        } else {
            generalized_eigenvalues(&a, &b, dim).ok_or(AnalysisError::DegenerateBackground(p))?
        };
        let ev = &ev[..dim];
        out.lambda_min = out.lambda_min.min(ev[0]);
        out.lambda_max = out.lambda_max.max(ev[dim - 1]);
        out.u_n = out.u_n.max(ev.iter().map(|l| l.powi(-(n as i32))).sum());
    }
    Ok(out)
}

/// `δ = 1/(80000(1 + α₁² + β₁²)m¹⁰)`, the sandwich width in Shi-type estimates.
pub fn shi_delta(m: usize, params: &FlowParams) -> f64 {
    let (a, b) = (params.alpha1, params.beta1);
    1.0 / (80000.0 * (1.0 + a * a + b * b) * (m as f64).powi(10))
}

/// `W(g, f, τ) = ∫ [τ(R + |∇f|²) + f − m] e^{−f} (4πτ)^{−m/2} dV`.
pub fn perelman_entropy(g: &MetricField, f: &ScalarField, tau: f64) -> Result<f64, AnalysisError> {
    if !(tau > 0.0) {
        return Err(AnalysisError::NonPositiveTau(tau));
    }
    if !g.grid().is_periodic() {
        return Err(AnalysisError::NotCompact);
    }
    perelman_entropy_with(&CurvatureBundle::new(g)?, f, tau)
}

pub fn perelman_entropy_with(bundle: &CurvatureBundle, f: &ScalarField, tau: f64) -> Result<f64, AnalysisError> {
    if !(tau > 0.0) {
        return Err(AnalysisError::NonPositiveTau(tau));
    }
    let g = &bundle.conn.g;
    let m = g.grid().dim() as f64;
    let grad_sq = covector_norm_sq(&gradient(f)?, &bundle.conn.ginv);
    let norm = (4.0 * PI * tau).powf(-0.5 * m);
    let integrand = ScalarField::map_points(*g.grid(), grad_sq.margin().max(bundle.scal.margin()), |p| {
        let fp = f.at(p);
        (tau * (bundle.scal.at(p) + grad_sq.at(p)) + fp - m) * (-fp).exp() * norm
    });
    let dim = g.grid().dim();
    let vol = ScalarField::map_points(*g.grid(), 0, |p| det(&g.matrix(p), dim).sqrt());
    Ok(field_reduce(&integrand, Reduction::Integral, Some(&vol))?)
}

/// Decay columns `tⁿ·sup|∇ⁿRm|²` and `tⁿ·sup|∇ⁿ⁺²φ|²`, `n = 1, 2`.
pub const DECAY_COLUMNS: [&str; 4] = ["t_grad_rm_sq", "t2_grad2_rm_sq", "t_grad3_phi_sq", "t2_grad4_phi_sq"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayColumn {
    pub name: String,
    pub running_max: f64,
    pub first_quarter_max: f64,
    pub last_quarter_max: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub t_min: f64,
    pub samples: usize,
    pub columns: Vec<DecayColumn>,
    pub passed: bool,
}

/// No-growth test on every decay column present in `series`: over samples
/// with `t ≥ t_min`, the max over the last quarter may not exceed 1.5× the
/// max over the first quarter.
pub fn decay_monitor(series: &MonitorSeries, t_min: f64) -> DecayReport {
    let rows: Vec<&Vec<f64>> = series.rows.iter().filter(|r| r[0] >= t_min).collect();
    let quarter = rows.len().div_ceil(4).max(1);
    let columns: Vec<DecayColumn> = DECAY_COLUMNS
        .iter()
        .filter_map(|&name| {
            let k = series.column_index(name)?;
            let vals: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let max_of = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
            let (first, last) = if vals.is_empty() {
                (0.0, 0.0)
            } else {
                (max_of(&vals[..quarter.min(vals.len())]), max_of(&vals[vals.len().saturating_sub(quarter)..]))
            };
            let finite = vals.iter().all(|v| v.is_finite());
            Some(DecayColumn {
                name: name.to_string(),
                running_max: max_of(&vals),
                first_quarter_max: first,
                last_quarter_max: last,
                passed: finite && last <= 1.5 * first,
            })
        })
        .collect();
    let passed = columns.iter().all(|c| c.passed);
    DecayReport { t_min, samples: rows.len(), columns, passed }
}
