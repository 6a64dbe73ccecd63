//! Steady-soliton and stationary-pair residuals.

use crate::geometry::{covector_norm_sq, gradient, hessian, laplacian, CurvatureBundle};
use crate::grid_fields::{FieldError, MetricField, ScalarField, SymTensorField};

/// `Ric + ∇²f`; zero for a steady gradient soliton.
pub fn soliton_residual(g: &MetricField, f: &ScalarField) -> Result<SymTensorField, FieldError> {
    let bundle = CurvatureBundle::new(g)?;
    let h = hessian(f, &bundle.conn)?;
    Ok(bundle.ric.lin_comb(1.0, &h, 1.0))
}

/// Residuals of the stationary pair `−Ric + α∇²φ = 0`, `Δφ + β|∇φ|² = 0`
/// and of the two scalar identities obtained by tracing.
#[derive(Clone, Debug)]
pub struct Prop21Residuals {
    pub r1: SymTensorField,
    pub r2: ScalarField,
    /// `|R − αΔφ|`
    pub trace1: ScalarField,
    /// `|R + αβ|∇φ|²|`, meaningful only where `r2 ≈ 0`.
    pub trace2: ScalarField,
}

pub fn prop21_residuals(
    g: &MetricField,
    phi: &ScalarField,
    alpha: f64,
    beta: f64,
) -> Result<Prop21Residuals, FieldError> {
    let bundle = CurvatureBundle::new(g)?;
    let conn = &bundle.conn;
    let h = hessian(phi, conn)?;
    let lap = laplacian(phi, conn)?;
    let q = covector_norm_sq(&gradient(phi)?, &conn.ginv);
    let r = &bundle.scal;
    Ok(Prop21Residuals {
        r1: bundle.ric.lin_comb(-1.0, &h, alpha),
        r2: lap.lin_comb(1.0, &q, beta),
        trace1: r.lin_comb(1.0, &lap, -alpha).map(f64::abs),
        trace2: r.lin_comb(1.0, &q, alpha * beta).map(f64::abs),
    })
}

/// Smallest `log₂` ratio of successive errors, each level halving `h`;
/// `NaN` with fewer than two levels, `∞` once an error reaches zero.
pub fn convergence_order(errors: &[f64]) -> f64 {
    if errors.len() < 2 {
        return f64::NAN;
    }
    errors
        .windows(2)
        .map(|w| if w[1] == 0.0 { f64::INFINITY } else { (w[0] / w[1]).log2() })
        .fold(f64::INFINITY, f64::min)
}
