use rayon::prelude::*;

use crate::geometry::{covariant_derivative, covector_norm_sq, gradient, laplacian, CurvatureBundle};
use crate::grid_fields::{FieldError, MetricField, ScalarField, SymTensorField};

use super::rhs::{deturck_vector_for, rhs, Rhs};
use super::{FlowError, FlowParams, FlowState, Gauge, Monitor, MonitorSeries, Snapshot, Termination};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Rk4,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Rk4 => "rk4",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub dt: f64,
    pub cfl_safety: f64,
    pub scheme: Scheme,
    /// Abort once `λ_max/λ_min` of `g` exceeds this anywhere.
    pub max_metric_eigen_ratio: f64,
}

impl StepControl {
    pub const DEFAULT_SAFETY: f64 = 0.2;

    /// RK4 at the given fraction of the stability limit of `g`.
    pub fn from_cfl(g: &MetricField, cfl_safety: f64) -> Self {
        StepControl {
            dt: cfl_safety * cfl_limit(g),
            cfl_safety,
            scheme: Scheme::Rk4,
            max_metric_eigen_ratio: 1e3,
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(FlowError::BadControl(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(FlowError::BadControl(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety)));
        }
        if !(self.max_metric_eigen_ratio > 1.0) {
            return Err(FlowError::BadControl("max_metric_eigen_ratio must exceed 1".into()));
        }
        Ok(())
    }
}

/// Explicit parabolic stability limit `h²/(2·dim·Λmax)` with `Λmax` the
/// largest eigenvalue of `g⁻¹` over the grid.
pub fn cfl_limit(g: &MetricField) -> f64 {
    let grid = g.grid();
    let lambda_max = 1.0 / g.min_eigenvalue();
    grid.h() * grid.h() / (2.0 * grid.dim() as f64 * lambda_max)
}

fn positivity(err: FieldError, t: f64) -> FlowError {
    match err {
        FieldError::NotPositiveDefinite { point, .. } => FlowError::PositivityLost { point, t },
        other => FlowError::Field(other),
    }
}

fn advance(state: &FlowState, k: &Rhs, dt: f64, t: f64) -> Result<FlowState, FlowError> {
    let g = MetricField::new(state.g.lin_comb(1.0, &k.dg, dt)).map_err(|e| positivity(e, t))?;
    let phi = state.phi.lin_comb(1.0, &k.dphi, dt);
    Ok(FlowState { g, phi, t })
}

fn combine(ks: &[Rhs; 4]) -> Rhs {
    let grid = *ks[0].dg.grid();
    let dg = SymTensorField::from_fn(grid, 0, |i, j, p| {
        (ks[0].dg.at(i, j, p) + 2.0 * ks[1].dg.at(i, j, p) + 2.0 * ks[2].dg.at(i, j, p) + ks[3].dg.at(i, j, p)) / 6.0
    });
    let dphi = ScalarField::map_points(grid, 0, |p| {
        (ks[0].dphi.at(p) + 2.0 * ks[1].dphi.at(p) + 2.0 * ks[2].dphi.at(p) + ks[3].dphi.at(p)) / 6.0
    });
    Rhs { dg, dphi }
}

/// Advances `(g, φ)` by `ctl.dt` with forward Euler or classical RK4.
pub fn step(state: &FlowState, params: &FlowParams, ctl: &StepControl, gauge: &Gauge) -> Result<FlowState, FlowError> {
    if !state.g.grid().is_periodic() {
        return Err(FlowError::NotPeriodic);
    }
    let limit = cfl_limit(&state.g);
    if ctl.dt > limit {
        return Err(FlowError::CflViolation { dt: ctl.dt, limit });
    }
    let dt = ctl.dt;
    let t_next = state.t + dt;
    let next = match ctl.scheme {
        Scheme::Euler => advance(state, &rhs(state, params, gauge)?, dt, t_next)?,
        Scheme::Rk4 => {
            let k1 = rhs(state, params, gauge)?;
            let s2 = advance(state, &k1, 0.5 * dt, state.t + 0.5 * dt)?;
            let k2 = rhs(&s2, params, gauge)?;
            let s3 = advance(state, &k2, 0.5 * dt, state.t + 0.5 * dt)?;
            let k3 = rhs(&s3, params, gauge)?;
            let s4 = advance(state, &k3, dt, t_next)?;
            let k4 = rhs(&s4, params, gauge)?;
            advance(state, &combine(&[k1, k2, k3, k4]), dt, t_next)?
        }
    };
    let ratio = next.g.max_eigen_ratio();
    if ratio > ctl.max_metric_eigen_ratio {
        return Err(FlowError::EigenRatioExceeded { ratio, limit: ctl.max_metric_eigen_ratio, t: t_next });
    }
    Ok(next)
}

/// Riemannian density `√det g`.
pub fn volume_form(g: &MetricField) -> ScalarField {
    g.volume_density()
}

/// Predicted `∂_t log√det g = ½ tr_g ∂_t g`, assembled from its closed form
/// `−R + α₁|∇φ|² + α₂Δφ`, plus `div V` in the De Turck gauge.
pub fn volume_rate(state: &FlowState, params: &FlowParams, gauge: &Gauge) -> Result<ScalarField, FlowError> {
    let bundle = CurvatureBundle::new(&state.g)?;
    volume_rate_with(state, params, gauge, &bundle)
}

pub(crate) fn volume_rate_with(
    state: &FlowState,
    params: &FlowParams,
    gauge: &Gauge,
    bundle: &CurvatureBundle,
) -> Result<ScalarField, FlowError> {
    let conn = &bundle.conn;
    let grad_sq = covector_norm_sq(&gradient(&state.phi)?, &conn.ginv);
    let lap = laplacian(&state.phi, conn)?;
    let mut rate = bundle.scal.zip_with(&grad_sq, |r, q| -r + params.alpha1 * q).lin_comb(1.0, &lap, params.alpha2);
    if let Gauge::DeTurck(bg) = gauge {
        let v = deturck_vector_for(conn, bg);
        let dv = covariant_derivative(&v, conn)?;
        let dim = state.g.grid().dim();
        let div = ScalarField::map_points(*state.g.grid(), dv.margin(), |p| {
            let mut s = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    s += conn.ginv.at(i, j, p) * dv.at(&[i, j], p);
                }
            }
            s
        });
        rate = rate.lin_comb(1.0, &div, 1.0);
    }
    Ok(rate)
}

/// `max |(log√det g_next − log√det g_prev)/dt − ½(rate_prev + rate_next)|`.
pub fn volume_rate_residual(
    prev: &FlowState,
    next: &FlowState,
    params: &FlowParams,
    gauge: &Gauge,
) -> Result<f64, FlowError> {
    let dt = next.t - prev.t;
    let (r0, r1) = (volume_rate(prev, params, gauge)?, volume_rate(next, params, gauge)?);
    Ok(residual_from(prev, next, dt, &r0, &r1))
}

fn residual_from(prev: &FlowState, next: &FlowState, dt: f64, r0: &ScalarField, r1: &ScalarField) -> f64 {
    let (v0, v1) = (prev.g.volume_density(), next.g.volume_density());
    (0..v0.values().len())
        .map(|p| ((v1.at(p).ln() - v0.at(p).ln()) / dt - 0.5 * (r0.at(p) + r1.at(p))).abs())
        .fold(0.0, f64::max)
}

/// Number of steps covering `[0, t_end]` with step `dt`, the last one truncated.
pub fn step_count(t_end: f64, dt: f64) -> usize {
    let ratio = t_end / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() < 1e-9 * ratio.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Integrates from `initial` to `t_end`, sampling every monitor at the start
/// and after every `stride` steps. Errors stop the run; rows collected so
/// far are kept and the cause is recorded in `termination`.
pub fn run(
    initial: &FlowState,
    params: &FlowParams,
    ctl: &StepControl,
    gauge: &Gauge,
    t_end: f64,
    stride: usize,
    monitors: &mut [Box<dyn Monitor>],
) -> MonitorSeries {
    let mut columns = vec!["t".to_string()];
    for m in monitors.iter() {
        columns.extend(m.columns());
    }
    let mut series = MonitorSeries::new(columns);
    let abort = |series: &mut MonitorSeries, e: FlowError, t: f64| {
        series.termination = Termination::Aborted { kind: e.kind().to_string(), message: e.to_string(), t };
    };
    if let Err(e) = ctl.validate() {
        abort(&mut series, e, initial.t);
        return series;
    }
    if !initial.g.grid().is_periodic() {
        abort(&mut series, FlowError::NotPeriodic, initial.t);
        return series;
    }
    let limit = ctl.cfl_safety * cfl_limit(&initial.g);
    if ctl.dt > limit {
        abort(&mut series, FlowError::CflViolation { dt: ctl.dt, limit }, initial.t);
        return series;
    }
    let stride = stride.max(1);
    let sample = |series: &mut MonitorSeries,
                  monitors: &mut [Box<dyn Monitor>],
                  state: &FlowState,
                  previous: Option<&FlowState>,
                  step: usize|
     -> Result<(), FlowError> {
        let bundle = CurvatureBundle::new(&state.g)?;
        let snap = Snapshot { state, bundle: &bundle, params, gauge, previous, step };
        let parts: Vec<Result<Vec<f64>, FlowError>> = monitors.par_iter_mut().map(|m| m.sample(&snap)).collect();
        let mut row = vec![state.t];
        for part in parts {
            row.extend(part?);
        }
        series.rows.push(row);
        Ok(())
    };
    if let Err(e) = sample(&mut series, monitors, initial, None, 0) {
        abort(&mut series, e, initial.t);
        return series;
    }
    let nsteps = step_count(t_end, ctl.dt);
    let mut state = initial.clone();
    for k in 1..=nsteps {
        let t_target = if k == nsteps { t_end } else { initial.t + k as f64 * ctl.dt };
        let local = StepControl { dt: t_target - state.t, ..*ctl };
        let next = match step(&state, params, &local, gauge) {
            Ok(mut s) => {
                s.t = t_target;
                s
            }
            Err(e) => {
                abort(&mut series, e, state.t);
                return series;
            }
        };
        if k % stride == 0 {
            if let Err(e) = sample(&mut series, monitors, &next, Some(&state), k) {
                abort(&mut series, e, next.t);
                return series;
            }
        }
        state = next;
    }
    series
}
