//! Standard per-sample diagnostics of a run.

use crate::flow::{volume_rate, volume_rate_with, FlowError, FlowState, Monitor, Snapshot};
use crate::geometry::{covariant_derivative, covector_norm_sq, gradient, hessian, invert_metric, tensor_norm_sq, Connection};
use crate::grid_fields::{field_reduce, MetricField, Reduction, ScalarField, TensorField};

use super::diagnostics::{metric_sandwich, perelman_entropy_with, DECAY_COLUMNS};

/// Column order written by [`standard_monitors`], after `t`.
pub const STANDARD_COLUMNS: [&str; 13] = [
    "max_grad_phi_sq",
    "max_R",
    "min_R",
    "int_R_dV",
    "lambda_min",
    "lambda_max",
    "u_n",
    "t_grad_rm_sq",
    "t2_grad2_rm_sq",
    "t_grad3_phi_sq",
    "t2_grad4_phi_sq",
    "entropy_w",
    "vol_rate_residual",
];

fn max_of(f: &ScalarField) -> Result<f64, FlowError> {
    Ok(field_reduce(f, Reduction::Max, None)?)
}

/// `max|∇φ|²_g`.
pub struct GradientMonitor;

impl Monitor for GradientMonitor {
    fn columns(&self) -> Vec<String> {
        vec!["max_grad_phi_sq".into()]
    }

    fn sample(&mut self, snap: &Snapshot<'_>) -> Result<Vec<f64>, FlowError> {
        let q = covector_norm_sq(&gradient(&snap.state.phi)?, &snap.bundle.conn.ginv);
        Ok(vec![max_of(&q)?])
    }
}

/// `max R`, `min R`, `∫R dV`.
pub struct CurvatureMonitor;

impl Monitor for CurvatureMonitor {
    fn columns(&self) -> Vec<String> {
        vec!["max_R".into(), "min_R".into(), "int_R_dV".into()]
    }

    fn sample(&mut self, snap: &Snapshot<'_>) -> Result<Vec<f64>, FlowError> {
        let r = &snap.bundle.scal;
        Ok(vec![
            max_of(r)?,
            field_reduce(r, Reduction::Min, None)?,
            field_reduce(r, Reduction::Integral, Some(&snap.state.g.volume_density()))?,
        ])
    }
}

/// Eigenvalues of `g` relative to a fixed background and `u_n`.
pub struct SandwichMonitor {
    pub background: MetricField,
    pub power: u32,
}

impl Monitor for SandwichMonitor {
    fn columns(&self) -> Vec<String> {
        vec!["lambda_min".into(), "lambda_max".into(), "u_n".into()]
    }

    fn sample(&mut self, snap: &Snapshot<'_>) -> Result<Vec<f64>, FlowError> {
        let s = metric_sandwich(&snap.state.g, &self.background, self.power)?;
        Ok(vec![s.lambda_min, s.lambda_max, s.u_n])
    }
}

/// `t|∇Rm|²`, `t²|∇²Rm|²`, `t|∇³φ|²`, `t²|∇⁴φ|²`, sup over the grid.
pub struct DecayMonitor;

fn sup_norm_sq(t: &TensorField, conn: &Connection) -> Result<f64, FlowError> {
    max_of(&tensor_norm_sq(t, conn))
}

impl Monitor for DecayMonitor {
    fn columns(&self) -> Vec<String> {
        DECAY_COLUMNS.iter().map(|c| c.to_string()).collect()
    }

    fn sample(&mut self, snap: &Snapshot<'_>) -> Result<Vec<f64>, FlowError> {
        let t = snap.state.t;
        if t == 0.0 {
            return Ok(vec![0.0; 4]);
        }
        let conn = &snap.bundle.conn;
        let d1 = covariant_derivative(&snap.bundle.riem_low, conn)?;
        let d2 = covariant_derivative(&d1, conn)?;
        let p2 = hessian(&snap.state.phi, conn)?.to_tensor();
        let p3 = covariant_derivative(&p2, conn)?;
        let p4 = covariant_derivative(&p3, conn)?;
        Ok(vec![
            t * sup_norm_sq(&d1, conn)?,
            t * t * sup_norm_sq(&d2, conn)?,
            t * sup_norm_sq(&p3, conn)?,
            t * t * sup_norm_sq(&p4, conn)?,
        ])
    }
}

/// `W(g, φ, τ)` at a fixed scale.
pub struct EntropyMonitor {
    pub tau: f64,
}

impl Monitor for EntropyMonitor {
    fn columns(&self) -> Vec<String> {
        vec!["entropy_w".into()]
    }

    fn sample(&mut self, snap: &Snapshot<'_>) -> Result<Vec<f64>, FlowError> {
        Ok(vec![perelman_entropy_with(snap.bundle, &snap.state.phi, self.tau)?])
    }
}

/// Residual of `∂_t log√det g` against its predicted rate over the last
/// step; `NaN` on the initial sample.
pub struct VolumeMonitor;

impl Monitor for VolumeMonitor {
    fn columns(&self) -> Vec<String> {
        vec!["vol_rate_residual".into()]
    }

    fn sample(&mut self, snap: &Snapshot<'_>) -> Result<Vec<f64>, FlowError> {
        let Some(prev) = snap.previous else {
            return Ok(vec![f64::NAN]);
        };
        let next = snap.state;
        let dt = next.t - prev.t;
        let r0 = volume_rate(prev, snap.params, snap.gauge)?;
        let r1 = volume_rate_with(next, snap.params, snap.gauge, snap.bundle)?;
        let (v0, v1) = (prev.g.volume_density(), next.g.volume_density());
        let worst = (0..v0.values().len())
            .map(|p| ((v1.at(p).ln() - v0.at(p).ln()) / dt - 0.5 * (r0.at(p) + r1.at(p))).abs())
            .fold(0.0, f64::max);
        Ok(vec![worst])
    }
}

#[derive(Clone, Debug)]
pub struct MonitorConfig {
    /// Reference metric for the sandwich columns; the initial metric if `None`.
    pub background: Option<MetricField>,
    pub sandwich_power: u32,
    pub entropy_tau: f64,
    /// The decay columns need two extra covariant derivatives of `Rm`.
    pub decay: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig { background: None, sandwich_power: 1, entropy_tau: 1.0, decay: true }
    }
}

/// Monitors producing [`STANDARD_COLUMNS`] in order; the decay columns are
/// omitted when disabled.
pub fn standard_monitors(initial: &FlowState, cfg: &MonitorConfig) -> Vec<Box<dyn Monitor>> {
    let background = cfg.background.clone().unwrap_or_else(|| initial.g.clone());
    let mut out: Vec<Box<dyn Monitor>> = vec![
        Box::new(GradientMonitor),
        Box::new(CurvatureMonitor),
        Box::new(SandwichMonitor { background, power: cfg.sandwich_power }),
    ];
    if cfg.decay {
        out.push(Box::new(DecayMonitor));
    }
    out.push(Box::new(EntropyMonitor { tau: cfg.entropy_tau }));
    out.push(Box::new(VolumeMonitor));
    out
}

/// `c̃ = max|∇φ̃|²_g̃` of the initial data.
pub fn initial_gradient_bound(state: &FlowState) -> Result<f64, FlowError> {
    let ginv = invert_metric(&state.g)?;
    max_of(&covector_norm_sq(&gradient(&state.phi)?, &ginv))
}
