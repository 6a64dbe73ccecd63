//! Numerical verification of the derived evolution equations against time
//! differences of the flow, and of the soliton identities.

mod lemmas;
mod soliton;

pub use lemmas::{
    lemma_rhs_dphi_dphi, lemma_rhs_gamma, lemma_rhs_gradphi_sq, lemma_rhs_hessian, lemma_rhs_ricci,
    lemma_rhs_riemann, lemma_rhs_scalar,
};
pub use soliton::{convergence_order, prop21_residuals, soliton_residual, Prop21Residuals};

use serde::Serialize;

use crate::flow::{step, FlowError, FlowParams, FlowState, Gauge, Scheme, StepControl};
use crate::geometry::{christoffel, covector_norm_sq, gradient, hessian, CurvatureBundle, Connection};
use crate::grid_fields::{FieldError, GridSpec, Slot, TensorField};

/// The quantities whose evolution equations are checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaId {
    Gamma,
    Ricci,
    Scalar,
    Riemann,
    GradphiSq,
    Hessian,
    DphiDphi,
}

impl LemmaId {
    pub const ALL: [LemmaId; 7] = [
        LemmaId::Gamma,
        LemmaId::Ricci,
        LemmaId::Scalar,
        LemmaId::Riemann,
        LemmaId::GradphiSq,
        LemmaId::Hessian,
        LemmaId::DphiDphi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::Gamma => "gamma",
            LemmaId::Ricci => "ricci",
            LemmaId::Scalar => "scalar",
            LemmaId::Riemann => "riemann",
            LemmaId::GradphiSq => "gradphi_sq",
            LemmaId::Hessian => "hessian",
            LemmaId::DphiDphi => "dphi_dphi",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == s)
    }

    /// The quantity `Q` whose time derivative the right-hand side predicts,
    /// flattened component-major.
    pub fn quantity(self, state: &FlowState) -> Result<Quantity, FieldError> {
        let q = match self {
            LemmaId::Gamma => christoffel(&state.g)?.into(),
            LemmaId::Ricci => CurvatureBundle::new(&state.g)?.ric.to_tensor().into(),
            LemmaId::Scalar => CurvatureBundle::new(&state.g)?.scal.into(),
            LemmaId::Riemann => CurvatureBundle::new(&state.g)?.riem_low.into(),
            LemmaId::GradphiSq => {
                let conn = Connection::new(&state.g)?;
                covector_norm_sq(&gradient(&state.phi)?, &conn.ginv).into()
            }
            LemmaId::Hessian => hessian(&state.phi, &Connection::new(&state.g)?)?.to_tensor().into(),
            LemmaId::DphiDphi => {
                let grad = gradient(&state.phi)?;
                TensorField::from_fn(*state.g.grid(), &[Slot::Lower, Slot::Lower], grad.margin(), |idx, p| {
                    grad.at(&[idx[0]], p) * grad.at(&[idx[1]], p)
                })
                .into()
            }
        };
        Ok(q)
    }

    pub fn rhs(self, state: &FlowState, params: &FlowParams) -> Result<Quantity, FieldError> {
        Ok(match self {
            LemmaId::Gamma => lemma_rhs_gamma(state, params)?.into(),
            LemmaId::Ricci => lemma_rhs_ricci(state, params)?.into(),
            LemmaId::Scalar => lemma_rhs_scalar(state, params)?.into(),
            LemmaId::Riemann => lemma_rhs_riemann(state, params)?.into(),
            LemmaId::GradphiSq => lemma_rhs_gradphi_sq(state, params)?.into(),
            LemmaId::Hessian => lemma_rhs_hessian(state, params)?.into(),
            LemmaId::DphiDphi => lemma_rhs_dphi_dphi(state, params)?.into(),
        })
    }
}

/// Field values flattened component-major, with the grid needed to skip
/// the invalid rim.
pub struct Quantity {
    grid: GridSpec,
    margin: usize,
    values: Vec<f64>,
}

impl From<TensorField> for Quantity {
    fn from(t: TensorField) -> Self {
        Quantity { grid: *t.grid(), margin: t.margin(), values: t.data().to_vec() }
    }
}

impl From<crate::grid_fields::ScalarField> for Quantity {
    fn from(s: crate::grid_fields::ScalarField) -> Self {
        Quantity { grid: *s.grid(), margin: s.margin(), values: s.values().to_vec() }
    }
}

impl Quantity {
    fn valid(&self, k: usize) -> bool {
        self.grid.is_interior(k % self.grid.len(), self.margin)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelResidual {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    /// `max|FD − RHS| / max|RHS|` over valid points.
    pub relative: f64,
    pub absolute: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaCheckReport {
    pub lemma_id: LemmaId,
    pub dim: usize,
    pub params: FlowParams,
    pub levels: Vec<LevelResidual>,
    /// Smallest `log₂` ratio of successive residuals under `(h, dt)` refinement.
    pub order: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Compares the lemma right-hand side at `s₁ = step(s₀)` with the centred
/// difference `(Q(s₂) − Q(s₀))/(2dt)` along two RK4 steps of the direct flow.
pub fn lemma_residual(
    state: &FlowState,
    params: &FlowParams,
    lemma: LemmaId,
    dt: f64,
) -> Result<LevelResidual, FlowError> {
    let ctl = StepControl { dt, cfl_safety: 1.0, scheme: Scheme::Rk4, max_metric_eigen_ratio: f64::INFINITY };
    let s1 = step(state, params, &ctl, &Gauge::Direct)?;
    let s2 = step(&s1, params, &ctl, &Gauge::Direct)?;
    let (q0, q2) = (lemma.quantity(state)?, lemma.quantity(&s2)?);
    let rhs = lemma.rhs(&s1, params)?;
    let (mut diff, mut scale) = (0.0f64, 0.0f64);
    for k in (0..rhs.values.len()).filter(|&k| rhs.valid(k) && q0.valid(k)) {
        let fd = (q2.values[k] - q0.values[k]) / (2.0 * dt);
        diff = diff.max((fd - rhs.values[k]).abs());
        scale = scale.max(rhs.values[k].abs()).max(fd.abs());
    }
    let grid = state.g.grid();
    Ok(LevelResidual {
        n: grid.n(),
        h: grid.h(),
        dt,
        relative: if diff == 0.0 { 0.0 } else { diff / scale },
        absolute: diff,
    })
}

/// Time step paired with `h` so that the `dt²` and `hᵖ` errors balance.
pub fn balanced_dt(grid: &GridSpec) -> f64 {
    0.1 * grid.h().powf(0.5 * grid.accuracy().order() as f64)
}

/// Runs [`lemma_residual`] on `make(n)` for `n = n0, 2n0, …` (`levels`
/// grids) with [`balanced_dt`] and reports the observed order.
pub fn check_lemma(
    make: &(dyn Fn(usize) -> Result<FlowState, FieldError> + Sync),
    n0: usize,
    levels: usize,
    params: &FlowParams,
    lemma: LemmaId,
    threshold: f64,
) -> Result<LemmaCheckReport, FlowError> {
    let mut out = Vec::with_capacity(levels);
    let mut dim = 0;
    for level in 0..levels.max(2) {
        let state = make(n0 << level)?;
        dim = state.g.grid().dim();
        out.push(lemma_residual(&state, params, lemma, balanced_dt(state.g.grid()))?);
    }
    let rel: Vec<f64> = out.iter().map(|l| l.relative).collect();
    let order = convergence_order(&rel);
    let decreasing = rel.windows(2).all(|w| w[1] < w[0]);
    Ok(LemmaCheckReport {
        lemma_id: lemma,
        dim,
        params: *params,
        levels: out,
        order,
        threshold,
        pass: decreasing && order >= threshold,
    })
}
