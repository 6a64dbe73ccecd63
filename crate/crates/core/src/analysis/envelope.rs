use serde::Serialize;

use crate::flow::{FlowParams, MonitorSeries};

use super::classify::{case_of, discriminant, CaseId};
use super::AnalysisError;

/// Closed-form bound on `max|∇φ|²_g(t)`.
///
/// Every case solves `U' = 2β₂U − 2aU²`, `U(0) = c̃`, with `a = α₁` in
/// case 1 and `a = −D` in case 2, except that the branches with `β₂ ≤ 0`
/// drop the `β₂` term as the printed bounds do.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundEnvelope {
    pub case_id: CaseId,
    pub c_tilde: f64,
    /// Pole of the closed form, `None` if it stays finite for all `t ≥ 0`.
    pub valid_until: Option<f64>,
    #[serde(skip)]
    a: f64,
    #[serde(skip)]
    beta2: f64,
}

impl BoundEnvelope {
    pub fn eval(&self, t: f64) -> f64 {
        if self.valid_until.is_some_and(|tp| t >= tp) {
            return f64::INFINITY;
        }
        let (c, a, b) = (self.c_tilde, self.a, self.beta2);
        match self.case_id.branch() {
            1 | 5 => {
                let e = (2.0 * b * t).exp();
                c * b * e / (b + c * a * (e - 1.0))
            }
            2 => c,
            3 => c * (2.0 * b * t).exp(),
            _ => c / (1.0 + 2.0 * a * c * t),
        }
    }

    pub fn valid_until_or_inf(&self) -> f64 {
        self.valid_until.unwrap_or(f64::INFINITY)
    }
}

pub fn envelope(params: &FlowParams, c_tilde: f64) -> Result<BoundEnvelope, AnalysisError> {
    if !(c_tilde >= 0.0) {
        return Err(AnalysisError::NegativeCtilde(c_tilde));
    }
    let case_id = case_of(params);
    let a = match case_id {
        CaseId::C1_1 | CaseId::C1_2 | CaseId::C1_3 | CaseId::C1_4 | CaseId::C1_5 => params.alpha1,
        _ => -discriminant(params),
    };
    let b = params.beta2;
    let valid_until = match case_id.branch() {
        4 if c_tilde > 0.0 => Some(-1.0 / (2.0 * a * c_tilde)),
        5 if c_tilde > 0.0 => Some((1.0 - b / (c_tilde * a)).ln() / (2.0 * b)),
        _ => None,
    };
    Ok(BoundEnvelope { case_id, c_tilde, valid_until, a, beta2: b })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeVerdict {
    pub passed: bool,
    pub samples: usize,
    /// Largest `value / bound` seen.
    pub max_ratio: f64,
    pub first_violation: Option<Violation>,
}

/// Checks `max|∇φ|²_g(t) ≤ env(t)·(1 + slack)` at every sample.
pub fn verify_envelope(
    series: &MonitorSeries,
    env: &BoundEnvelope,
    slack: f64,
) -> Result<EnvelopeVerdict, AnalysisError> {
    const COLUMN: &str = "max_grad_phi_sq";
    let k = series.column_index(COLUMN).ok_or_else(|| AnalysisError::MissingColumn(COLUMN.into()))?;
    let mut verdict = EnvelopeVerdict { passed: true, samples: series.len(), max_ratio: 0.0, first_violation: None };
    for row in &series.rows {
        let (t, value) = (row[0], row[k]);
        let bound = env.eval(t);
        if value > 0.0 {
            verdict.max_ratio = verdict.max_ratio.max(value / bound);
        }
        if !(value <= bound * (1.0 + slack)) && verdict.first_violation.is_none() {
            verdict.passed = false;
            verdict.first_violation = Some(Violation { t, value, bound });
        }
    }
    Ok(verdict)
}
