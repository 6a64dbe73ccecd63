//! Right-hand sides of the evolution equations of curvature and of the
//! derivatives of `φ` along the flow, evaluated from a single snapshot.

use crate::flow::{FlowParams, FlowState};
use crate::geometry::{covariant_derivative, gradient, hessian, laplacian, laplacian_tensor, b_tensor, CurvatureBundle};
use crate::grid_fields::linalg::Sym;
use crate::grid_fields::{FieldError, ScalarField, Slot, SymTensorField, TensorField};

use Slot::{Lower as L, Upper as U};

/// Pointwise data shared by every right-hand side.
struct Local {
    gi: Sym,
    /// `∂_iφ` and `∇^iφ`
    dl: [f64; 3],
    du: [f64; 3],
    /// Hessian `H_ij`, mixed `H_i^k` and raised `H^ij`
    h: Sym,
    hm: Sym,
    hu: Sym,
    ric: Sym,
    /// `R_i^k`
    ricm: Sym,
    ricu: Sym,
}

fn mat_mul(a: &Sym, b: &Sym, dim: usize) -> Sym {
    let mut c = [[0.0; 3]; 3];
    for i in 0..dim {
        for j in 0..dim {
            c[i][j] = (0..dim).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

struct Kit<'a> {
    bundle: CurvatureBundle,
    phi: &'a ScalarField,
    grad: TensorField,
    hess: SymTensorField,
}

impl<'a> Kit<'a> {
    fn new(state: &'a FlowState) -> Result<Self, FieldError> {
        let bundle = CurvatureBundle::new(&state.g)?;
        let grad = gradient(&state.phi)?;
        let hess = hessian(&state.phi, &bundle.conn)?;
        Ok(Kit { bundle, phi: &state.phi, grad, hess })
    }

    fn local(&self, p: usize) -> Local {
        let dim = self.phi.grid().dim();
        let gi = self.bundle.conn.ginv.matrix(p);
        let mut dl = [0.0; 3];
        for (i, d) in dl.iter_mut().enumerate().take(dim) {
            *d = self.grad.at(&[i], p);
        }
        let mut du = [0.0; 3];
        for i in 0..dim {
            du[i] = (0..dim).map(|j| gi[i][j] * dl[j]).sum();
        }
        let h = self.hess.matrix(p);
        let hm = mat_mul(&h, &gi, dim);
        let hu = mat_mul(&gi, &hm, dim);
        let ric = self.bundle.ric.matrix(p);
        let ricm = mat_mul(&ric, &gi, dim);
        let ricu = mat_mul(&gi, &ricm, dim);
        Local { gi, dl, du, h, hm, hu, ric, ricm, ricu }
    }

    fn dim(&self) -> usize {
        self.phi.grid().dim()
    }

    fn rm(&self, i: usize, j: usize, k: usize, l: usize, p: usize) -> f64 {
        self.bundle.riem_low.at(&[i, j, k, l], p)
    }
}

fn margin_of(fields: &[usize]) -> usize {
    fields.iter().copied().max().unwrap_or(0)
}

/// `∂_tΓ^k_ij`.
pub fn lemma_rhs_gamma(state: &FlowState, params: &FlowParams) -> Result<TensorField, FieldError> {
    let kit = Kit::new(state)?;
    let conn = &kit.bundle.conn;
    let dric = covariant_derivative(&kit.bundle.ric.to_tensor(), conn)?;
    let d3 = covariant_derivative(&kit.hess.to_tensor(), conn)?;
    let (a1, a2) = (params.alpha1, params.alpha2);
    let dim = kit.dim();
    let margin = margin_of(&[dric.margin(), d3.margin(), kit.bundle.riem_low.margin()]);
    Ok(TensorField::from_points(*kit.phi.grid(), &[U, L, L], margin, |p, out| {
        let lo = kit.local(p);
        // lowered value T_l,ij, raised at the end
        let mut low = [[[0.0; 3]; 3]; 3];
        for (l, row) in low.iter_mut().enumerate().take(dim) {
            for i in 0..dim {
                for j in 0..dim {
                    let mut curv = 0.0;
                    for b in 0..dim {
                        curv += (kit.rm(i, l, j, b, p) + kit.rm(j, l, i, b, p)) * lo.du[b];
                    }
                    row[i][j] = -dric.at(&[i, j, l], p) - dric.at(&[j, i, l], p)
                        + dric.at(&[l, i, j], p)
                        + 2.0 * a1 * lo.h[i][j] * lo.dl[l]
                        + a2 * d3.at(&[l, i, j], p)
                        - a2 * curv;
                }
            }
        }
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    out[(k * dim + i) * dim + j] = (0..dim).map(|l| lo.gi[k][l] * low[l][i][j]).sum();
                }
            }
        }
    }))
}

/// `∂_tR_ij`.
pub fn lemma_rhs_ricci(state: &FlowState, params: &FlowParams) -> Result<TensorField, FieldError> {
    let kit = Kit::new(state)?;
    let conn = &kit.bundle.conn;
    let ric_t = kit.bundle.ric.to_tensor();
    let lap_ric = laplacian_tensor(&ric_t, conn)?;
    let dric = covariant_derivative(&ric_t, conn)?;
    let (a1, a2) = (params.alpha1, params.alpha2);
    let dim = kit.dim();
    let margin = margin_of(&[lap_ric.margin(), dric.margin(), kit.hess.margin()]);
    Ok(TensorField::from_points(*kit.phi.grid(), &[L, L], margin, |p, out| {
        let lo = kit.local(p);
        let lap_phi: f64 = (0..dim).map(|i| lo.hm[i][i]).sum();
        for i in 0..dim {
            for j in 0..dim {
                let mut v = lap_ric.at(&[i, j], p);
                let (mut rr, mut rgg, mut transport) = (0.0, 0.0, 0.0);
                for a in 0..dim {
                    v -= 2.0 * lo.ric[i][a] * lo.ricm[j][a];
                    v -= 2.0 * a1 * lo.hm[i][a] * lo.h[a][j];
                    v += a2 * (lo.ricm[i][a] * lo.h[a][j] + lo.ricm[j][a] * lo.h[a][i]);
                    transport += dric.at(&[a, i, j], p) * lo.du[a];
                    for b in 0..dim {
                        let r = kit.rm(a, i, j, b, p);
                        rr += r * lo.ricu[a][b];
                        rgg += r * lo.du[a] * lo.du[b];
                    }
                }
                v += 2.0 * rr - 2.0 * a1 * rgg + 2.0 * a1 * lap_phi * lo.h[i][j] + a2 * transport;
                out[i * dim + j] = v;
            }
        }
    }))
}

/// `∂_tR`.
pub fn lemma_rhs_scalar(state: &FlowState, params: &FlowParams) -> Result<ScalarField, FieldError> {
    let kit = Kit::new(state)?;
    let conn = &kit.bundle.conn;
    let lap_r = laplacian(&kit.bundle.scal, conn)?;
    let dr = gradient(&kit.bundle.scal)?;
    let (a1, a2) = (params.alpha1, params.alpha2);
    let dim = kit.dim();
    Ok(ScalarField::map_points(*kit.phi.grid(), lap_r.margin().max(dr.margin()), |p| {
        let lo = kit.local(p);
        let mut ric_sq = 0.0;
        let mut hess_sq = 0.0;
        let mut ric_dd = 0.0;
        let mut lap_phi = 0.0;
        let mut dr_dphi = 0.0;
        for i in 0..dim {
            lap_phi += lo.hm[i][i];
            dr_dphi += dr.at(&[i], p) * lo.du[i];
            for j in 0..dim {
                ric_sq += lo.ricm[i][j] * lo.ricm[j][i];
                hess_sq += lo.hm[i][j] * lo.hm[j][i];
                ric_dd += lo.ric[i][j] * lo.du[i] * lo.du[j];
            }
        }
        lap_r.at(p) + 2.0 * ric_sq + 2.0 * a1 * lap_phi * lap_phi - 2.0 * a1 * hess_sq - 4.0 * a1 * ric_dd
            + a2 * dr_dphi
    }))
}

/// `∂_tR_ijkl`.
pub fn lemma_rhs_riemann(state: &FlowState, params: &FlowParams) -> Result<TensorField, FieldError> {
    let kit = Kit::new(state)?;
    let conn = &kit.bundle.conn;
    let rm = &kit.bundle.riem_low;
    let lap_rm = laplacian_tensor(rm, conn)?;
    let drm = covariant_derivative(rm, conn)?;
    let b = b_tensor(rm, &conn.ginv);
    let (a1, a2) = (params.alpha1, params.alpha2);
    let dim = kit.dim();
    let margin = margin_of(&[lap_rm.margin(), drm.margin(), kit.hess.margin()]);
    Ok(TensorField::from_points(*kit.phi.grid(), &[L, L, L, L], margin, |p, out| {
        let lo = kit.local(p);
        let r = |i: usize, j: usize, k: usize, l: usize| rm.at(&[i, j, k, l], p);
        let bb = |i: usize, j: usize, k: usize, l: usize| b.at(&[i, j, k, l], p);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        let mut v = lap_rm.at(&[i, j, k, l], p)
                            + 2.0 * (bb(i, j, k, l) - bb(i, j, l, k) + bb(i, k, j, l) - bb(i, l, j, k))
                            + 2.0 * a1 * (lo.h[i][l] * lo.h[j][k] - lo.h[i][k] * lo.h[j][l]);
                        for q in 0..dim {
                            // R_i^q R_qjkl and its three siblings
                            v -= lo.ricm[i][q] * r(q, j, k, l)
                                + lo.ricm[j][q] * r(i, q, k, l)
                                + lo.ricm[k][q] * r(i, j, q, l)
                                + lo.ricm[l][q] * r(i, j, k, q);
                            // Lie derivative of Rm along ∇φ
                            v += a2
                                * (drm.at(&[q, i, j, k, l], p) * lo.du[q]
                                    + r(q, j, k, l) * lo.hm[i][q]
                                    + r(i, q, k, l) * lo.hm[j][q]
                                    + r(i, j, q, l) * lo.hm[k][q]
                                    + r(i, j, k, q) * lo.hm[l][q]);
                        }
                        out[((i * dim + j) * dim + k) * dim + l] = v;
                    }
                }
            }
        }
    }))
}

/// `∂_t|∇φ|²_g`.
pub fn lemma_rhs_gradphi_sq(state: &FlowState, params: &FlowParams) -> Result<ScalarField, FieldError> {
    let kit = Kit::new(state)?;
    let conn = &kit.bundle.conn;
    let q = crate::geometry::covector_norm_sq(&kit.grad, &conn.ginv);
    let lap_q = laplacian(&q, conn)?;
    let dim = kit.dim();
    let FlowParams { alpha1: a1, alpha2: a2, beta1: b1, beta2: b2 } = *params;
    Ok(ScalarField::map_points(*kit.phi.grid(), lap_q.margin().max(kit.hess.margin()), |p| {
        let lo = kit.local(p);
        let (mut hess_sq, mut hdd) = (0.0, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                hess_sq += lo.hm[i][j] * lo.hm[j][i];
                hdd += lo.h[i][j] * lo.du[i] * lo.du[j];
            }
        }
        let qp = q.at(p);
        lap_q.at(p) + 2.0 * b2 * qp - 2.0 * hess_sq - 2.0 * a1 * qp * qp + (4.0 * b1 - 2.0 * a2) * hdd
    }))
}

/// `∂_t(∇_i∇_jφ)`.
pub fn lemma_rhs_hessian(state: &FlowState, params: &FlowParams) -> Result<TensorField, FieldError> {
    let kit = Kit::new(state)?;
    let conn = &kit.bundle.conn;
    let h_t = kit.hess.to_tensor();
    let lap_h = laplacian_tensor(&h_t, conn)?;
    let d3 = covariant_derivative(&h_t, conn)?;
    let dim = kit.dim();
    let FlowParams { alpha1: a1, alpha2: a2, beta1: b1, beta2: b2 } = *params;
    let margin = margin_of(&[lap_h.margin(), d3.margin(), kit.bundle.riem_low.margin()]);
    Ok(TensorField::from_points(*kit.phi.grid(), &[L, L], margin, |p, out| {
        let lo = kit.local(p);
        let q: f64 = (0..dim).map(|i| lo.dl[i] * lo.du[i]).sum();
        for i in 0..dim {
            for j in 0..dim {
                let mut v = lap_h.at(&[i, j], p) + b2 * lo.h[i][j] - 2.0 * a1 * q * lo.h[i][j];
                for a in 0..dim {
                    v -= lo.ricm[i][a] * lo.h[a][j] + lo.ricm[j][a] * lo.h[a][i];
                    v += (2.0 * b1 - a2) * lo.du[a] * d3.at(&[a, i, j], p);
                    v += 2.0 * b1 * lo.hm[i][a] * lo.h[j][a];
                    for c in 0..dim {
                        let r = kit.rm(a, i, j, c, p);
                        v += 2.0 * r * lo.hu[a][c] + 2.0 * (b1 - a2) * r * lo.du[a] * lo.du[c];
                    }
                }
                out[i * dim + j] = v;
            }
        }
    }))
}

/// `∂_t(∇_iφ ∇_jφ)`.
pub fn lemma_rhs_dphi_dphi(state: &FlowState, params: &FlowParams) -> Result<TensorField, FieldError> {
    let kit = Kit::new(state)?;
    let conn = &kit.bundle.conn;
    let grid = *kit.phi.grid();
    let dim = kit.dim();
    let outer = TensorField::from_fn(grid, &[L, L], kit.grad.margin(), |idx, p| {
        kit.grad.at(&[idx[0]], p) * kit.grad.at(&[idx[1]], p)
    });
    let lap = laplacian_tensor(&outer, conn)?;
    let FlowParams { beta1: b1, beta2: b2, .. } = *params;
    Ok(TensorField::from_points(grid, &[L, L], lap.margin().max(kit.hess.margin()), |p, out| {
        let lo = kit.local(p);
        for i in 0..dim {
            for j in 0..dim {
                let mut v = lap.at(&[i, j], p) + 2.0 * b2 * lo.dl[i] * lo.dl[j];
                for k in 0..dim {
                    v -= lo.du[k] * (lo.ric[i][k] * lo.dl[j] + lo.ric[j][k] * lo.dl[i]);
                    v -= 2.0 * lo.hm[i][k] * lo.h[j][k];
                    v += 2.0 * b1 * lo.du[k] * (lo.dl[i] * lo.h[j][k] + lo.dl[j] * lo.h[i][k]);
                }
                out[i * dim + j] = v;
            }
        }
    }))
}
