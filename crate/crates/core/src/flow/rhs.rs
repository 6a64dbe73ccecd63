use crate::geometry::{
    covariant_derivative, covector_norm_sq, gradient, hessian, trace, Connection, CurvatureBundle,
};
use crate::grid_fields::{
    derivative_values, mixed_values, partial_sym, FieldError, MetricField, ScalarField, Slot, SymTensorField,
    TensorField,
};

use super::{FlowError, FlowParams, FlowState};

/// Time derivatives `(∂g, ∂φ)` at one state.
#[derive(Clone, Debug)]
pub struct Rhs {
    pub dg: SymTensorField,
    pub dphi: ScalarField,
}

/// Fixed reference metric `g̃` of the De Turck gauge, with its connection
/// and curvature precomputed.
#[derive(Clone, Debug)]
pub struct Background {
    pub g: MetricField,
    pub bundle: CurvatureBundle,
    flat: bool,
}

impl Background {
    pub fn new(g: MetricField) -> Result<Self, FieldError> {
        let bundle = CurvatureBundle::new(&g)?;
        let flat = bundle.gamma().max_abs() == 0.0 && bundle.riem_low.max_abs() == 0.0;
        Ok(Background { g, bundle, flat })
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }
}

/// Which form of the flow to integrate.
#[derive(Clone, Debug)]
pub enum Gauge {
    /// The flow as written, weakly parabolic.
    Direct,
    /// Strictly parabolic De Turck modification relative to a background.
    DeTurck(Box<Background>),
}

impl Gauge {
    pub fn name(&self) -> &'static str {
        match self {
            Gauge::Direct => "direct",
            Gauge::DeTurck(_) => "deturck",
        }
    }
}

/// Right-hand side in the requested gauge.
pub fn rhs(state: &FlowState, params: &FlowParams, gauge: &Gauge) -> Result<Rhs, FlowError> {
    match gauge {
        Gauge::Direct => rhs_direct(state, params),
        Gauge::DeTurck(bg) => rhs_deturck(state, bg, params),
    }
}

/// `∂g = −2Ric + 2α₁∇φ⊗∇φ + 2α₂∇²φ`, `∂φ = Δφ + β₁|∇φ|²_g + β₂φ`.
pub fn rhs_direct(state: &FlowState, params: &FlowParams) -> Result<Rhs, FlowError> {
    let bundle = CurvatureBundle::new(&state.g)?;
    rhs_direct_with(state, params, &bundle)
}

pub(crate) fn rhs_direct_with(
    state: &FlowState,
    params: &FlowParams,
    bundle: &CurvatureBundle,
) -> Result<Rhs, FlowError> {
    let conn = &bundle.conn;
    let grad = gradient(&state.phi)?;
    let hess = hessian(&state.phi, conn)?;
    let (a1, a2) = (params.alpha1, params.alpha2);
    let margin = bundle.ric.margin().max(hess.margin());
    let dg = SymTensorField::from_fn(*state.g.grid(), margin, |i, j, p| {
        -2.0 * bundle.ric.at(i, j, p)
            + 2.0 * a1 * grad.at(&[i], p) * grad.at(&[j], p)
            + 2.0 * a2 * hess.at(i, j, p)
    });
    let lap = trace(&hess, &conn.ginv);
    let grad_sq = covector_norm_sq(&grad, &conn.ginv);
    let (b1, b2) = (params.beta1, params.beta2);
    let dphi = ScalarField::map_points(*state.g.grid(), lap.margin(), |p| {
        lap.at(p) + b1 * grad_sq.at(p) + b2 * state.phi.at(p)
    });
    Ok(Rhs { dg, dphi })
}

fn deturck_vector_with(conn: &Connection, background: &Connection) -> TensorField {
    let grid = *conn.g.grid();
    let dim = grid.dim();
    let n = grid.len();
    // w^k = g^bc (Γ^k_bc − Γ̃^k_bc), then V_i = g_ik w^k
    let w: Vec<Vec<f64>> = (0..dim)
        .map(|k| {
            let mut v = vec![0.0; n];
            for b in 0..dim {
                for c in 0..dim {
                    let (gi, g1, g2) =
                        (conn.ginv.comp(b, c), conn.gamma.comp(&[k, b, c]), background.gamma.comp(&[k, b, c]));
                    for p in 0..n {
                        v[p] += gi[p] * (g1[p] - g2[p]);
                    }
                }
            }
            v
        })
        .collect();
    let margin = conn.gamma.margin().max(background.gamma.margin());
    TensorField::from_components(grid, &[Slot::Lower], margin, |idx| {
        let mut v = vec![0.0; n];
        for (k, wk) in w.iter().enumerate() {
            let gik = conn.g.comp(idx[0], k);
            for p in 0..n {
                v[p] += gik[p] * wk[p];
            }
        }
        v
    })
}

/// De Turck vector field `V_i = g_ik g^bc (Γ^k_bc − Γ̃^k_bc)`.
pub fn deturck_vector(g: &MetricField, g_tilde: &MetricField) -> Result<TensorField, FieldError> {
    Ok(deturck_vector_with(&Connection::new(g)?, &Connection::new(g_tilde)?))
}

/// `∇_iV_j + ∇_jV_i`, the Lie derivative of `g` along `V^♯`.
pub fn lie_derivative_metric(v: &TensorField, conn: &Connection) -> Result<SymTensorField, FieldError> {
    let dv = covariant_derivative(v, conn)?;
    Ok(SymTensorField::from_fn(*v.grid(), dv.margin(), |i, j, p| dv.at(&[i, j], p) + dv.at(&[j, i], p)))
}

/// Strictly parabolic form of the flow in the De Turck gauge:
///
/// ```text
/// ∂g_ij = g^ab ∇̃_a∇̃_b g_ij + g^ab g_ip g̃^pq R̃_jaqb + g^ab g_jp g̃^pq R̃_iaqb
///   + ½g^ab g^pq (∇̃_i g_pa ∇̃_j g_qb + 2∇̃_a g_jp ∇̃_q g_ib − 2∇̃_a g_jp ∇̃_b g_iq
///   − 2∇̃_j g_pa ∇̃_b g_iq − 2∇̃_i g_pa ∇̃_b g_jq) + 2α₁∇_iφ∇_jφ + 2α₂∇_i∇_jφ
/// ∂φ = g^ij ∇̃_i∇̃_jφ + β₁|∇φ|²_g + β₂φ
/// ```
///
/// Second derivatives of `g` and `φ` use the compact second-derivative
/// stencil on the diagonal, so every grid mode is damped.
pub fn rhs_deturck(state: &FlowState, bg: &Background, params: &FlowParams) -> Result<Rhs, FlowError> {
    let g = &state.g;
    let grid = *g.grid();
    let dim = grid.dim();
    let n = grid.len();
    let conn = Connection::new(g)?;
    let bconn = &bg.bundle.conn;
    let ginv = &conn.ginv;

    // x[c] = ∇̃_c g
    let dg_partial = (0..dim).map(|c| partial_sym(g, c, 1)).collect::<Result<Vec<_>, _>>()?;
    let x: Vec<SymTensorField> = if bg.flat {
        dg_partial
    } else {
        dg_partial
            .iter()
            .enumerate()
            .map(|(c, d)| {
                SymTensorField::from_fn(grid, d.margin(), |i, j, p| {
                    let mut v = d.at(i, j, p);
                    for m in 0..dim {
                        v -= bconn.gamma.at(&[m, c, i], p) * g.at(m, j, p) + bconn.gamma.at(&[m, c, j], p) * g.at(i, m, p);
                    }
                    v
                })
            })
            .collect()
    };

    // principal part g^ab ∇̃_a∇̃_b g_ij
    mixed_values(&grid, g.comp(0, 0), 0, dim - 1)?;
    let y: Vec<SymTensorField> = if bg.flat {
        Vec::new()
    } else {
        (0..dim)
            .map(|b| {
                SymTensorField::from_fn(grid, 0, |i, j, p| {
                    (0..dim)
                        .map(|m| {
                            bconn.gamma.at(&[m, b, i], p) * g.at(m, j, p) + bconn.gamma.at(&[m, b, j], p) * g.at(i, m, p)
                        })
                        .sum()
                })
            })
            .collect()
    };
    let margin = x[0].margin();
    let principal = SymTensorField::from_components(grid, margin, |i, j| {
        let mut out = vec![0.0; n];
        for a in 0..dim {
            for b in a..dim {
                let d = mixed_values(&grid, g.comp(i, j), a, b).expect("validated");
                let w = if a == b { 1.0 } else { 2.0 };
                let gi = ginv.comp(a, b);
                for p in 0..n {
                    out[p] += w * gi[p] * d[p];
                }
            }
        }
        if !bg.flat {
            for a in 0..dim {
                for b in 0..dim {
                    let d = derivative_values(&grid, y[b].comp(i, j), a, 1).expect("validated");
                    let gi = ginv.comp(a, b);
                    for p in 0..n {
                        let mut v = d[p];
                        for c in 0..dim {
                            v += bconn.gamma.at(&[c, a, b], p) * x[c].at(i, j, p)
                                + bconn.gamma.at(&[c, a, i], p) * x[b].at(c, j, p)
                                + bconn.gamma.at(&[c, a, j], p) * x[b].at(i, c, p);
                        }
                        out[p] -= gi[p] * v;
                    }
                }
            }
        }
        out
    });

    let grad = gradient(&state.phi)?;
    let hess = if params.alpha2 != 0.0 { Some(hessian(&state.phi, &conn)?) } else { None };
    let (a1, a2) = (params.alpha1, params.alpha2);
    let bg_riem = &bg.bundle.riem_low;
    let bg_ginv = &bconn.ginv;
    let lower = SymTensorField::from_matrices(grid, margin, |p| {
        let gi = ginv.matrix(p);
        let gm = g.matrix(p);
        let xs = |c: usize, k: usize, l: usize| x[c].at(k, l, p);
        let mut out = [[0.0; 3]; 3];
        // h[i][q] = g_ip g̃^pq
        let mut h = [[0.0; 3]; 3];
        if !bg.flat {
            let bgi = bg_ginv.matrix(p);
            for i in 0..dim {
                for q in 0..dim {
                    h[i][q] = (0..dim).map(|pp| gm[i][pp] * bgi[pp][q]).sum();
                }
            }
        }
        for i in 0..dim {
            for j in i..dim {
                let mut curv = 0.0;
                if !bg.flat {
                    for a in 0..dim {
                        for b in 0..dim {
                            for q in 0..dim {
                                curv += gi[a][b]
                                    * (h[i][q] * bg_riem.at(&[j, a, q, b], p) + h[j][q] * bg_riem.at(&[i, a, q, b], p));
                            }
                        }
                    }
                }
                let mut quad = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        for pp in 0..dim {
                            for q in 0..dim {
                                let w = gi[a][b] * gi[pp][q];
                                if w == 0.0 {
                                    continue;
                                }
                                quad += w
                                    * (xs(i, pp, a) * xs(j, q, b) + 2.0 * xs(a, j, pp) * xs(q, i, b)
                                        - 2.0 * xs(a, j, pp) * xs(b, i, q)
                                        - 2.0 * xs(j, pp, a) * xs(b, i, q)
                                        - 2.0 * xs(i, pp, a) * xs(b, j, q));
                            }
                        }
                    }
                }
                let mut v = curv + 0.5 * quad + 2.0 * a1 * grad.at(&[i], p) * grad.at(&[j], p);
                if let Some(hs) = &hess {
                    v += 2.0 * a2 * hs.at(i, j, p);
                }
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        out
    });
    let dg = principal.lin_comb(1.0, &lower, 1.0);

    // ∂φ = g^ij(∂_i∂_jφ − Γ̃^k_ij ∂_kφ) + β₁|∇φ|²_g + β₂φ
    let phi = &state.phi;
    let mut lap_tilde = vec![0.0; n];
    for a in 0..dim {
        for b in a..dim {
            let d = mixed_values(&grid, phi.values(), a, b)?;
            let w = if a == b { 1.0 } else { 2.0 };
            let gi = ginv.comp(a, b);
            for p in 0..n {
                lap_tilde[p] += w * gi[p] * d[p];
            }
        }
    }
    if !bg.flat {
        for p in 0..n {
            let mut s = 0.0;
            for a in 0..dim {
                for b in 0..dim {
                    for k in 0..dim {
                        s += ginv.at(a, b, p) * bconn.gamma.at(&[k, a, b], p) * grad.at(&[k], p);
                    }
                }
            }
            lap_tilde[p] -= s;
        }
    }
    let grad_sq = covector_norm_sq(&grad, ginv);
    let (b1, b2) = (params.beta1, params.beta2);
    let dphi = ScalarField::map_points(grid, grad_sq.margin(), |p| {
        lap_tilde[p] + b1 * grad_sq.at(p) + b2 * phi.at(p)
    });
    Ok(Rhs { dg, dphi })
}

pub(crate) fn deturck_vector_for(conn: &Connection, bg: &Background) -> TensorField {
    deturck_vector_with(conn, &bg.bundle.conn)
}
