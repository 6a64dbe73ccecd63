use crate::grid_fields::linalg;
use crate::grid_fields::{
    partial_derivative, partial_sym, FieldError, MetricField, ScalarField, Slot, SymTensorField, TensorField,
};

use Slot::{Lower as L, Upper as U};

/// Pointwise inverse `g^ij` of a metric.
pub fn invert_metric(g: &MetricField) -> Result<SymTensorField, FieldError> {
    let grid = *g.grid();
    let dim = grid.dim();
    if let Some(p) = (0..grid.len())
        .filter(|&p| grid.is_interior(p, g.margin()))
        .find(|&p| !linalg::is_positive_definite(&g.matrix(p), dim))
    {
        let min_eigenvalue = linalg::sym_eigenvalues(&g.matrix(p), dim)[0];
        return Err(FieldError::NotPositiveDefinite { point: p, min_eigenvalue });
    }
    Ok(SymTensorField::from_matrices(grid, g.margin(), |p| {
        if grid.is_interior(p, g.margin()) {
            linalg::inverse(&g.matrix(p), dim).expect("positive definite")
        } else {
            [[0.0; 3]; 3]
        }
    }))
}

/// Levi-Civita connection of a metric on the grid, with the metric and its
/// inverse kept alongside for index gymnastics.
#[derive(Clone, Debug)]
pub struct Connection {
    /// `g_ij`.
    pub g: SymTensorField,
    /// `g^ij`.
    pub ginv: SymTensorField,
    /// `Γ^k_ij`, stored with index order `(k, i, j)`.
    pub gamma: TensorField,
    /// `Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`, index order `(l, i, j)`.
    pub gamma_low: TensorField,
}

impl Connection {
    pub fn new(g: &MetricField) -> Result<Self, FieldError> {
        let ginv = invert_metric(g)?;
        let (gamma, gamma_low) = christoffel_with(g, &ginv)?;
        Ok(Connection { g: g.as_sym().clone(), ginv, gamma, gamma_low })
    }

    pub fn dim(&self) -> usize {
        self.g.grid().dim()
    }
}

/// Christoffel symbols of the second kind `Γ^k_ij`, index order `(k, i, j)`.
pub fn christoffel(g: &MetricField) -> Result<TensorField, FieldError> {
    Ok(Connection::new(g)?.gamma)
}

fn christoffel_with(g: &MetricField, ginv: &SymTensorField) -> Result<(TensorField, TensorField), FieldError> {
    let grid = *g.grid();
    let dim = grid.dim();
    let dg = (0..dim)
        .map(|a| partial_sym(g, a, 1))
        .collect::<Result<Vec<_>, _>>()?;
    let margin = dg[0].margin();
    let gamma_low = TensorField::from_components(grid, &[L, L, L], margin, |idx| {
        let (l, i, j) = (idx[0], idx[1], idx[2]);
        let (a, b, c) = (dg[i].comp(j, l), dg[j].comp(i, l), dg[l].comp(i, j));
        (0..grid.len()).map(|p| 0.5 * (a[p] + b[p] - c[p])).collect()
    });
    let gamma = TensorField::from_components(grid, &[U, L, L], margin, |idx| {
        let (k, i, j) = (idx[0], idx[1], idx[2]);
        let mut out = vec![0.0; grid.len()];
        for l in 0..dim {
            let (gi, gl) = (ginv.comp(k, l), gamma_low.comp(&[l, i, j]));
            for p in 0..out.len() {
                out[p] += gi[p] * gl[p];
            }
        }
        out
    });
    Ok((gamma, gamma_low))
}

/// Riemann tensor in both index positions: `riem_low[i,j,k,l] = R_ijkl`
/// and `riem_up[i,j,k,l] = R^l_ijk`.
///
/// The lowered tensor is assembled from derivatives of the first-kind
/// symbols, `R_ijkl = ∂_iΓ_{l,jk} − ∂_jΓ_{l,ik} + Γ^n_jl Γ_{n,ik} − Γ^n_il Γ_{n,jk}`,
/// which is algebraically the lowered `∂_iΓ^l_jk − ∂_jΓ^l_ik + Γ^p_jkΓ^l_ip − Γ^p_ikΓ^l_jp`
/// and keeps all index symmetries exact up to round-off.
pub fn riemann(conn: &Connection) -> Result<(TensorField, TensorField), FieldError> {
    let grid = *conn.g.grid();
    let dim = grid.dim();
    let n = grid.len();
    let dgl = (0..dim)
        .map(|a| partial_derivative(&conn.gamma_low, a, 1))
        .collect::<Result<Vec<_>, _>>()?;
    let margin = dgl[0].margin();
    let (gam, gl) = (&conn.gamma, &conn.gamma_low);
    let riem_low = TensorField::from_components(grid, &[L, L, L, L], margin, |idx| {
        let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
        let (a, b) = (dgl[i].comp(&[l, j, k]), dgl[j].comp(&[l, i, k]));
        let mut out: Vec<f64> = (0..n).map(|p| a[p] - b[p]).collect();
        for m in 0..dim {
            let (g1, l1) = (gam.comp(&[m, j, l]), gl.comp(&[m, i, k]));
            let (g2, l2) = (gam.comp(&[m, i, l]), gl.comp(&[m, j, k]));
            for p in 0..n {
                out[p] += g1[p] * l1[p] - g2[p] * l2[p];
            }
        }
        out
    });
    let riem_up = raise_last(&riem_low, &conn.ginv);
    Ok((riem_up, riem_low))
}

fn raise_last(r: &TensorField, ginv: &SymTensorField) -> TensorField {
    let grid = *r.grid();
    let dim = grid.dim();
    TensorField::from_components(grid, &[L, L, L, U], r.margin(), |idx| {
        let mut out = vec![0.0; grid.len()];
        for m in 0..dim {
            let (gi, rm) = (ginv.comp(idx[3], m), r.comp(&[idx[0], idx[1], idx[2], m]));
            for p in 0..out.len() {
                out[p] += gi[p] * rm[p];
            }
        }
        out
    })
}

/// `R_jk = R^i_ijk = g^il R_ijkl` (symmetrized) and `R = g^jk R_jk`.
pub fn ricci_and_scalar(riem_low: &TensorField, ginv: &SymTensorField) -> (SymTensorField, ScalarField) {
    let grid = *riem_low.grid();
    let dim = grid.dim();
    let n = grid.len();
    let contract = |j: usize, k: usize| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for i in 0..dim {
            for l in 0..dim {
                let (gi, r) = (ginv.comp(i, l), riem_low.comp(&[i, j, k, l]));
                for p in 0..n {
                    out[p] += gi[p] * r[p];
                }
            }
        }
        out
    };
    let ric = SymTensorField::from_components(grid, riem_low.margin(), |j, k| {
        let (a, b) = (contract(j, k), contract(k, j));
        a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect()
    });
    let scal = super::trace(&ric, ginv);
    (ric, scal)
}

/// Everything curvature-related derived from one metric.
#[derive(Clone, Debug)]
pub struct CurvatureBundle {
    pub conn: Connection,
    /// `R^l_ijk`, index order `(i, j, k, l)`.
    pub riem_up: TensorField,
    /// `R_ijkl = g_ls R^s_ijk`.
    pub riem_low: TensorField,
    pub ric: SymTensorField,
    pub scal: ScalarField,
}

impl CurvatureBundle {
    pub fn new(g: &MetricField) -> Result<Self, FieldError> {
        let conn = Connection::new(g)?;
        let (riem_up, riem_low) = riemann(&conn)?;
        let (ric, scal) = ricci_and_scalar(&riem_low, &conn.ginv);
        Ok(CurvatureBundle { conn, riem_up, riem_low, ric, scal })
    }

    pub fn gamma(&self) -> &TensorField {
        &self.conn.gamma
    }

    /// `max(1, max|R_ijkl|)`, the reference size for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.riem_low.max_abs().max(1.0)
    }
}

/// Largest violation of the algebraic Riemann symmetries: antisymmetry in
/// each pair, pair exchange, and the first Bianchi identity.
pub fn riemann_symmetry_residual(riem_low: &TensorField) -> f64 {
    let grid = riem_low.grid();
    let dim = grid.dim();
    let mut worst: f64 = 0.0;
    for p in (0..grid.len()).filter(|&p| grid.is_interior(p, riem_low.margin())) {
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        let r = |a, b, c, d| riem_low.at(&[a, b, c, d], p);
                        let v = r(i, j, k, l);
                        worst = worst
                            .max((v + r(j, i, k, l)).abs())
                            .max((v + r(i, j, l, k)).abs())
                            .max((v - r(k, l, i, j)).abs())
                            .max((v + r(j, k, i, l) + r(k, i, j, l)).abs());
                    }
                }
            }
        }
    }
    worst
}
