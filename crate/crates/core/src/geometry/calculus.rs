use crate::grid_fields::{
    derivative_values, grown_margin, mixed_values, FieldError, ScalarField, Slot, SymTensorField, TensorField,
};

use super::Connection;

/// `∂_a φ` as a covector field.
pub fn gradient(phi: &ScalarField) -> Result<TensorField, FieldError> {
    let grid = *phi.grid();
    let margin = grown_margin(&grid, phi.margin(), 1);
    let parts = (0..grid.dim())
        .map(|a| derivative_values(&grid, phi.values(), a, 1))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TensorField::from_components(grid, &[Slot::Lower], margin, |idx| parts[idx[0]].clone()))
}

/// `∇_a t`, with the new derivative slot first:
/// `∂_a t_I − Σ_lower Γ^c_{a i_s} t_{I[s←c]} + Σ_upper Γ^{i_s}_{a c} t_{I[s←c]}`.
pub fn covariant_derivative(t: &TensorField, conn: &Connection) -> Result<TensorField, FieldError> {
    let grid = *t.grid();
    let dim = grid.dim();
    let n = grid.len();
    let rank = t.rank();
    let mut slots = vec![Slot::Lower];
    slots.extend_from_slice(t.slots());
    let margin = grown_margin(&grid, t.margin(), 1).max(conn.gamma.margin());
    // validate the axis/patch size once, outside the parallel closure
    derivative_values(&grid, t.comp_flat(0), 0, 1)?;
    let gamma = &conn.gamma;
    Ok(TensorField::from_components(grid, &slots, margin, |idx| {
        let a = idx[0];
        let inner = &idx[1..];
        let mut out = derivative_values(&grid, t.comp(inner), a, 1).expect("validated");
        let mut moved = [0usize; crate::grid_fields::MAX_RANK];
        moved[..rank].copy_from_slice(inner);
        for s in 0..rank {
            for c in 0..dim {
                moved[s] = c;
                let tc = t.comp(&moved[..rank]);
                let gc = match t.slots()[s] {
                    Slot::Lower => gamma.comp(&[c, a, inner[s]]),
                    Slot::Upper => gamma.comp(&[inner[s], a, c]),
                };
                let sign = if t.slots()[s] == Slot::Lower { -1.0 } else { 1.0 };
                for p in 0..n {
                    out[p] += sign * gc[p] * tc[p];
                }
            }
            moved[s] = inner[s];
        }
        out
    }))
}

/// `∇²φ_ij = ∂_i∂_jφ − Γ^k_ij ∂_kφ`; symmetric by storage.
pub fn hessian(phi: &ScalarField, conn: &Connection) -> Result<SymTensorField, FieldError> {
    let grid = *phi.grid();
    let dim = grid.dim();
    let n = grid.len();
    let margin = grown_margin(&grid, phi.margin(), 1).max(conn.gamma.margin());
    let grad = gradient(phi)?;
    mixed_values(&grid, phi.values(), 0, dim - 1)?;
    Ok(SymTensorField::from_components(grid, margin, |i, j| {
        let mut out = mixed_values(&grid, phi.values(), i, j).expect("validated");
        for k in 0..dim {
            let (gk, dk) = (conn.gamma.comp(&[k, i, j]), grad.comp(&[k]));
            for p in 0..n {
                out[p] -= gk[p] * dk[p];
            }
        }
        out
    }))
}

/// `Δφ = g^ij ∇_i∇_jφ`.
pub fn laplacian(phi: &ScalarField, conn: &Connection) -> Result<ScalarField, FieldError> {
    Ok(super::trace(&hessian(phi, conn)?, &conn.ginv))
}

/// Rough Laplacian `g^ab ∇_a∇_b t` of a tensor of any rank, evaluated
/// without storing the full second covariant derivative.
pub fn laplacian_tensor(t: &TensorField, conn: &Connection) -> Result<TensorField, FieldError> {
    let grid = *t.grid();
    let dim = grid.dim();
    let n = grid.len();
    let rank = t.rank();
    let dt = covariant_derivative(t, conn)?;
    let margin = grown_margin(&grid, dt.margin(), 1);
    derivative_values(&grid, dt.comp_flat(0), 0, 1)?;
    let (ginv, gamma) = (&conn.ginv, &conn.gamma);
    // contracted symbols: gc[c] = g^ab Γ^c_ab, m[b][c][i] = g^ab Γ^c_ai
    let gc: Vec<Vec<f64>> = (0..dim)
        .map(|c| {
            let mut v = vec![0.0; n];
            for a in 0..dim {
                for b in 0..dim {
                    let (gi, g) = (ginv.comp(a, b), gamma.comp(&[c, a, b]));
                    for p in 0..n {
                        v[p] += gi[p] * g[p];
                    }
                }
            }
            v
        })
        .collect();
    let m: Vec<Vec<f64>> = (0..dim * dim * dim)
        .map(|flat| {
            let (b, c, i) = (flat / (dim * dim), (flat / dim) % dim, flat % dim);
            let mut v = vec![0.0; n];
            for a in 0..dim {
                let (gi, g) = (ginv.comp(a, b), gamma.comp(&[c, a, i]));
                for p in 0..n {
                    v[p] += gi[p] * g[p];
                }
            }
            v
        })
        .collect();
    let mi = |b: usize, c: usize, i: usize| &m[(b * dim + c) * dim + i];
    Ok(TensorField::from_components(grid, t.slots(), margin, |idx| {
        let mut out = vec![0.0; n];
        let mut full = [0usize; crate::grid_fields::MAX_RANK];
        full[1..=rank].copy_from_slice(idx);
        for b in 0..dim {
            full[0] = b;
            let comp = dt.comp(&full[..=rank]);
            for a in 0..dim {
                let d = derivative_values(&grid, comp, a, 1).expect("validated");
                let gi = ginv.comp(a, b);
                for p in 0..n {
                    out[p] += gi[p] * d[p];
                }
            }
        }
        for c in 0..dim {
            full[0] = c;
            let comp = dt.comp(&full[..=rank]);
            for p in 0..n {
                out[p] -= gc[c][p] * comp[p];
            }
        }
        for s in 0..rank {
            for b in 0..dim {
                for c in 0..dim {
                    full[0] = b;
                    full[s + 1] = c;
                    let comp = dt.comp(&full[..=rank]);
                    let (coef, sign) = match t.slots()[s] {
                        Slot::Lower => (mi(b, c, idx[s]), -1.0),
                        Slot::Upper => (mi(b, idx[s], c), 1.0),
                    };
                    for p in 0..n {
                        out[p] += sign * coef[p] * comp[p];
                    }
                }
            }
            full[s + 1] = idx[s];
        }
        out
    }))
}
