use crate::grid_fields::{FieldError, ScalarField, Slot, SymTensorField, TensorField, MAX_RANK};

use super::Connection;

/// `g^ij t_ij` for a symmetric lower-index tensor.
pub fn trace(t: &SymTensorField, ginv: &SymTensorField) -> ScalarField {
    let grid = *t.grid();
    let dim = grid.dim();
    let margin = t.margin().max(ginv.margin());
    ScalarField::map_points(grid, margin, |p| {
        let mut s = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                s += ginv.at(i, j, p) * t.at(i, j, p);
            }
        }
        s
    })
}

/// Moves slot `s` to the other variance with `metric` (`g^ij` to raise, `g_ij` to lower).
pub fn flip_slot(t: &TensorField, s: usize, metric: &SymTensorField) -> TensorField {
    let grid = *t.grid();
    let dim = grid.dim();
    let n = grid.len();
    let rank = t.rank();
    let mut slots = t.slots().to_vec();
    slots[s] = slots[s].flipped();
    TensorField::from_components(grid, &slots, t.margin().max(metric.margin()), |idx| {
        let mut out = vec![0.0; n];
        let mut moved = [0usize; MAX_RANK];
        moved[..rank].copy_from_slice(idx);
        for c in 0..dim {
            moved[s] = c;
            let (m, tc) = (metric.comp(idx[s], c), t.comp(&moved[..rank]));
            for p in 0..n {
                out[p] += m[p] * tc[p];
            }
        }
        out
    })
}

/// Brings every slot of `t` to the given variance.
pub fn with_variance(t: &TensorField, target: &[Slot], conn: &Connection) -> TensorField {
    let mut out = t.clone();
    for (s, &want) in target.iter().enumerate() {
        if out.slots()[s] != want {
            let metric = match want {
                Slot::Upper => &conn.ginv,
                Slot::Lower => &conn.g,
            };
            out = flip_slot(&out, s, metric);
        }
    }
    out
}

/// Full contraction `⟨a, b⟩_g`, raising or lowering `b` so each slot pairs
/// against the opposite variance in `a`.
pub fn inner(a: &TensorField, b: &TensorField, conn: &Connection) -> Result<ScalarField, FieldError> {
    if a.rank() != b.rank() {
        return Err(FieldError::ShapeMismatch(format!("ranks {} and {}", a.rank(), b.rank())));
    }
    let target: Vec<Slot> = a.slots().iter().map(|s| s.flipped()).collect();
    let bb = with_variance(b, &target, conn);
    Ok(contract_all(a, &bb))
}

fn contract_all(a: &TensorField, b: &TensorField) -> ScalarField {
    let grid = *a.grid();
    let n = grid.len();
    let mut out = vec![0.0; n];
    for c in 0..a.component_count() {
        let (x, y) = (a.comp_flat(c), b.comp_flat(c));
        for p in 0..n {
            out[p] += x[p] * y[p];
        }
    }
    ScalarField::from_parts(grid, out, a.margin().max(b.margin()))
}

/// `|t|²_g`, non-negative pointwise.
pub fn tensor_norm_sq(t: &TensorField, conn: &Connection) -> ScalarField {
    let target: Vec<Slot> = t.slots().iter().map(|s| s.flipped()).collect();
    let tt = with_variance(t, &target, conn);
    contract_all(t, &tt).map(|v| v.max(0.0))
}

/// `⟨a, b⟩_g = g^ik g^jl a_ij b_kl` for symmetric lower-index tensors.
pub fn sym_inner(a: &SymTensorField, b: &SymTensorField, ginv: &SymTensorField) -> ScalarField {
    let grid = *a.grid();
    let dim = grid.dim();
    let margin = a.margin().max(b.margin()).max(ginv.margin());
    ScalarField::map_points(grid, margin, |p| {
        let (ma, mb, gi) = (a.matrix(p), b.matrix(p), ginv.matrix(p));
        let mut s = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        s += gi[i][k] * gi[j][l] * ma[i][j] * mb[k][l];
                    }
                }
            }
        }
        s
    })
}

/// `|∇φ|²_g = g^ij ∂_iφ ∂_jφ` for a covector given as a rank-1 field.
pub fn covector_norm_sq(w: &TensorField, ginv: &SymTensorField) -> ScalarField {
    let grid = *w.grid();
    let dim = grid.dim();
    ScalarField::map_points(grid, w.margin().max(ginv.margin()), |p| {
        let mut s = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                s += ginv.at(i, j, p) * w.at(&[i], p) * w.at(&[j], p);
            }
        }
        s
    })
}

/// `B_ijkl = −g^pr g^qs R_ipjq R_krls`.
pub fn b_tensor(riem_low: &TensorField, ginv: &SymTensorField) -> TensorField {
    let grid = *riem_low.grid();
    let dim = grid.dim();
    let n = grid.len();
    // s[k, p, l, q] = g^pr g^qs R_krls
    let half = flip_slot(riem_low, 1, ginv);
    let raised = flip_slot(&half, 3, ginv);
    TensorField::from_components(grid, riem_low.slots(), riem_low.margin(), |idx| {
        let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
        let mut out = vec![0.0; n];
        for p in 0..dim {
            for q in 0..dim {
                let (r, s) = (riem_low.comp(&[i, p, j, q]), raised.comp(&[k, p, l, q]));
                for x in 0..n {
                    out[x] -= r[x] * s[x];
                }
            }
        }
        out
    })
}

/// Symmetric part `(t_ij + t_ji)/2` of a rank-2 tensor.
pub fn symmetrize(t: &TensorField) -> SymTensorField {
    SymTensorField::symmetrize(t)
}
