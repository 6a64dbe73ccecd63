use crate::grid_fields::{FieldError, ScalarField, Slot, TensorField};

use super::{covariant_derivative, covector_norm_sq, gradient, tensor_norm_sq, CurvatureBundle};

fn valid_max(f: &ScalarField) -> f64 {
    let grid = f.grid();
    (0..grid.len())
        .filter(|&p| grid.is_interior(p, f.margin()))
        .map(|p| f.at(p))
        .fold(0.0, f64::max)
}

/// Largest pointwise norm of the two contracted Bianchi residuals
/// `∇^i R_ij − ½∇_j R` and `∇^l R_ijkl − (∇_i R_jk − ∇_j R_ik)`.
pub fn bianchi_residual(bundle: &CurvatureBundle) -> Result<f64, FieldError> {
    let conn = &bundle.conn;
    let grid = *bundle.scal.grid();
    let dim = grid.dim();
    let d_ric = covariant_derivative(&bundle.ric.to_tensor(), conn)?;
    let d_scal = gradient(&bundle.scal)?;
    let ginv = &conn.ginv;
    let first = TensorField::from_fn(grid, &[Slot::Lower], d_ric.margin(), |idx, p| {
        let j = idx[0];
        let mut div = 0.0;
        for a in 0..dim {
            for i in 0..dim {
                div += ginv.at(a, i, p) * d_ric.at(&[a, i, j], p);
            }
        }
        div - 0.5 * d_scal.at(&[j], p)
    });
    let d_rm = covariant_derivative(&bundle.riem_low, conn)?;
    let second = TensorField::from_fn(grid, &[Slot::Lower; 3], d_rm.margin().max(d_ric.margin()), |idx, p| {
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        let mut div = 0.0;
        for a in 0..dim {
            for l in 0..dim {
                div += ginv.at(a, l, p) * d_rm.at(&[a, i, j, k, l], p);
            }
        }
        div - (d_ric.at(&[i, j, k], p) - d_ric.at(&[j, i, k], p))
    });
    let r1 = valid_max(&covector_norm_sq(&first, ginv)).sqrt();
    let r2 = valid_max(&tensor_norm_sq(&second, conn)).sqrt();
    Ok(r1.max(r2))
}

/// Largest component of `[∇_i, ∇_j]ω_k + R^p_ijk ω_p` for a covector field `ω`.
pub fn ricci_identity_residual(omega: &TensorField, bundle: &CurvatureBundle) -> Result<f64, FieldError> {
    let conn = &bundle.conn;
    let grid = *omega.grid();
    let dim = grid.dim();
    let dd = covariant_derivative(&covariant_derivative(omega, conn)?, conn)?;
    let margin = dd.margin().max(bundle.riem_up.margin());
    let mut worst: f64 = 0.0;
    for p in (0..grid.len()).filter(|&p| grid.is_interior(p, margin)) {
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let mut v = dd.at(&[i, j, k], p) - dd.at(&[j, i, k], p);
                    for q in 0..dim {
                        v += bundle.riem_up.at(&[i, j, k, q], p) * omega.at(&[q], p);
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    Ok(worst)
}
