use rayon::prelude::*;

use super::field::{mask_margin, ScalarField, SymTensorField, TensorField};
use super::{Accuracy, FieldError, GridSpec};

/// Central difference weights `c_1..c_r`. First derivatives are assembled
/// as `Σ c_k (f_{+k} − f_{−k})/h`, second as `Σ c_k ((f_{+k} − f_0) + (f_{−k} − f_0))/h²`,
/// so constants differentiate to exactly zero.
fn weights(accuracy: Accuracy, order: u32) -> &'static [f64] {
    match (accuracy, order) {
        (Accuracy::Second, 1) => &[0.5],
        (Accuracy::Second, _) => &[1.0],
        (Accuracy::Fourth, 1) => &[8.0 / 12.0, -1.0 / 12.0],
        (Accuracy::Fourth, _) => &[16.0 / 12.0, -1.0 / 12.0],
    }
}

fn check(grid: &GridSpec, axis: usize, order: u32, margin: usize) -> Result<usize, FieldError> {
    if axis >= grid.dim() {
        return Err(FieldError::AxisOutOfRange { axis, dim: grid.dim() });
    }
    if order != 1 && order != 2 {
        return Err(FieldError::UnsupportedOrder(order));
    }
    let out = margin + grid.accuracy().radius();
    if !grid.is_periodic() && 2 * out >= grid.n() {
        return Err(FieldError::PatchTooSmall { n: grid.n(), margin: out });
    }
    Ok(out)
}

/// `∂_axis^order` of one array of grid values. On a patch, points within
/// the stencil radius of the boundary are set to zero.
pub fn derivative_values(
    grid: &GridSpec,
    values: &[f64],
    axis: usize,
    order: u32,
) -> Result<Vec<f64>, FieldError> {
    check(grid, axis, order, 0)?;
    Ok(apply(grid, values, axis, order))
}

fn apply(grid: &GridSpec, values: &[f64], axis: usize, order: u32) -> Vec<f64> {
    let w = weights(grid.accuracy(), order);
    let r = grid.accuracy().radius() as isize;
    let n = grid.n() as isize;
    let stride = grid.stride(axis) as isize;
    let scale = grid.h().powi(order as i32).recip();
    let periodic = grid.is_periodic();
    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(grid.n().max(1) * grid.stride(axis).max(1))
        .enumerate()
        .for_each(|(block, chunk)| {
            // each chunk is one full period of `axis` for a fixed set of slower axes
            let base = block * chunk.len();
            for (local, o) in chunk.iter_mut().enumerate() {
                let p = (base + local) as isize;
                let i = (local as isize) / stride;
                if !periodic && (i < r || i >= n - r) {
                    continue;
                }
                let at = |off: isize| {
                    let mut j = i + off;
                    if j < 0 {
                        j += n;
                    } else if j >= n {
                        j -= n;
                    }
                    values[(p + (j - i) * stride) as usize]
                };
                let mut acc = 0.0;
                if order == 1 {
                    for (k, c) in w.iter().enumerate() {
                        let k = k as isize + 1;
                        acc += c * (at(k) - at(-k));
                    }
                } else {
                    let f0 = values[p as usize];
                    for (k, c) in w.iter().enumerate() {
                        let k = k as isize + 1;
                        acc += c * ((at(k) - f0) + (at(-k) - f0));
                    }
                }
                *o = acc * scale;
            }
        });
    out
}

/// Partial derivative of a scalar field along one axis.
pub fn partial_scalar(f: &ScalarField, axis: usize, order: u32) -> Result<ScalarField, FieldError> {
    let grid = *f.grid();
    let margin = check(&grid, axis, order, f.margin())?;
    let mut v = apply(&grid, f.values(), axis, order);
    mask_margin(&grid, margin, &mut v);
    Ok(ScalarField::from_parts(grid, v, margin))
}

/// Componentwise partial derivative of every component of a tensor field.
/// The result has the same index structure; it is not itself a tensor.
pub fn partial_derivative(t: &TensorField, axis: usize, order: u32) -> Result<TensorField, FieldError> {
    let grid = *t.grid();
    let margin = check(&grid, axis, order, t.margin())?;
    let out = TensorField::from_components(grid, t.slots(), 0, |idx| {
        apply(&grid, t.comp(idx), axis, order)
    });
    Ok(out.with_margin(margin))
}

/// Componentwise partial derivative of a symmetric 2-tensor field.
pub fn partial_sym(t: &SymTensorField, axis: usize, order: u32) -> Result<SymTensorField, FieldError> {
    let grid = *t.grid();
    let margin = check(&grid, axis, order, t.margin())?;
    Ok(SymTensorField::from_components(grid, margin, |i, j| apply(&grid, t.comp(i, j), axis, order)))
}

/// `∂_a ∂_b` of raw values, using the second-derivative stencil on the diagonal
/// and nested first derivatives off it.
pub fn mixed_values(grid: &GridSpec, values: &[f64], a: usize, b: usize) -> Result<Vec<f64>, FieldError> {
    if a == b {
        derivative_values(grid, values, a, 2)
    } else {
        check(grid, a, 1, grid.accuracy().radius())?;
        let first = derivative_values(grid, values, a, 1)?;
        derivative_values(grid, &first, b, 1)
    }
}

/// Margin left after applying `count` nested stencils to a field with `margin`.
pub fn grown_margin(grid: &GridSpec, margin: usize, count: usize) -> usize {
    if grid.is_periodic() {
        0
    } else {
        margin + count * grid.accuracy().radius()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_fields::Topology;

    #[test]
    fn sine_derivative_at_origin() {
        let grid = GridSpec::torus(2, 64).unwrap();
        let f = ScalarField::from_fn(grid, |x| x[0].sin());
        let d = partial_scalar(&f, 0, 1).unwrap();
        // leading truncation error of the fourth order stencil is h^4/30
        let h = grid.h();
        assert!((d.at(0) - 1.0).abs() < h.powi(4) / 30.0 * 1.01);
        let fine = GridSpec::torus(2, 128).unwrap();
        let df = partial_scalar(&ScalarField::from_fn(fine, |x| x[0].sin()), 0, 1).unwrap();
        assert!((df.at(0) - 1.0).abs() < 1e-6);
        let d2 = partial_scalar(&f, 0, 2).unwrap();
        let p = grid.linear_index(&[16, 3]);
        assert!((d2.at(p) + 1.0).abs() < h.powi(4) / 90.0 * 1.01);
    }

    #[test]
    fn quadratic_second_derivative_on_patch() {
        let grid = GridSpec::new(2, 33, 2.0, Topology::InteriorPatch).unwrap();
        let f = ScalarField::from_fn(grid, |x| x[1] * x[1]);
        let d = partial_scalar(&f, 1, 2).unwrap();
        assert_eq!(d.margin(), 1);
        let p = grid.linear_index(&[10, 16]);
        assert!((d.at(p) - 2.0).abs() < 1e-12);
        assert_eq!(d.at(grid.linear_index(&[10, 0])), 0.0);
    }

    #[test]
    fn fourth_order_convergence_on_torus() {
        let err = |n: usize| {
            let grid = GridSpec::torus(3, n).unwrap();
            let f = ScalarField::from_fn(grid, |x| (x[2] + 0.3).sin() * x[0].cos());
            let d = partial_scalar(&f, 2, 1).unwrap();
            (0..grid.len())
                .map(|p| {
                    let x = grid.position(p);
                    (d.at(p) - (x[2] + 0.3).cos() * x[0].cos()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(16) / err(32);
        assert!(ratio > 15.0, "ratio {ratio}");
    }

    #[test]
    fn patch_too_small_is_rejected() {
        let grid = GridSpec::new(2, 8, 1.0, Topology::InteriorPatch).unwrap();
        let f = ScalarField::from_parts(grid, vec![0.0; 64], 3);
        assert!(matches!(partial_scalar(&f, 0, 1), Err(FieldError::PatchTooSmall { .. })));
        assert!(matches!(partial_scalar(&f, 2, 1), Err(FieldError::AxisOutOfRange { .. })));
    }
}
