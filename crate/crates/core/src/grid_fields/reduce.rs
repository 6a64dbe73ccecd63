use super::{FieldError, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    Max,
    Min,
    /// Discrete `L²` norm `(Σ w v² h^dim)^{1/2}`.
    L2,
    /// Quadrature `Σ w v h^dim`.
    Integral,
}

/// Reduces a field over its valid points, optionally weighted pointwise
/// (typically by `√det g`). The weight only enters `L2` and `Integral`.
pub fn field_reduce(
    f: &ScalarField,
    kind: Reduction,
    weight: Option<&ScalarField>,
) -> Result<f64, FieldError> {
    let grid = f.grid();
    let margin = f.margin().max(weight.map_or(0, |w| w.margin()));
    let mut points = (0..grid.len()).filter(|&p| grid.is_interior(p, margin)).peekable();
    if points.peek().is_none() {
        return Err(FieldError::EmptyRegion);
    }
    let w = |p: usize| weight.map_or(1.0, |w| w.at(p));
    let dv = grid.cell_volume();
    Ok(match kind {
        Reduction::Max => points.map(|p| f.at(p)).fold(f64::NEG_INFINITY, f64::max),
        Reduction::Min => points.map(|p| f.at(p)).fold(f64::INFINITY, f64::min),
        Reduction::L2 => (points.map(|p| w(p) * f.at(p) * f.at(p)).sum::<f64>() * dv).sqrt(),
        Reduction::Integral => points.map(|p| w(p) * f.at(p)).sum::<f64>() * dv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_fields::{GridSpec, Topology};
    use std::f64::consts::PI;

    #[test]
    fn integral_of_one_is_torus_area() {
        let grid = GridSpec::torus(2, 16).unwrap();
        let one = ScalarField::constant(grid, 1.0);
        let v = field_reduce(&one, Reduction::Integral, None).unwrap();
        assert!((v - 4.0 * PI * PI).abs() < 1e-12);
        let z = ScalarField::zeros(grid);
        assert_eq!(field_reduce(&z, Reduction::L2, None).unwrap(), 0.0);
    }

    #[test]
    fn max_and_min_skip_invalid_rim() {
        let grid = GridSpec::new(2, 10, 1.0, Topology::InteriorPatch).unwrap();
        let f = ScalarField::with_margin(grid, (0..100).map(|p| p as f64 - 50.0).collect(), 1).unwrap();
        let max = field_reduce(&f, Reduction::Max, None).unwrap();
        let min = field_reduce(&f, Reduction::Min, None).unwrap();
        assert_eq!(max, grid.linear_index(&[8, 8]) as f64 - 50.0);
        assert_eq!(min, grid.linear_index(&[1, 1]) as f64 - 50.0);
    }

    #[test]
    fn empty_region_is_an_error() {
        let grid = GridSpec::new(2, 8, 1.0, Topology::InteriorPatch).unwrap();
        let f = ScalarField::with_margin(grid, vec![1.0; 64], 4).unwrap();
        assert!(field_reduce(&f, Reduction::Max, None).is_err());
    }
}
