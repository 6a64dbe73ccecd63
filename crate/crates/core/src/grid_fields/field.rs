use rayon::prelude::*;

use super::linalg::{self, Sym};
use super::{FieldError, GridSpec};

/// Largest tensor rank any kernel in this crate builds (`∇²Rm` plus one
/// covariant derivative).
pub const MAX_RANK: usize = 8;

/// Multi-index scratch type; only the first `rank` entries are meaningful.
pub type Index = [usize; MAX_RANK];

/// Variance of one tensor slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Upper,
    Lower,
}

impl Slot {
    pub fn flipped(self) -> Slot {
        match self {
            Slot::Upper => Slot::Lower,
            Slot::Lower => Slot::Upper,
        }
    }
}

/// Zero every value closer than `margin` cells to a patch boundary.
pub(crate) fn mask_margin(grid: &GridSpec, margin: usize, values: &mut [f64]) {
    if grid.is_periodic() || margin == 0 {
        return;
    }
    for (p, v) in values.iter_mut().enumerate() {
        if !grid.is_interior(p, margin) {
            *v = 0.0;
        }
    }
}

/// A real value per grid point.
///
/// `margin` counts the boundary layers of an interior patch on which the
/// values are undefined (stored as zero). It is always zero on a torus.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
    margin: usize,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, FieldError> {
        Self::with_margin(grid, values, 0)
    }

    pub fn with_margin(grid: GridSpec, mut values: Vec<f64>, margin: usize) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        let margin = if grid.is_periodic() { 0 } else { margin };
        mask_margin(&grid, margin, &mut values);
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite { point: p });
        }
        Ok(ScalarField { grid, values, margin })
    }

    /// Internal constructor for kernels that already guarantee the invariants.
    pub(crate) fn from_parts(grid: GridSpec, mut values: Vec<f64>, margin: usize) -> Self {
        let margin = if grid.is_periodic() { 0 } else { margin };
        mask_margin(&grid, margin, &mut values);
        ScalarField { grid, values, margin }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        ScalarField { grid, values: vec![value; grid.len()], margin: 0 }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at every point position.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|p| f(grid.position(p))).collect();
        ScalarField { grid, values, margin: 0 }
    }

    /// Builds a field from `f(point)`, evaluated in parallel.
    pub fn map_points(grid: GridSpec, margin: usize, f: impl Fn(usize) -> f64 + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(&f).collect();
        Self::from_parts(grid, values, margin)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, p: usize) -> f64 {
        self.values[p]
    }

    /// Pointwise `a*self + b*other`.
    pub fn lin_comb(&self, a: f64, other: &ScalarField, b: f64) -> ScalarField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        ScalarField::from_parts(self.grid, values, self.margin.max(other.margin))
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let values = self.values.iter().zip(&other.values).map(|(&x, &y)| f(x, y)).collect();
        ScalarField::from_parts(self.grid, values, self.margin.max(other.margin))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField::from_parts(self.grid, self.values.iter().map(|&v| f(v)).collect(), self.margin)
    }

    /// Periodic translation by `offset` cells along `axis`.
    pub fn shifted(&self, axis: usize, offset: isize) -> ScalarField {
        let values = (0..self.grid.len())
            .map(|p| self.values[self.grid.shifted(p, axis, -offset)])
            .collect();
        ScalarField::from_parts(self.grid, values, self.margin)
    }
}

/// Components of a tensor field of rank at least one, stored component-major:
/// one contiguous array of grid values per multi-index, first slot most
/// significant.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    grid: GridSpec,
    slots: Vec<Slot>,
    data: Vec<f64>,
    margin: usize,
}

impl TensorField {
    pub fn zeros(grid: GridSpec, slots: &[Slot]) -> Self {
        assert!(!slots.is_empty() && slots.len() <= MAX_RANK, "unsupported tensor rank");
        let count = grid.dim().pow(slots.len() as u32);
        TensorField { grid, slots: slots.to_vec(), data: vec![0.0; count * grid.len()], margin: 0 }
    }

    /// Builds every component value with `f(multi_index, point)`.
    /// Components are evaluated in parallel; the result is independent of
    /// thread count.
    pub fn from_fn(
        grid: GridSpec,
        slots: &[Slot],
        margin: usize,
        f: impl Fn(&[usize], usize) -> f64 + Sync,
    ) -> Self {
        let mut t = Self::zeros(grid, slots);
        let npts = grid.len();
        let rank = slots.len();
        let dim = grid.dim();
        t.data.par_chunks_mut(npts).enumerate().for_each(|(c, out)| {
            let idx = decode(c, rank, dim);
            for (p, v) in out.iter_mut().enumerate() {
                *v = f(&idx[..rank], p);
            }
        });
        t.set_margin(margin);
        t
    }

    /// Builds each component array at once with `f(multi_index)`.
    pub fn from_components(
        grid: GridSpec,
        slots: &[Slot],
        margin: usize,
        f: impl Fn(&[usize]) -> Vec<f64> + Sync,
    ) -> Self {
        let mut t = Self::zeros(grid, slots);
        let npts = grid.len();
        let rank = slots.len();
        let dim = grid.dim();
        t.data.par_chunks_mut(npts).enumerate().for_each(|(c, out)| {
            let idx = decode(c, rank, dim);
            let values = f(&idx[..rank]);
            out.copy_from_slice(&values);
        });
        t.set_margin(margin);
        t
    }

    /// Builds all components at once per point with `f(point, out)`, where
    /// `out` is indexed by the flat component offset.
    pub fn from_points(
        grid: GridSpec,
        slots: &[Slot],
        margin: usize,
        f: impl Fn(usize, &mut [f64]) + Sync,
    ) -> Self {
        let mut t = Self::zeros(grid, slots);
        let npts = grid.len();
        let count = t.component_count();
        let mut point_major = vec![0.0; count * npts];
        point_major.par_chunks_mut(count).enumerate().for_each(|(p, out)| {
            if grid.is_interior(p, margin) {
                f(p, out)
            }
        });
        t.data.par_chunks_mut(npts).enumerate().for_each(|(c, out)| {
            for (p, v) in out.iter_mut().enumerate() {
                *v = point_major[p * count + c];
            }
        });
        t.set_margin(margin);
        t
    }

    fn set_margin(&mut self, margin: usize) {
        self.margin = if self.grid.is_periodic() { 0 } else { margin };
        if self.margin > 0 {
            let (grid, m) = (self.grid, self.margin);
            self.data
                .par_chunks_mut(grid.len())
                .for_each(|chunk| mask_margin(&grid, m, chunk));
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn component_count(&self) -> usize {
        self.grid.dim().pow(self.rank() as u32)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn component_offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        let dim = self.grid.dim();
        idx.iter().fold(0, |acc, &i| acc * dim + i)
    }

    pub fn multi_index(&self, c: usize) -> Index {
        decode(c, self.rank(), self.grid.dim())
    }

    pub fn comp(&self, idx: &[usize]) -> &[f64] {
        self.comp_flat(self.component_offset(idx))
    }

    pub fn comp_flat(&self, c: usize) -> &[f64] {
        let n = self.grid.len();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn at(&self, idx: &[usize], p: usize) -> f64 {
        self.data[self.component_offset(idx) * self.grid.len() + p]
    }

    pub fn component_field(&self, idx: &[usize]) -> ScalarField {
        ScalarField::from_parts(self.grid, self.comp(idx).to_vec(), self.margin)
    }

    /// Largest absolute component value over valid points.
    pub fn max_abs(&self) -> f64 {
        let n = self.grid.len();
        self.data
            .iter()
            .enumerate()
            .filter(|(k, _)| self.grid.is_interior(k % n, self.margin))
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    /// Pointwise `a*self + b*other` for tensors of identical shape.
    pub fn lin_comb(&self, a: f64, other: &TensorField, b: f64) -> TensorField {
        assert_eq!(self.slots, other.slots, "tensor shapes differ");
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        let mut t = TensorField { grid: self.grid, slots: self.slots.clone(), data, margin: 0 };
        t.set_margin(self.margin.max(other.margin));
        t
    }

    pub fn scaled(&self, a: f64) -> TensorField {
        let data = self.data.iter().map(|x| a * x).collect();
        TensorField { grid: self.grid, slots: self.slots.clone(), data, margin: self.margin }
    }

    /// Same components re-tagged with a wider margin (used after stencils).
    pub(crate) fn with_margin(mut self, margin: usize) -> Self {
        self.set_margin(margin);
        self
    }

    /// Periodic translation by `offset` cells along `axis`.
    pub fn shifted(&self, axis: usize, offset: isize) -> TensorField {
        let grid = self.grid;
        TensorField::from_fn(grid, &self.slots, self.margin, |idx, p| {
            self.at(idx, grid.shifted(p, axis, -offset))
        })
    }
}

pub(crate) fn decode(mut c: usize, rank: usize, dim: usize) -> Index {
    let mut idx = [0; MAX_RANK];
    for s in (0..rank).rev() {
        idx[s] = c % dim;
        c /= dim;
    }
    idx
}

/// Number of stored components of a symmetric 2-tensor.
pub fn sym_count(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Storage slot of `(i, j)` in the upper triangle, row-major.
#[inline]
pub fn sym_index(dim: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * dim - a * (a + 1) / 2 + b
}

/// Symmetric 2-tensor field stored as its upper triangle, so `t_ij = t_ji`
/// holds by construction. Both slots share one variance, fixed by context
/// (`g_ij`, `Ric_ij` are lower; the inverse metric is upper).
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField {
    grid: GridSpec,
    data: Vec<f64>,
    margin: usize,
}

impl SymTensorField {
    pub fn zeros(grid: GridSpec) -> Self {
        SymTensorField { grid, data: vec![0.0; sym_count(grid.dim()) * grid.len()], margin: 0 }
    }

    /// Builds component `(i, j)` for `i <= j` from `f(i, j, point)`.
    pub fn from_fn(grid: GridSpec, margin: usize, f: impl Fn(usize, usize, usize) -> f64 + Sync) -> Self {
        let mut t = Self::zeros(grid);
        let dim = grid.dim();
        let pairs = upper_pairs(dim);
        t.data
            .par_chunks_mut(grid.len())
            .zip(pairs.par_iter())
            .for_each(|(out, &(i, j))| {
                for (p, v) in out.iter_mut().enumerate() {
                    *v = f(i, j, p);
                }
            });
        t.apply_margin(margin);
        t
    }

    /// Builds each stored component array `(i, j)`, `i <= j`, at once.
    pub fn from_components(grid: GridSpec, margin: usize, f: impl Fn(usize, usize) -> Vec<f64> + Sync) -> Self {
        let mut t = Self::zeros(grid);
        let pairs = upper_pairs(grid.dim());
        t.data
            .par_chunks_mut(grid.len())
            .zip(pairs.par_iter())
            .for_each(|(out, &(i, j))| out.copy_from_slice(&f(i, j)));
        t.apply_margin(margin);
        t
    }

    /// Builds the field from one symmetric matrix per point.
    pub fn from_matrices(grid: GridSpec, margin: usize, f: impl Fn(usize) -> Sym + Sync) -> Self {
        let mats: Vec<Sym> = (0..grid.len()).into_par_iter().map(&f).collect();
        Self::from_fn(grid, margin, |i, j, p| mats[p][i][j])
    }

    fn apply_margin(&mut self, margin: usize) {
        self.margin = if self.grid.is_periodic() { 0 } else { margin };
        if self.margin > 0 {
            let (grid, m) = (self.grid, self.margin);
            self.data.par_chunks_mut(grid.len()).for_each(|c| mask_margin(&grid, m, c));
        }
    }

    /// Samples `f(i, j, position)` at every point.
    pub fn from_positions(grid: GridSpec, f: impl Fn(usize, usize, [f64; 3]) -> f64 + Sync) -> Self {
        Self::from_fn(grid, 0, |i, j, p| f(i, j, grid.position(p)))
    }

    /// Symmetric part of a rank-2 tensor field, `(t_ij + t_ji)/2`.
    pub fn symmetrize(t: &TensorField) -> Self {
        assert_eq!(t.rank(), 2);
        Self::from_fn(*t.grid(), t.margin(), |i, j, p| 0.5 * (t.at(&[i, j], p) + t.at(&[j, i], p)))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn comp(&self, i: usize, j: usize) -> &[f64] {
        let n = self.grid.len();
        let c = sym_index(self.grid.dim(), i, j);
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, p: usize) -> f64 {
        self.data[sym_index(self.grid.dim(), i, j) * self.grid.len() + p]
    }

    /// Pointwise matrix at `p`, padded with zeros beyond `dim`.
    pub fn matrix(&self, p: usize) -> Sym {
        let dim = self.grid.dim();
        let mut m = [[0.0; 3]; 3];
        for i in 0..dim {
            for j in 0..dim {
                m[i][j] = self.at(i, j, p);
            }
        }
        m
    }

    /// Full (non-symmetric-storage) rank-2 lower-index copy.
    pub fn to_tensor(&self) -> TensorField {
        TensorField::from_fn(self.grid, &[Slot::Lower, Slot::Lower], self.margin, |idx, p| {
            self.at(idx[0], idx[1], p)
        })
    }

    pub fn lin_comb(&self, a: f64, other: &SymTensorField, b: f64) -> SymTensorField {
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        SymTensorField { grid: self.grid, data, margin: self.margin.max(other.margin) }
    }

    pub fn scaled(&self, a: f64) -> SymTensorField {
        SymTensorField { grid: self.grid, data: self.data.iter().map(|x| a * x).collect(), margin: self.margin }
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.grid.len();
        self.data
            .iter()
            .enumerate()
            .filter(|(k, _)| self.grid.is_interior(k % n, self.margin))
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    pub fn shifted(&self, axis: usize, offset: isize) -> SymTensorField {
        let grid = self.grid;
        Self::from_fn(grid, self.margin, |i, j, p| self.at(i, j, grid.shifted(p, axis, -offset)))
    }
}

pub(crate) fn upper_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(sym_count(dim));
    for i in 0..dim {
        for j in i..dim {
            v.push((i, j));
        }
    }
    v
}

/// A symmetric positive-definite lower-index 2-tensor field `g_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField(SymTensorField);

impl MetricField {
    /// Validates positive definiteness at every point.
    pub fn new(g: SymTensorField) -> Result<Self, FieldError> {
        if let Some(p) = first_non_positive(&g) {
            return Err(FieldError::NotPositiveDefinite { point: p, min_eigenvalue: min_eig_at(&g, p) });
        }
        Ok(MetricField(g))
    }

    /// Euclidean metric `δ_ij`.
    pub fn flat(grid: GridSpec) -> Self {
        MetricField(SymTensorField::from_fn(grid, 0, |i, j, _| if i == j { 1.0 } else { 0.0 }))
    }

    /// Conformally flat metric `e^{2u} δ`.
    pub fn conformal(u: &ScalarField) -> Self {
        let grid = *u.grid();
        MetricField(SymTensorField::from_fn(grid, u.margin(), |i, j, p| {
            if i == j {
                (2.0 * u.at(p)).exp()
            } else {
                0.0
            }
        }))
    }

    pub fn from_positions(
        grid: GridSpec,
        f: impl Fn(usize, usize, [f64; 3]) -> f64 + Sync,
    ) -> Result<Self, FieldError> {
        Self::new(SymTensorField::from_positions(grid, f))
    }

    pub fn as_sym(&self) -> &SymTensorField {
        &self.0
    }

    pub fn into_sym(self) -> SymTensorField {
        self.0
    }

    /// Smallest pointwise eigenvalue over the grid.
    pub fn min_eigenvalue(&self) -> f64 {
        (0..self.0.grid.len())
            .filter(|&p| self.0.grid.is_interior(p, self.0.margin))
            .map(|p| min_eig_at(&self.0, p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest ratio `λ_max/λ_min` of the pointwise eigenvalues.
    pub fn max_eigen_ratio(&self) -> f64 {
        let dim = self.0.grid.dim();
        (0..self.0.grid.len())
            .map(|p| {
                let ev = linalg::sym_eigenvalues(&self.0.matrix(p), dim);
                ev[dim - 1] / ev[0]
            })
            .fold(0.0, f64::max)
    }

    /// `√det g` per point.
    pub fn volume_density(&self) -> ScalarField {
        let dim = self.0.grid.dim();
        ScalarField::map_points(self.0.grid, self.0.margin, |p| linalg::det(&self.0.matrix(p), dim).sqrt())
    }
}

impl std::ops::Deref for MetricField {
    type Target = SymTensorField;

    fn deref(&self) -> &SymTensorField {
        &self.0
    }
}

fn min_eig_at(g: &SymTensorField, p: usize) -> f64 {
    linalg::sym_eigenvalues(&g.matrix(p), g.grid.dim())[0]
}

fn first_non_positive(g: &SymTensorField) -> Option<usize> {
    let dim = g.grid.dim();
    (0..g.grid.len())
        .filter(|&p| g.grid.is_interior(p, g.margin))
        .find(|&p| {
            let m = g.matrix(p);
            !m.iter().flatten().all(|v| v.is_finite()) || !linalg::is_positive_definite(&m, dim)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_fields::Topology;

    #[test]
    fn sym_index_covers_upper_triangle() {
        for dim in [2, 3] {
            let mut seen = vec![false; sym_count(dim)];
            for i in 0..dim {
                for j in 0..dim {
                    assert_eq!(sym_index(dim, i, j), sym_index(dim, j, i));
                    seen[sym_index(dim, i, j)] = true;
                }
            }
            assert!(seen.iter().all(|&s| s));
            for (c, &(i, j)) in upper_pairs(dim).iter().enumerate() {
                assert_eq!(sym_index(dim, i, j), c);
            }
        }
    }

    #[test]
    fn tensor_component_layout() {
        let grid = GridSpec::torus(3, 8).unwrap();
        let t = TensorField::from_fn(grid, &[Slot::Upper, Slot::Lower, Slot::Lower], 0, |idx, p| {
            (idx[0] * 100 + idx[1] * 10 + idx[2]) as f64 + p as f64 * 1e-3
        });
        assert_eq!(t.component_count(), 27);
        assert_eq!(t.at(&[2, 1, 0], 5), 210.005);
        let c = t.component_offset(&[1, 2, 0]);
        assert_eq!(&t.multi_index(c)[..3], &[1, 2, 0]);
    }

    #[test]
    fn rejects_indefinite_metric_with_point() {
        let grid = GridSpec::torus(2, 8).unwrap();
        let g = SymTensorField::from_fn(grid, 0, |i, j, p| match (i, j, p) {
            (0, 0, 5) => -1.0,
            (a, b, _) if a == b => 1.0,
            _ => 0.0,
        });
        match MetricField::new(g) {
            Err(FieldError::NotPositiveDefinite { point, .. }) => assert_eq!(point, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn margin_masks_patch_boundary() {
        let grid = GridSpec::new(2, 10, 1.0, Topology::InteriorPatch).unwrap();
        let f = ScalarField::with_margin(grid, vec![1.0; 100], 2).unwrap();
        assert_eq!(f.at(0), 0.0);
        assert_eq!(f.at(grid.linear_index(&[2, 2])), 1.0);
        assert_eq!(f.at(grid.linear_index(&[8, 5])), 0.0);
    }
}
