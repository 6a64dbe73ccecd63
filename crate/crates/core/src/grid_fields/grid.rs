use serde::Serialize;

use super::FieldError;

/// Boundary treatment of a structured grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Torus: every axis wraps modulo `n`, coordinates in `[0, length)`.
    Periodic,
    /// Closed box `[-length/2, length/2]^dim` sampled at both ends; stencil
    /// outputs are only defined away from the boundary.
    InteriorPatch,
}

/// Accuracy order `p` of the central difference stencils.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Accuracy {
    Second,
    Fourth,
}

impl Accuracy {
    pub fn order(self) -> u32 {
        match self {
            Accuracy::Second => 2,
            Accuracy::Fourth => 4,
        }
    }

    /// Half-width of the central stencils of this order.
    pub fn radius(self) -> usize {
        match self {
            Accuracy::Second => 1,
            Accuracy::Fourth => 2,
        }
    }

    pub fn from_order(p: u32) -> Option<Self> {
        match p {
            2 => Some(Accuracy::Second),
            4 => Some(Accuracy::Fourth),
            _ => None,
        }
    }
}

/// Geometry of a uniform structured grid in two or three dimensions.
///
/// Points are stored with axis 0 varying fastest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    length: f64,
    topology: Topology,
    accuracy: Accuracy,
}

pub const MIN_POINTS_PER_AXIS: usize = 8;

impl GridSpec {
    /// Builds a grid with the default stencil order for its topology
    /// (fourth order on a torus, second order on a patch).
    pub fn new(dim: usize, n: usize, length: f64, topology: Topology) -> Result<Self, FieldError> {
        if dim != 2 && dim != 3 {
            return Err(FieldError::BadGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if n < MIN_POINTS_PER_AXIS {
            return Err(FieldError::BadGrid(format!(
                "n_per_axis must be at least {MIN_POINTS_PER_AXIS}, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(FieldError::BadGrid(format!("length must be positive, got {length}")));
        }
        let accuracy = match topology {
            Topology::Periodic => Accuracy::Fourth,
            Topology::InteriorPatch => Accuracy::Second,
        };
        Ok(GridSpec { dim, n, length, topology, accuracy })
    }

    /// `n^dim` torus of side `2π`.
    pub fn torus(dim: usize, n: usize) -> Result<Self, FieldError> {
        Self::new(dim, n, std::f64::consts::TAU, Topology::Periodic)
    }

    pub fn with_accuracy(mut self, accuracy: Accuracy) -> Self {
        self.accuracy = accuracy;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn accuracy(&self) -> Accuracy {
        self.accuracy
    }

    pub fn is_periodic(&self) -> bool {
        self.topology == Topology::Periodic
    }

    pub fn h(&self) -> f64 {
        match self.topology {
            Topology::Periodic => self.length / self.n as f64,
            Topology::InteriorPatch => self.length / (self.n - 1) as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume of one quadrature cell, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    /// Linear offset between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow(axis as u32)
    }

    pub fn multi_index(&self, p: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        let mut rem = p;
        for slot in idx.iter_mut().take(self.dim) {
            *slot = rem % self.n;
            rem /= self.n;
        }
        idx
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.dim).rev().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Coordinate of grid index `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        match self.topology {
            Topology::Periodic => i as f64 * self.h(),
            Topology::InteriorPatch => -0.5 * self.length + i as f64 * self.h(),
        }
    }

    /// Physical position of point `p`; unused trailing axes are zero.
    pub fn position(&self, p: usize) -> [f64; 3] {
        let idx = self.multi_index(p);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.coordinate(idx[a]);
        }
        x
    }

    /// Whether point `p` lies at least `margin` cells from the patch boundary.
    /// Always true on a torus.
    pub fn is_interior(&self, p: usize, margin: usize) -> bool {
        if self.is_periodic() || margin == 0 {
            return true;
        }
        let idx = self.multi_index(p);
        idx.iter()
            .take(self.dim)
            .all(|&i| i >= margin && i + margin < self.n)
    }

    /// Same grid with `n` halving the spacing: `2n` on a torus, `2n - 1` on a patch.
    pub fn refined(&self) -> Self {
        let n = match self.topology {
            Topology::Periodic => 2 * self.n,
            Topology::InteriorPatch => 2 * self.n - 1,
        };
        GridSpec { n, ..*self }
    }

    /// Cyclic shift of a point by `offset` cells along `axis` (torus only).
    pub fn shifted(&self, p: usize, axis: usize, offset: isize) -> usize {
        let mut idx = self.multi_index(p);
        let n = self.n as isize;
        idx[axis] = (((idx[axis] as isize + offset) % n + n) % n) as usize;
        self.linear_index(&idx[..self.dim])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_bad_grids() {
        assert!(GridSpec::new(2, 4, 1.0, Topology::Periodic).is_err());
        assert!(GridSpec::new(4, 16, 1.0, Topology::Periodic).is_err());
        assert!(GridSpec::new(2, 16, -1.0, Topology::Periodic).is_err());
        assert!(GridSpec::new(3, 8, 1.0, Topology::InteriorPatch).is_ok());
    }

    #[test]
    fn spacing_depends_on_topology() {
        let t = GridSpec::new(2, 64, 2.0, Topology::Periodic).unwrap();
        assert_eq!(t.h(), 2.0 / 64.0);
        let p = GridSpec::new(2, 129, 4.0, Topology::InteriorPatch).unwrap();
        assert_eq!(p.h(), 4.0 / 128.0);
        assert_eq!(p.coordinate(0), -2.0);
        assert_eq!(p.coordinate(128), 2.0);
        assert_eq!(p.refined().n(), 257);
        assert_eq!(p.refined().h(), p.h() / 2.0);
    }

    #[test]
    fn index_roundtrip() {
        let g = GridSpec::torus(3, 8).unwrap();
        for p in [0, 1, 9, 77, 511] {
            let idx = g.multi_index(p);
            assert_eq!(g.linear_index(&idx[..3]), p);
        }
        assert_eq!(g.shifted(0, 1, -1), g.linear_index(&[0, 7, 0]));
    }
}
