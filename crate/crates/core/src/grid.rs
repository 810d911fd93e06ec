//! Uniform periodic grids and real scalar fields on them.
//!
//! The domain is a periodic box in one or two dimensions. Internally every
//! grid is stored with a two-axis layout; a 1-D grid simply has a single
//! point along the second axis with unit length, so measure factors and
//! wavenumber sums work out without special cases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid. Axis 0 is contiguous in memory (row-major).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Spatial dimension, 1 or 2.
    pub n: usize,
    /// Points per axis; `points[1] == 1` when `n == 1`.
    pub points: [usize; 2],
    /// Box length per axis; `length[1] == 1.0` when `n == 1`.
    pub length: [f64; 2],
    /// Lower-left corner of the box.
    pub origin: [f64; 2],
}

impl GridSpec {
    /// 1-D periodic grid on `[origin, origin + length)`.
    pub fn line(points: usize, length: f64, origin: f64) -> Result<Self> {
        let g = GridSpec {
            n: 1,
            points: [points, 1],
            length: [length, 1.0],
            origin: [origin, 0.0],
        };
        g.validate()?;
        Ok(g)
    }

    /// 1-D grid on the centered box (-pi, pi).
    pub fn line_centered(points: usize) -> Result<Self> {
        Self::line(points, std::f64::consts::TAU, -std::f64::consts::PI)
    }

    /// 2-D periodic grid.
    pub fn square(points: [usize; 2], length: [f64; 2], origin: [f64; 2]) -> Result<Self> {
        let g = GridSpec {
            n: 2,
            points,
            length,
            origin,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        if self.n != 1 && self.n != 2 {
            return Err(Error::InvalidConfig(format!("dimension must be 1 or 2, got {}", self.n)));
        }
        for a in 0..self.n {
            if self.points[a] < 8 {
                return Err(Error::InvalidConfig(format!(
                    "axis {a}: need at least 8 points, got {}",
                    self.points[a]
                )));
            }
            if !(self.length[a] > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "axis {a}: box length must be positive, got {}",
                    self.length[a]
                )));
            }
        }
        if self.n == 1 && (self.points[1] != 1 || self.length[1] != 1.0) {
            return Err(Error::InvalidConfig("1-D grid must have a trivial second axis".into()));
        }
        Ok(())
    }

    pub fn total_points(&self) -> usize {
        self.points[0] * self.points[1]
    }

    pub fn dx(&self, axis: usize) -> f64 {
        self.length[axis] / self.points[axis] as f64
    }

    /// Smallest grid spacing over the active axes.
    pub fn min_dx(&self) -> f64 {
        (0..self.n).map(|a| self.dx(a)).fold(f64::INFINITY, f64::min)
    }

    /// Volume of the box (length for 1-D).
    pub fn volume(&self) -> f64 {
        self.length[0] * self.length[1]
    }

    /// Measure of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.total_points() as f64
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.dx(axis)
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.points[0] + ix
    }

    /// Coordinates of the flat index `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let nx = self.points[0];
        let (ix, iy) = (idx % nx, idx / nx);
        [self.coord(0, ix), self.coord(1, iy)]
    }

    /// Index of the grid point nearest to `x` along `axis` (periodic wrap).
    pub fn nearest_index(&self, axis: usize, x: f64) -> usize {
        let np = self.points[axis] as f64;
        let rel = (x - self.origin[axis]) / self.dx(axis);
        let wrapped = rel.rem_euclid(np);
        (wrapped.round() as usize) % self.points[axis]
    }
}

/// Real scalar field sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid: GridSpec,
    pub data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &GridSpec) -> Self {
        Field {
            grid: *grid,
            data: vec![0.0; grid.total_points()],
        }
    }

    pub fn constant(grid: &GridSpec, c: f64) -> Self {
        Field {
            grid: *grid,
            data: vec![c; grid.total_points()],
        }
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn([f64; 2]) -> f64) -> Self {
        let data = (0..grid.total_points()).map(|i| f(grid.point(i))).collect();
        Field { grid: *grid, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        Field {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// self += a * other
    pub fn axpy(&mut self, a: f64, other: &Field) {
        debug_assert_eq!(self.grid, other.grid);
        for (s, &o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    pub fn scale_in_place(&mut self, a: f64) {
        for s in &mut self.data {
            *s *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.data.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Discrete L2 norm: sqrt(sum f^2 * cell_volume). Equals the continuum
    /// box norm exactly for band-limited fields.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.data.iter().map(|&v| v * v).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// Volume-weighted inner product: sum f g * cell_volume.
    pub fn inner(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let s: f64 = self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum();
        s * self.grid.cell_volume()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

macro_rules! field_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl std::ops::$trait<&Field> for &Field {
            type Output = Field;
            fn $method(self, rhs: &Field) -> Field {
                self.zip_map(rhs, |a, b| a $op b)
            }
        }
    };
}

field_binop!(Add, add, +);
field_binop!(Sub, sub, -);
field_binop!(Mul, mul, *);
field_binop!(Div, div, /);

impl std::ops::Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scaled(rhs)
    }
}

impl std::ops::Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scaled(-1.0)
    }
}
