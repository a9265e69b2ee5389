//! Uniform periodic staggered grid, field containers and the discrete
//! vector-calculus operators shared by every other module.
//!
//! Storage is 0-based and node-major: node `(i, j)` lives at flat index
//! `i * ny + j`. Edge fields use the same indexing, with `x[(i, j)]` holding
//! the value at the half point `(i + 1/2, j)` and `y[(i, j)]` the value at
//! `(i, j + 1/2)`.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Reduce a (possibly negative) index into `0..n` periodically.
#[inline]
pub fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// Geometry of a uniform periodic rectangular grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    /// Lower-left corner of the domain.
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl GridSpec {
    /// Grid on `[0, lx] x [0, ly]`.
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::with_origin(nx, ny, lx, ly, 0.0, 0.0)
    }

    pub fn with_origin(nx: usize, ny: usize, lx: f64, ly: f64, x0: f64, y0: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes per direction, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "domain lengths must be positive and finite, got {lx}x{ly}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            x0,
            y0,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
        })
    }

    /// Square grid of spacing `h` covering `[-l/2, l/2]^2`.
    pub fn centered_square(l: f64, h: f64) -> Result<Self> {
        let n = (l / h).round();
        if (n * h - l).abs() > 1e-9 * l {
            return Err(Error::InvalidGrid(format!(
                "spacing {h} does not divide length {l}"
            )));
        }
        Self::with_origin(n as usize, n as usize, l, l, -0.5 * l, -0.5 * l)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        i * self.ny + j
    }

    #[inline]
    pub fn ip(&self, i: usize) -> usize {
        if i + 1 == self.nx {
            0
        } else {
            i + 1
        }
    }

    #[inline]
    pub fn im(&self, i: usize) -> usize {
        if i == 0 {
            self.nx - 1
        } else {
            i - 1
        }
    }

    #[inline]
    pub fn jp(&self, j: usize) -> usize {
        if j + 1 == self.ny {
            0
        } else {
            j + 1
        }
    }

    #[inline]
    pub fn jm(&self, j: usize) -> usize {
        if j == 0 {
            self.ny - 1
        } else {
            j - 1
        }
    }

    // Coordinates are formed around the domain center so that a grid
    // centered at the origin is exactly mirror symmetric.

    /// x coordinate of `2 * i` half-steps, i.e. of node `i` when `twice_i`
    /// is even and of half point `i/2` when it is odd.
    #[inline]
    fn coord(center: f64, len: f64, n: usize, twice_i: usize) -> f64 {
        center + len * (twice_i as f64 - n as f64) / (2 * n) as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        Self::coord(self.x0 + 0.5 * self.lx, self.lx, self.nx, 2 * i)
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        Self::coord(self.y0 + 0.5 * self.ly, self.ly, self.ny, 2 * j)
    }

    /// x coordinate of the half point `i + 1/2`.
    #[inline]
    pub fn x_half(&self, i: usize) -> f64 {
        Self::coord(self.x0 + 0.5 * self.lx, self.lx, self.nx, 2 * i + 1)
    }

    #[inline]
    pub fn y_half(&self, j: usize) -> f64 {
        Self::coord(self.y0 + 0.5 * self.ly, self.ly, self.ny, 2 * j + 1)
    }
}

/// Scalar samples at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl NodeField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_vec(grid: GridSpec, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "node field length mismatch");
        Self { grid, values }
    }

    /// Sample `f(x, y)` at every node.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_index_fn(grid, |i, j| f(grid.x(i), grid.y(j)))
    }

    pub fn from_index_fn(grid: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                values.push(f(i, j));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &NodeField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &NodeField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Periodic shift: the result at `(i, j)` is `self` at `(i - di, j - dj)`.
    pub fn shifted(&self, di: isize, dj: isize) -> Self {
        let g = self.grid;
        Self::from_index_fn(g, |i, j| {
            self[(wrap(i as isize - di, g.nx), wrap(j as isize - dj, g.ny))]
        })
    }
}

impl Index<(usize, usize)> for NodeField {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[self.grid.idx(i, j)]
    }
}

impl IndexMut<(usize, usize)> for NodeField {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        let k = self.grid.idx(i, j);
        &mut self.values[k]
    }
}

/// Staggered vector field: x components at `(i + 1/2, j)`, y components at
/// `(i, j + 1/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeField {
    grid: GridSpec,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl EdgeField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0, 0.0)
    }

    pub fn constant(grid: GridSpec, vx: f64, vy: f64) -> Self {
        Self {
            grid,
            x: vec![vx; grid.len()],
            y: vec![vy; grid.len()],
        }
    }

    pub fn from_vecs(grid: GridSpec, x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), grid.len(), "edge field x length mismatch");
        assert_eq!(y.len(), grid.len(), "edge field y length mismatch");
        Self { grid, x, y }
    }

    /// Sample `fx` at the x half points and `fy` at the y half points.
    pub fn from_fns(
        grid: GridSpec,
        fx: impl Fn(f64, f64) -> f64,
        fy: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut x = Vec::with_capacity(grid.len());
        let mut y = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                x.push(fx(grid.x_half(i), grid.y(j)));
                y.push(fy(grid.x(i), grid.y_half(j)));
            }
        }
        Self { grid, x, y }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Value at `(i + 1/2, j)`.
    #[inline]
    pub fn xe(&self, i: usize, j: usize) -> f64 {
        self.x[self.grid.idx(i, j)]
    }

    /// Value at `(i, j + 1/2)`.
    #[inline]
    pub fn ye(&self, i: usize, j: usize) -> f64 {
        self.y[self.grid.idx(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            x: self.x.iter().map(|&v| f(v)).collect(),
            y: self.y.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &EdgeField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            x: self
                .x
                .iter()
                .zip(&other.x)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            y: self
                .y
                .iter()
                .zip(&other.y)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &EdgeField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a += alpha * b;
        }
        for (a, b) in self.y.iter_mut().zip(&other.y) {
            *a += alpha * b;
        }
    }

    /// Componentwise quotient, e.g. `D / eps`.
    pub fn div_by(&self, other: &EdgeField) -> Self {
        self.zip_map(other, |a, b| a / b)
    }

    pub fn max_abs(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.y)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.y)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.y)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }
}

/// Periodic divergence of an edge field at the nodes.
pub fn node_divergence(f: &EdgeField) -> NodeField {
    let g = *f.grid();
    NodeField::from_index_fn(g, |i, j| {
        (f.xe(i, j) - f.xe(g.im(i), j)) / g.dx + (f.ye(i, j) - f.ye(i, g.jm(j))) / g.dy
    })
}

/// Forward-difference gradient of a node field, placed on the edges.
pub fn node_gradient(phi: &NodeField) -> EdgeField {
    let g = *phi.grid();
    let mut x = Vec::with_capacity(g.len());
    let mut y = Vec::with_capacity(g.len());
    for i in 0..g.nx {
        for j in 0..g.ny {
            x.push((phi[(g.ip(i), j)] - phi[(i, j)]) / g.dx);
            y.push((phi[(i, g.jp(j))] - phi[(i, j)]) / g.dy);
        }
    }
    EdgeField::from_vecs(g, x, y)
}

/// Discrete circulation around every cell. Entry `(i, j)` belongs to the
/// cell whose lower-left node is `(i, j)`; a discrete gradient has zero
/// circulation in every cell.
pub fn cell_circulation(f: &EdgeField) -> NodeField {
    let g = *f.grid();
    NodeField::from_index_fn(g, |i, j| {
        let (ip, jp) = (g.ip(i), g.jp(j));
        (f.xe(i, j) - f.xe(i, jp)) * g.dx + (f.ye(ip, j) - f.ye(i, j)) * g.dy
    })
}

/// Edge field produced by circulating `psi(i, j)` around each cell, the
/// cell again named by its lower-left node. Its node divergence vanishes.
pub fn stream_curl(psi: &NodeField) -> EdgeField {
    let g = *psi.grid();
    let mut x = Vec::with_capacity(g.len());
    let mut y = Vec::with_capacity(g.len());
    for i in 0..g.nx {
        for j in 0..g.ny {
            x.push((psi[(i, j)] - psi[(i, g.jm(j))]) / g.dy);
            y.push((psi[(g.im(i), j)] - psi[(i, j)]) / g.dx);
        }
    }
    EdgeField::from_vecs(g, x, y)
}
