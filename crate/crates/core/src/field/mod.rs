//! Real scalar fields on a periodic lattice `[-L/2, L/2)^n`.
//!
//! All integrals are plain lattice sums times the cell volume `h^n`, which is
//! the trapezoid rule and exact for band-limited periodic data. Reductions run
//! sequentially in storage order so repeated evaluations are bit-identical.

mod io;
pub(crate) mod spectral;

pub use io::{read_binary, read_binary_from, write_binary, write_binary_to, write_csv_1d};

use crate::error::{Error, Result};
use spectral::Spectral;

/// Uniform periodic lattice with the same period and resolution on every axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    length: f64,
    points: usize,
}

impl Grid {
    pub fn new(dim: usize, length: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("period {length} must be positive")));
        }
        if points == 0 || points % 2 != 0 {
            return Err(Error::InvalidGrid(format!("{points} points per axis; need a positive even count")));
        }
        Ok(Self { dim, length, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Period `L` of each axis.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Points `N` per axis.
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    /// `h^n`, the quadrature weight of every lattice point.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of lattice index `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.spacing()
    }

    /// Angular wavenumber of FFT bin `j`: the symmetric integer set scaled by `2 pi / L`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let n = self.points as isize;
        let j = j as isize;
        let m = if j < n / 2 { j } else { j - n };
        2.0 * std::f64::consts::PI / self.length * m as f64
    }

    /// Per-axis indices of a flat (row-major, last axis fastest) index.
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let n = self.points;
        let mut idx = [0; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rem % n;
            rem /= n;
        }
        idx
    }

    /// Physical coordinates of a flat index (unused axes are zero).
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    pub(crate) fn spectral(&self) -> std::sync::Arc<Spectral> {
        Spectral::for_grid(self)
    }
}

/// A real scalar sampled on every lattice point of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x)` where `x` holds the coordinates (only the first `n` are meaningful).
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.position(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&x| f(x)).collect() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|x| c * x)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Field) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, &x| if x.abs() > m || x.is_nan() { x.abs() } else { m })
    }

    /// `int u dx`.
    pub fn integrate(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    /// `int g(u) dx` for a pointwise function `g`.
    pub fn integrate_map(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|&x| g(x)).sum::<f64>()
    }

    /// `||u||_2^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.integrate_map(|x| x * x)
    }

    /// `int u v dx`.
    pub fn inner_product(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(self.grid.cell_volume() * s)
    }

    /// `||grad u||_2^2`, evaluated as `sum_k |k|^2 |u_k|^2` (Parseval). This is
    /// `-<u, Lap u>` for the spectral Laplacian and keeps the Nyquist bin, so it
    /// is exactly the quadratic form conserved by the linear propagator.
    pub fn grad_norm_sq(&self) -> f64 {
        self.grid.spectral().gradient_energy(&self.values)
    }

    /// Spectral partial derivative along `axis` (Nyquist bin zeroed).
    pub fn partial_derivative(&self, axis: usize) -> Result<Self> {
        if axis >= self.grid.dim {
            return Err(Error::InvalidGrid(format!("axis {axis} out of range")));
        }
        let values = self.grid.spectral().derivative(&self.values, axis);
        Ok(Self { grid: self.grid, values })
    }

    /// Spectral Laplacian.
    pub fn laplacian(&self) -> Self {
        let values = self.grid.spectral().laplacian(&self.values);
        Self { grid: self.grid, values }
    }

    /// Fraction of `||u||^2` carried by points within `margin_fraction * L` of
    /// the torus boundary along any axis.
    pub fn boundary_tail_mass(&self, margin_fraction: f64) -> Result<f64> {
        if !(margin_fraction > 0.0 && margin_fraction < 0.5) {
            return Err(Error::Precondition(format!(
                "margin fraction {margin_fraction} not in (0, 0.5)"
            )));
        }
        let total = self.l2_norm_sq();
        if total == 0.0 {
            return Ok(0.0);
        }
        let margin = margin_fraction * self.grid.length * (1.0 - 1e-12);
        let near_edge: Vec<bool> = (0..self.grid.points)
            .map(|i| 0.5 * self.grid.length - self.grid.coordinate(i).abs() < margin)
            .collect();
        let mut edge = 0.0;
        for (flat, &x) in self.values.iter().enumerate() {
            let idx = self.grid.unravel(flat);
            if (0..self.grid.dim).any(|a| near_edge[idx[a]]) {
                edge += x * x;
            }
        }
        Ok(edge * self.grid.cell_volume() / total)
    }
}

/// The instantaneous PDE state `(u, u_t, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Field,
    pub t: f64,
}

impl State {
    pub fn new(u: Field, v: Field, t: f64) -> Result<Self> {
        u.check_same_grid(&v)?;
        Ok(Self { u, v, t })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { u: Field::zeros(grid), v: Field::zeros(grid), t: 0.0 }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn line(n: usize) -> Grid {
        Grid::new(1, 2.0 * PI, n).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(0, 1.0, 8).is_err());
        assert!(Grid::new(4, 1.0, 8).is_err());
        assert!(Grid::new(1, -1.0, 8).is_err());
        assert!(Grid::new(1, 1.0, 7).is_err());
        let g = Grid::new(2, 4.0, 8).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.coordinate(4), 0.0);
        assert_eq!(g.wavenumber(3), 3.0 * PI / 2.0);
        assert_eq!(g.wavenumber(5), -3.0 * PI / 2.0);
        assert_eq!(g.unravel(13), [1, 5, 0]);
    }

    #[test]
    fn l2_examples() {
        let g = line(64);
        assert!(rel(Field::constant(g, 1.0).l2_norm_sq(), 2.0 * PI) < 1e-14);
        let s = Field::from_fn(g, |x| x[0].sin());
        assert!(rel(s.l2_norm_sq(), PI) < 1e-14);
        assert_eq!(Field::zeros(g).l2_norm_sq(), 0.0);
    }

    #[test]
    fn grad_examples() {
        let g = line(64);
        let s = Field::from_fn(g, |x| x[0].sin());
        assert!(rel(s.grad_norm_sq(), PI) < 1e-12);
        assert!(Field::constant(g, 3.0).grad_norm_sq().abs() < 1e-20);

        let g2 = Grid::new(2, 2.0 * PI, 32).unwrap();
        let f = Field::from_fn(g2, |x| x[0].sin() + x[1].sin());
        // int cos^2 x + cos^2 y over [0, 2pi)^2 = 2 * (pi * 2pi)
        assert!(rel(f.grad_norm_sq(), 4.0 * PI * PI) < 1e-12);
    }

    #[test]
    fn inner_product_examples() {
        let g = line(64);
        let s = Field::from_fn(g, |x| x[0].sin());
        let c = Field::from_fn(g, |x| x[0].cos());
        assert!(rel(s.inner_product(&s).unwrap(), PI) < 1e-14);
        assert!(s.inner_product(&c).unwrap().abs() < 1e-14);
        assert!(rel(s.inner_product(&s.scaled(2.0)).unwrap(), 2.0 * PI) < 1e-14);
        let other = Field::zeros(line(32));
        assert!(matches!(s.inner_product(&other), Err(Error::GridMismatch)));
    }

    #[test]
    fn integrate_examples() {
        let g2 = Grid::new(2, 2.0 * PI, 16).unwrap();
        assert!(rel(Field::constant(g2, 1.0).integrate(), 4.0 * PI * PI) < 1e-14);
        let g = line(64);
        let s = Field::from_fn(g, |x| x[0].sin());
        assert!(s.integrate().abs() < 1e-14);
        // sin^4 is a trigonometric polynomial of degree 4; 64 points integrate it exactly.
        assert!(rel(s.map(|x| x.powi(4)).integrate(), 3.0 * PI / 4.0) < 1e-14);
    }

    #[test]
    fn tail_mass_examples() {
        let g = Grid::new(1, 200.0, 2048).unwrap();
        let bump = Field::from_fn(g, |x| if x[0].abs() < 5.0 { (1.0 - (x[0] / 5.0).powi(2)).powi(4) } else { 0.0 });
        assert!(bump.boundary_tail_mass(0.1).unwrap() < 1e-12);
        assert_eq!(Field::zeros(g).boundary_tail_mass(0.1).unwrap(), 0.0);

        // Uniform mass: the lattice count approaches 1 - (1 - 2m)^n at rate 1/N.
        for (dim, n) in [(1, 1000), (2, 1000), (3, 100)] {
            let g = Grid::new(dim, 1.0, n).unwrap();
            let m = Field::constant(g, 1.0).boundary_tail_mass(0.1).unwrap();
            let expected = 1.0 - 0.8_f64.powi(dim as i32);
            assert!((m - expected).abs() < 3.0 / n as f64, "dim {dim}: {m} vs {expected}");
        }
        assert!(Field::zeros(g).boundary_tail_mass(0.5).is_err());
    }

    #[test]
    fn derivative_of_resolvable_modes() {
        let n = 32;
        let g = line(n);
        for k in 1..(n / 2) {
            let kf = k as f64;
            let f = Field::from_fn(g, |x| (kf * x[0]).sin());
            let d = f.partial_derivative(0).unwrap();
            let exact = Field::from_fn(g, |x| kf * (kf * x[0]).cos());
            let err = d.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "k = {k}: {err}");
        }
    }

    #[test]
    fn laplacian_of_product_mode() {
        let g = Grid::new(3, 2.0 * PI, 16).unwrap();
        let f = Field::from_fn(g, |x| x[0].sin() * (2.0 * x[1]).cos() * (3.0 * x[2]).sin());
        let lap = f.laplacian();
        let expected = f.scaled(-14.0);
        let err = lap.values().iter().zip(expected.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-11);
    }
}
