use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;

use crate::{Grid2D, GridError};

/// Real field sampled on a [`Grid2D`], stored `x`-fastest.
#[derive(Clone, Debug)]
pub struct Field2D {
    grid: Arc<Grid2D>,
    values: Vec<f64>,
}

/// Real function of `x` alone sampled on the x-points of a [`Grid2D`].
#[derive(Clone, Debug)]
pub struct Field1D {
    grid: Arc<Grid2D>,
    values: Vec<f64>,
}

/// Fourier coefficients of a [`Field2D`].
#[derive(Clone, Debug)]
pub struct Spectrum2D {
    grid: Arc<Grid2D>,
    coeffs: Vec<Complex64>,
}

impl Field2D {
    pub fn zeros(grid: &Arc<Grid2D>) -> Self {
        Field2D { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn from_values(grid: &Arc<Grid2D>, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch { expected: grid.len(), found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index: i });
        }
        Ok(Field2D { grid: grid.clone(), values })
    }

    /// Samples `f(x, y)` at the grid points.
    pub fn from_fn(grid: &Arc<Grid2D>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for m in 0..grid.ny() {
            let y = grid.y(m);
            for j in 0..grid.nx() {
                values.push(f(grid.x(j), y));
            }
        }
        Field2D { grid: grid.clone(), values }
    }

    /// `profile(x) * g(y)`.
    pub fn separable(profile: &Field1D, g: impl Fn(f64) -> f64) -> Self {
        let grid = profile.grid.clone();
        let nx = grid.nx();
        let mut values = vec![0.0; grid.len()];
        for m in 0..grid.ny() {
            let gy = g(grid.y(m));
            for j in 0..nx {
                values[m * nx + j] = profile.values[j] * gy;
            }
        }
        Field2D { grid, values }
    }

    /// Extends an x-profile constantly in `y`.
    pub fn from_profile(profile: &Field1D) -> Self {
        Self::separable(profile, |_| 1.0)
    }

    pub fn grid(&self) -> &Arc<Grid2D> {
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

    pub fn same_grid(&self, other: &Field2D) -> bool {
        self.grid.same_as(&other.grid)
    }

    fn check(&self, other: &Field2D) {
        assert!(self.same_grid(other), "fields live on different grids");
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn spectrum(&self) -> Spectrum2D {
        Spectrum2D { grid: self.grid.clone(), coeffs: self.grid.forward(&self.values) }
    }

    /// `L²` inner product by the trapezoid rule; panics on a grid mismatch.
    pub fn dot(&self, other: &Field2D) -> f64 {
        self.check(other);
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        s * self.grid.cell()
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(&self, s: f64) -> Field2D {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Field2D) {
        self.check(other);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    /// Pointwise product.
    pub fn mul_pointwise(&self, other: &Field2D) -> Field2D {
        self.check(other);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Field2D { grid: self.grid.clone(), values }
    }

    /// Pointwise product with an x-profile.
    pub fn mul_profile(&self, profile: &Field1D) -> Field2D {
        assert!(self.grid.same_as(&profile.grid), "fields live on different grids");
        let nx = self.grid.nx();
        let mut out = self.clone();
        for (i, v) in out.values.iter_mut().enumerate() {
            *v *= profile.values[i % nx];
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field2D {
        Field2D { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Average over `y`, giving the transverse zero mode as an x-profile.
    pub fn y_mean(&self) -> Field1D {
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        let mut out = vec![0.0; nx];
        for m in 0..ny {
            for j in 0..nx {
                out[j] += self.values[m * nx + j];
            }
        }
        out.iter_mut().for_each(|v| *v /= ny as f64);
        Field1D { grid: self.grid.clone(), values: out }
    }

    pub fn ddx(&self) -> Field2D {
        self.spectrum().ddx().to_field()
    }
    pub fn ddy(&self) -> Field2D {
        self.spectrum().ddy().to_field()
    }
    pub fn laplacian(&self) -> Field2D {
        self.spectrum().laplacian().to_field()
    }
    /// Applies the 2/3-rule mask.
    pub fn dealiased(&self) -> Field2D {
        self.spectrum().dealiased().to_field()
    }
    /// `τ_q f (x, y) = f(x - q, y)` by a spectral phase shift.
    pub fn translate(&self, q: f64) -> Field2D {
        if q == 0.0 {
            return self.clone();
        }
        self.spectrum().translate(q).to_field()
    }
    /// `f(-x, y)`, exact on the grid.
    pub fn reflect_x(&self) -> Field2D {
        let nx = self.grid.nx();
        let mut out = self.clone();
        for m in 0..self.grid.ny() {
            for j in 0..nx {
                out.values[m * nx + j] = self.values[m * nx + (nx - j) % nx];
            }
        }
        out
    }
}

impl Spectrum2D {
    pub fn from_coeffs(grid: &Arc<Grid2D>, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.len());
        Spectrum2D { grid: grid.clone(), coeffs }
    }
    pub fn grid(&self) -> &Arc<Grid2D> {
        &self.grid
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }
    pub fn to_field(&self) -> Field2D {
        Field2D { grid: self.grid.clone(), values: self.grid.inverse(&self.coeffs) }
    }

    fn map_modes(&self, f: impl Fn(usize, usize) -> Complex64) -> Spectrum2D {
        let nx = self.grid.nx();
        let mut out = self.clone();
        for m in 0..self.grid.ny() {
            for j in 0..nx {
                out.coeffs[m * nx + j] *= f(j, m);
            }
        }
        out
    }

    pub fn ddx(&self) -> Spectrum2D {
        let g = self.grid.clone();
        self.map_modes(|j, _| Complex64::new(0.0, g.xi_d1(j)))
    }
    pub fn ddy(&self) -> Spectrum2D {
        let g = self.grid.clone();
        self.map_modes(|_, m| Complex64::new(0.0, g.eta_d1(m)))
    }
    pub fn laplacian(&self) -> Spectrum2D {
        let g = self.grid.clone();
        self.map_modes(|j, m| Complex64::new(-(g.xi(j).powi(2) + g.eta(m).powi(2)), 0.0))
    }
    pub fn dealiased(&self) -> Spectrum2D {
        let g = self.grid.clone();
        self.map_modes(|j, m| if g.dealias_mask(j, m) { Complex64::new(1.0, 0.0) } else { Complex64::default() })
    }
    pub fn translate(&self, q: f64) -> Spectrum2D {
        let g = self.grid.clone();
        self.map_modes(|j, _| g.shift_factor(j, q))
    }

    /// `Σ w(j, m) |c|²` scaled so that the constant weight 1 gives the `L²` norm squared.
    pub fn weighted_norm_sq(&self, w: impl Fn(usize, usize) -> f64) -> f64 {
        let nx = self.grid.nx();
        let mut s = 0.0;
        for m in 0..self.grid.ny() {
            for j in 0..nx {
                s += w(j, m) * self.coeffs[m * nx + j].norm_sqr();
            }
        }
        s * self.grid.cell() / self.grid.len() as f64
    }
}

impl Field1D {
    pub fn zeros(grid: &Arc<Grid2D>) -> Self {
        Field1D { grid: grid.clone(), values: vec![0.0; grid.nx()] }
    }
    pub fn from_values(grid: &Arc<Grid2D>, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.nx() {
            return Err(GridError::LengthMismatch { expected: grid.nx(), found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index: i });
        }
        Ok(Field1D { grid: grid.clone(), values })
    }
    pub fn from_fn(grid: &Arc<Grid2D>, f: impl Fn(f64) -> f64) -> Self {
        Field1D { grid: grid.clone(), values: (0..grid.nx()).map(|j| f(grid.x(j))).collect() }
    }
    pub fn grid(&self) -> &Arc<Grid2D> {
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
    fn check(&self, other: &Field1D) {
        assert!(self.grid.same_as(&other.grid), "fields live on different grids");
    }
    /// `L²(ℝ)` inner product over the x-interval.
    pub fn dot(&self, other: &Field1D) -> f64 {
        self.check(other);
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        s * self.grid.dx()
    }
    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }
    pub fn scaled(&self, s: f64) -> Field1D {
        let mut out = self.clone();
        out.scale(s);
        out
    }
    pub fn axpy(&mut self, s: f64, other: &Field1D) {
        self.check(other);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }
    pub fn mul_pointwise(&self, other: &Field1D) -> Field1D {
        self.check(other);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Field1D { grid: self.grid.clone(), values }
    }
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field1D {
        Field1D { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }
    fn spectral(&self, f: impl Fn(usize) -> Complex64) -> Field1D {
        let mut c = self.grid.forward_x(&self.values);
        for (j, z) in c.iter_mut().enumerate() {
            *z *= f(j);
        }
        Field1D { grid: self.grid.clone(), values: self.grid.inverse_x(&c) }
    }
    pub fn ddx(&self) -> Field1D {
        let g = self.grid.clone();
        self.spectral(|j| Complex64::new(0.0, g.xi_d1(j)))
    }
    pub fn d2x(&self) -> Field1D {
        let g = self.grid.clone();
        self.spectral(|j| Complex64::new(-g.xi(j).powi(2), 0.0))
    }
    pub fn translate(&self, q: f64) -> Field1D {
        if q == 0.0 {
            return self.clone();
        }
        let g = self.grid.clone();
        self.spectral(|j| g.shift_factor(j, q))
    }
    /// `f(-x)`, exact on the grid.
    pub fn reflect(&self) -> Field1D {
        let nx = self.grid.nx();
        Field1D { grid: self.grid.clone(), values: (0..nx).map(|j| self.values[(nx - j) % nx]).collect() }
    }
    /// `(1 + ξ²)`-weighted norm.
    pub fn norm_h1(&self) -> f64 {
        let c = self.grid.forward_x(&self.values);
        let s: f64 = c
            .iter()
            .enumerate()
            .map(|(j, z)| (1.0 + self.grid.xi_d1(j).powi(2)) * z.norm_sqr())
            .sum();
        (s * self.grid.dx() / self.grid.nx() as f64).sqrt()
    }
}

macro_rules! impl_arith {
    ($t:ty) => {
        impl Add for &$t {
            type Output = $t;
            fn add(self, rhs: &$t) -> $t {
                let mut out = self.clone();
                out.axpy(1.0, rhs);
                out
            }
        }
        impl Sub for &$t {
            type Output = $t;
            fn sub(self, rhs: &$t) -> $t {
                self.check(rhs);
                let mut out = self.clone();
                for (a, b) in out.values.iter_mut().zip(&rhs.values) {
                    *a -= b;
                }
                out
            }
        }
        impl Neg for &$t {
            type Output = $t;
            fn neg(self) -> $t {
                let mut out = self.clone();
                out.values.iter_mut().for_each(|v| *v = -*v);
                out
            }
        }
        impl Mul<f64> for &$t {
            type Output = $t;
            fn mul(self, s: f64) -> $t {
                self.scaled(s)
            }
        }
        impl Add<&$t> for $t {
            type Output = $t;
            fn add(mut self, rhs: &$t) -> $t {
                self.axpy(1.0, rhs);
                self
            }
        }
        impl Sub<&$t> for $t {
            type Output = $t;
            fn sub(mut self, rhs: &$t) -> $t {
                self.axpy(-1.0, rhs);
                self
            }
        }
        impl AddAssign<&$t> for $t {
            fn add_assign(&mut self, rhs: &$t) {
                self.axpy(1.0, rhs);
            }
        }
        impl SubAssign<&$t> for $t {
            fn sub_assign(&mut self, rhs: &$t) {
                self.axpy(-1.0, rhs);
            }
        }
    };
}

impl_arith!(Field2D);
impl_arith!(Field1D);
