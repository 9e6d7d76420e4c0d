use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::GridError;

/// Periodic interval `[-X, X)` in `x` times the torus `[0, 2πL)` in `y`.
///
/// Arrays over the grid are stored with `x` varying fastest: the value at
/// `(x_j, y_m)` lives at index `m * nx + j`. Spectral arrays use the same
/// layout with the standard FFT ordering of wavenumbers in each direction.
pub struct Grid2D {
    x_half_width: f64,
    nx: usize,
    torus_scale: f64,
    ny: usize,
    xi: Vec<f64>,
    eta: Vec<f64>,
    keep_x: Vec<bool>,
    keep_y: Vec<bool>,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("x_half_width", &self.x_half_width)
            .field("nx", &self.nx)
            .field("torus_scale", &self.torus_scale)
            .field("ny", &self.ny)
            .finish()
    }
}

fn signed_index(j: usize, n: usize) -> i64 {
    if j <= n / 2 - 1 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

impl Grid2D {
    /// Builds a grid. Both counts must be powers of two and at least 8.
    pub fn new(
        x_half_width: f64,
        nx: usize,
        torus_scale: f64,
        ny: usize,
    ) -> Result<Arc<Grid2D>, GridError> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 8 || !n.is_power_of_two() {
                return Err(GridError::BadCount { name, value: n });
            }
        }
        if !(x_half_width.is_finite() && x_half_width > 0.0) {
            return Err(GridError::BadLength { name: "x_half_width", value: x_half_width });
        }
        if !(torus_scale.is_finite() && torus_scale > 0.0) {
            return Err(GridError::BadLength { name: "torus_scale", value: torus_scale });
        }
        let kx = PI / x_half_width;
        let xi = (0..nx).map(|j| signed_index(j, nx) as f64 * kx).collect();
        let eta = (0..ny).map(|m| signed_index(m, ny) as f64 / torus_scale).collect();
        let cut_x = ((nx - 1) / 3) as i64;
        let cut_y = ((ny - 1) / 3) as i64;
        let keep_x = (0..nx).map(|j| signed_index(j, nx).abs() <= cut_x).collect();
        let keep_y = (0..ny).map(|m| signed_index(m, ny).abs() <= cut_y).collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Grid2D {
            x_half_width,
            nx,
            torus_scale,
            ny,
            xi,
            eta,
            keep_x,
            keep_y,
            fft_x: planner.plan_fft_forward(nx),
            ifft_x: planner.plan_fft_inverse(nx),
            fft_y: planner.plan_fft_forward(ny),
            ifft_y: planner.plan_fft_inverse(ny),
        }))
    }

    pub fn x_half_width(&self) -> f64 {
        self.x_half_width
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn torus_scale(&self) -> f64 {
        self.torus_scale
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dx(&self) -> f64 {
        2.0 * self.x_half_width / self.nx as f64
    }
    pub fn dy(&self) -> f64 {
        2.0 * PI * self.torus_scale / self.ny as f64
    }
    /// Quadrature weight of one grid cell.
    pub fn cell(&self) -> f64 {
        self.dx() * self.dy()
    }
    /// Length of the torus, `2πL`.
    pub fn torus_length(&self) -> f64 {
        2.0 * PI * self.torus_scale
    }
    pub fn area(&self) -> f64 {
        2.0 * self.x_half_width * self.torus_length()
    }
    pub fn x(&self, j: usize) -> f64 {
        -self.x_half_width + j as f64 * self.dx()
    }
    pub fn y(&self, m: usize) -> f64 {
        m as f64 * self.dy()
    }
    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }
    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|m| self.y(m)).collect()
    }
    /// Signed x-wavenumber of FFT bin `j`; the Nyquist bin carries `-π nx / (2X)`.
    pub fn xi(&self, j: usize) -> f64 {
        self.xi[j]
    }
    /// Transverse wavenumber `n / L` of FFT bin `m`.
    pub fn eta(&self, m: usize) -> f64 {
        self.eta[m]
    }
    /// Integer transverse mode number of bin `m`.
    pub fn mode_y(&self, m: usize) -> i64 {
        signed_index(m, self.ny)
    }
    /// Wavenumber used for first derivatives: the Nyquist bin is zeroed so
    /// that derivatives of real fields stay real.
    pub fn xi_d1(&self, j: usize) -> f64 {
        if j == self.nx / 2 {
            0.0
        } else {
            self.xi[j]
        }
    }
    pub fn eta_d1(&self, m: usize) -> f64 {
        if m == self.ny / 2 {
            0.0
        } else {
            self.eta[m]
        }
    }
    pub fn is_nyquist_x(&self, j: usize) -> bool {
        j == self.nx / 2
    }
    /// 2/3-rule mask: true for retained modes.
    pub fn dealias_mask(&self, j: usize, m: usize) -> bool {
        self.keep_x[j] && self.keep_y[m]
    }
    pub fn keep_x(&self, j: usize) -> bool {
        self.keep_x[j]
    }
    pub fn keep_y(&self, m: usize) -> bool {
        self.keep_y[m]
    }
    /// Largest transverse mode number kept by the dealiasing mask.
    pub fn max_resolved_mode_y(&self) -> usize {
        (self.ny - 1) / 3
    }

    /// Two grids are compatible when they sample the same domain identically.
    pub fn same_as(&self, other: &Grid2D) -> bool {
        std::ptr::eq(self, other)
            || (self.nx == other.nx
                && self.ny == other.ny
                && self.x_half_width == other.x_half_width
                && self.torus_scale == other.torus_scale)
    }

    /// Forward 2D transform (unnormalized).
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.len());
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, true);
        buf
    }

    /// Inverse 2D transform including the `1/(nx ny)` factor; returns the real part.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.len());
        let mut buf = coeffs.to_vec();
        self.transform(&mut buf, false);
        let scale = 1.0 / self.len() as f64;
        buf.iter().map(|z| z.re * scale).collect()
    }

    /// Inverse transform into an existing buffer.
    pub fn inverse_into(&self, coeffs: &[Complex64], work: &mut Vec<Complex64>, out: &mut [f64]) {
        work.clear();
        work.extend_from_slice(coeffs);
        self.transform(work, false);
        let scale = 1.0 / self.len() as f64;
        for (o, z) in out.iter_mut().zip(work.iter()) {
            *o = z.re * scale;
        }
    }

    /// Forward transform into an existing buffer.
    pub fn forward_into(&self, values: &[f64], out: &mut Vec<Complex64>) {
        out.clear();
        out.extend(values.iter().map(|&v| Complex64::new(v, 0.0)));
        self.transform(out, true);
    }

    fn transform(&self, buf: &mut [Complex64], forward: bool) {
        let (fx, fy) = if forward {
            (&self.fft_x, &self.fft_y)
        } else {
            (&self.ifft_x, &self.ifft_y)
        };
        let nx = self.nx;
        let ny = self.ny;
        let mut scratch =
            vec![Complex64::default(); fx.get_inplace_scratch_len().max(fy.get_inplace_scratch_len())];
        fx.process_with_scratch(buf, &mut scratch);
        let mut col = vec![Complex64::default(); ny];
        for j in 0..nx {
            for m in 0..ny {
                col[m] = buf[m * nx + j];
            }
            fy.process_with_scratch(&mut col, &mut scratch);
            for m in 0..ny {
                buf[m * nx + j] = col[m];
            }
        }
    }

    /// Forward 1D transform in x (unnormalized).
    pub fn forward_x(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.nx);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft_x.process(&mut buf);
        buf
    }

    /// Inverse 1D transform in x including the `1/nx` factor.
    pub fn inverse_x(&self, coeffs: &[Complex64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.nx);
        let mut buf = coeffs.to_vec();
        self.ifft_x.process(&mut buf);
        let scale = 1.0 / self.nx as f64;
        buf.iter().map(|z| z.re * scale).collect()
    }

    /// Phase factor of the translation `f(x) -> f(x - q)` for x-bin `j`.
    ///
    /// The Nyquist bin gets the real factor `cos(ξ_N q)` so real fields stay real.
    pub fn shift_factor(&self, j: usize, q: f64) -> Complex64 {
        let k = self.xi[j];
        if self.is_nyquist_x(j) {
            Complex64::new((k * q).cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, -k * q)
        }
    }
}
