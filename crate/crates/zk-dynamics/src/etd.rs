use std::f64::consts::PI;
use std::sync::Arc;

use zk_grid::{Complex64, Field2D, Grid2D};

use crate::DynError;

/// Number of contour points for the φ-function coefficients.
const CONTOUR_POINTS: usize = 32;

/// Fourth-order exponential time differencing for `û' = L̂û + N(û)` with a
/// diagonal linear part; coefficients by contour averaging.
#[derive(Clone, Debug)]
pub struct Etdrk4 {
    h: f64,
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl Etdrk4 {
    pub fn new(symbol: &[Complex64], h: f64) -> Self {
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|m| Complex64::from_polar(1.0, 2.0 * PI * (m as f64 + 0.5) / CONTOUR_POINTS as f64))
            .collect();
        let n = symbol.len();
        let (mut e, mut e2) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let (mut q, mut f1, mut f2, mut f3) =
            (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let inv = 1.0 / CONTOUR_POINTS as f64;
        for &l in symbol {
            let z = l * h;
            e.push(z.exp());
            e2.push((z * 0.5).exp());
            let (mut sq, mut s1, mut s2, mut s3) =
                (Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default());
            for r in &roots {
                let lr = z + r;
                let ex = lr.exp();
                let lr3 = lr * lr * lr;
                sq += ((lr * 0.5).exp() - 1.0) / lr;
                s1 += (-4.0 - lr + ex * (4.0 - 3.0 * lr + lr * lr)) / lr3;
                s2 += (2.0 + lr + ex * (lr - 2.0)) / lr3;
                s3 += (-4.0 - 3.0 * lr - lr * lr + ex * (4.0 - lr)) / lr3;
            }
            q.push(sq * (h * inv));
            f1.push(s1 * (h * inv));
            f2.push(s2 * (h * inv));
            f3.push(s3 * (h * inv));
        }
        Etdrk4 { h, e, e2, q, f1, f2, f3 }
    }

    pub fn dt(&self) -> f64 {
        self.h
    }

    pub fn step<F>(&self, u: &[Complex64], mut nonlin: F) -> Result<Vec<Complex64>, DynError>
    where
        F: FnMut(&[Complex64]) -> Result<Vec<Complex64>, DynError>,
    {
        let n = u.len();
        let nu = nonlin(u)?;
        let a: Vec<Complex64> = (0..n).map(|i| self.e2[i] * u[i] + self.q[i] * nu[i]).collect();
        let na = nonlin(&a)?;
        let b: Vec<Complex64> = (0..n).map(|i| self.e2[i] * u[i] + self.q[i] * na[i]).collect();
        let nb = nonlin(&b)?;
        let c: Vec<Complex64> = (0..n).map(|i| self.e2[i] * a[i] + self.q[i] * (2.0 * nb[i] - nu[i])).collect();
        let nc = nonlin(&c)?;
        Ok((0..n)
            .map(|i| self.e[i] * u[i] + self.f1[i] * nu[i] + 2.0 * self.f2[i] * (na[i] + nb[i]) + self.f3[i] * nc[i])
            .collect())
    }
}

/// ETDRK4 stepper for `u_t + ∂ₓ(Δu + u²) = 0` with 2/3-rule dealiasing.
#[derive(Clone, Debug)]
pub struct FullFlow {
    grid: Arc<Grid2D>,
    scheme: Etdrk4,
    dx_mask: Vec<Complex64>,
    /// Largest admissible `‖u‖_∞`.
    pub cap: f64,
}

impl FullFlow {
    pub fn new(grid: &Arc<Grid2D>, dt: f64) -> Self {
        let nx = grid.nx();
        let mut symbol = Vec::with_capacity(grid.len());
        let mut dx_mask = Vec::with_capacity(grid.len());
        for m in 0..grid.ny() {
            for j in 0..nx {
                let ik = Complex64::new(0.0, grid.xi_d1(j));
                symbol.push(ik * (grid.xi(j).powi(2) + grid.eta(m).powi(2)));
                let keep = if grid.dealias_mask(j, m) { 1.0 } else { 0.0 };
                dx_mask.push(-ik * keep);
            }
        }
        FullFlow { grid: grid.clone(), scheme: Etdrk4::new(&symbol, dt), dx_mask, cap: 1e3 }
    }

    pub fn dt(&self) -> f64 {
        self.scheme.dt()
    }

    fn nonlinear(&self, uh: &[Complex64]) -> Result<Vec<Complex64>, DynError> {
        let u = self.grid.inverse(uh);
        let mut sq = Vec::with_capacity(u.len());
        let mut peak: f64 = 0.0;
        for v in &u {
            peak = peak.max(v.abs());
            sq.push(v * v);
        }
        if !(peak <= self.cap) {
            return Err(DynError::Blowup { value: peak, cap: self.cap });
        }
        let mut c = self.grid.forward(&sq);
        for (z, s) in c.iter_mut().zip(&self.dx_mask) {
            *z *= s;
        }
        Ok(c)
    }

    /// One step. The input should already be dealiased.
    pub fn step(&self, u: &Field2D) -> Result<Field2D, DynError> {
        let uh = self.grid.forward(u.values());
        let next = self.scheme.step(&uh, |v| self.nonlinear(v))?;
        let values = self.grid.inverse(&next);
        Field2D::from_values(&self.grid, values).map_err(|_| DynError::NonFinite)
    }

    /// `n` steps, keeping the state in Fourier space in between.
    pub fn advance(&self, u: &Field2D, n: usize) -> Result<Field2D, DynError> {
        let mut uh = self.grid.forward(u.values());
        for _ in 0..n {
            uh = self.scheme.step(&uh, |v| self.nonlinear(v))?;
        }
        Field2D::from_values(&self.grid, self.grid.inverse(&uh)).map_err(|_| DynError::NonFinite)
    }
}

/// `step_full`: one ETDRK4 step of the ZK equation.
pub fn step_full(u: &Field2D, dt: f64) -> Result<Field2D, DynError> {
    FullFlow::new(u.grid(), dt).step(u)
}
