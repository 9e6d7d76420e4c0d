use std::sync::Arc;

use faer::Mat;
use zk_grid::{Complex64, Field1D, Grid2D};
use zk_soliton::SolitonProfile;

/// Dense matrix acting on samples of an x-profile on the periodic grid.
#[derive(Clone, Debug)]
pub struct Operator1D {
    grid: Arc<Grid2D>,
    matrix: Mat<f64>,
}

impl Operator1D {
    pub fn new(grid: &Arc<Grid2D>, matrix: Mat<f64>) -> Self {
        assert_eq!(matrix.nrows(), grid.nx());
        assert_eq!(matrix.ncols(), grid.nx());
        Operator1D { grid: grid.clone(), matrix }
    }
    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }
    pub fn grid(&self) -> &Arc<Grid2D> {
        &self.grid
    }
    pub fn apply(&self, f: &Field1D) -> Field1D {
        let out = apply_dense(&self.matrix, f.values());
        Field1D::from_values(&self.grid, out).expect("finite operator output")
    }
    pub fn is_finite(&self) -> bool {
        (0..self.matrix.nrows()).all(|i| (0..self.matrix.ncols()).all(|j| self.matrix[(i, j)].is_finite()))
    }
}

pub(crate) fn apply_dense(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let n = m.nrows();
    let mut out = vec![0.0; n];
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        let col = m.col(j);
        for i in 0..n {
            out[i] += col[i] * xj;
        }
    }
    out
}

/// Fourier differentiation matrix of the given order on the x-grid, built
/// column by column from the FFT symbol so that it agrees exactly with the
/// field derivatives of `zk_grid`.
pub fn diff_matrix(grid: &Arc<Grid2D>, order: u32) -> Mat<f64> {
    let n = grid.nx();
    let symbol: Vec<Complex64> = (0..n)
        .map(|j| match order {
            1 => Complex64::new(0.0, grid.xi_d1(j)),
            2 => Complex64::new(-grid.xi(j).powi(2), 0.0),
            _ => panic!("unsupported derivative order {order}"),
        })
        .collect();
    // The matrix is circulant: compute the first column and shift it.
    let mut e0 = vec![0.0; n];
    e0[0] = 1.0;
    let mut c = grid.forward_x(&e0);
    for (z, s) in c.iter_mut().zip(&symbol) {
        *z *= s;
    }
    let col0 = grid.inverse_x(&c);
    Mat::from_fn(n, n, |i, j| col0[(i + n - j) % n])
}

/// `−∂ₓ² + c + a − 2Q_c` as a dense symmetric matrix.
pub fn schrodinger_matrix(profile: &SolitonProfile, a: f64) -> Mat<f64> {
    let grid = profile.grid();
    let d2 = diff_matrix(grid, 2);
    let n = grid.nx();
    let q = profile.q.values();
    Mat::from_fn(n, n, |i, j| {
        let diag = if i == j { profile.c + a - 2.0 * q[i] } else { 0.0 };
        -d2[(i, j)] + diag
    })
}

/// Conjugated operator `e^{γx} 𝓛 e^{−γx} = −(∂ₓ − γ)² + c + a − 2Q_c`.
pub(crate) fn weighted_schrodinger_matrix(profile: &SolitonProfile, a: f64, gamma: f64) -> (Mat<f64>, Mat<f64>) {
    let grid = profile.grid();
    let n = grid.nx();
    let d1 = diff_matrix(grid, 1);
    let dw = Mat::from_fn(n, n, |i, j| d1[(i, j)] - if i == j { gamma } else { 0.0 });
    let dw2 = &dw * &dw;
    let q = profile.q.values();
    let l = Mat::from_fn(n, n, |i, j| {
        let diag = if i == j { profile.c + a - 2.0 * q[i] } else { 0.0 };
        -dw2[(i, j)] + diag
    });
    (dw, l)
}
