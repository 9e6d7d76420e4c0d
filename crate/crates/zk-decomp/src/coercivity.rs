use faer::{Mat, Side};
use zk_grid::{h1_norm_sq, Complex64, Field2D};
use zk_spectral::{schrodinger_matrix, SpectralData};

use crate::{DecompError, Decomposer};

#[derive(Clone, Debug)]
pub struct CoercivityReport {
    /// Smallest constrained Rayleigh quotient for each transverse mode `n`.
    pub by_mode: Vec<(usize, f64)>,
    pub constant: f64,
}

/// `⟨γ, 𝕃γ⟩ / ‖γ‖²_{H¹}`.
pub fn h1_quotient(gamma: &Field2D, dec: &Decomposer) -> f64 {
    dec.gamma_form(gamma) / h1_norm_sq(gamma)
}

/// Circulant matrix with symbol `(1 + ξ² + a)^{-1/2}`.
fn inv_sqrt_h1(spec: &SpectralData, a: f64) -> Mat<f64> {
    let grid = spec.grid();
    let n = grid.nx();
    let mut e0 = vec![0.0; n];
    e0[0] = 1.0;
    let mut c = grid.forward_x(&e0);
    for (j, z) in c.iter_mut().enumerate() {
        *z *= Complex64::new((1.0 + grid.xi_d1(j).powi(2) + a).powf(-0.5), 0.0);
    }
    let col = grid.inverse_x(&c);
    Mat::from_fn(n, n, |i, j| col[(i + n - j) % n])
}

fn matvec(m: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

fn orthonormalize(mut vs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vs.iter_mut() {
        for _ in 0..2 {
            for u in &out {
                let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
            }
        }
        let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nrm > 1e-300 {
            out.push(v.iter().map(|a| a / nrm).collect());
        }
    }
    out
}

/// Smallest value of `⟨γ, 𝕃γ⟩ / ‖γ‖²_{H¹}` over remainders in the y-Fourier
/// mode `n`, from the symmetric pencil reduced by `B^{-1/2}` and deflated
/// along the constraint directions.
fn mode_minimum(spec: &SpectralData, n: usize) -> Result<f64, DecompError> {
    let profile = &spec.profile;
    let a = (n * n) as f64 / spec.torus_scale.powi(2);
    let amat = schrodinger_matrix(profile, a);
    let bh = inv_sqrt_h1(spec, a);
    let m = &(&bh * &amat) * &bh;
    let dim = m.nrows();
    let m = Mat::from_fn(dim, dim, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));

    let constraints: Vec<Vec<f64>> = if n == 0 {
        vec![profile.q.values().to_vec(), profile.dq_dx.values().to_vec()]
    } else if n <= spec.n0 {
        let mode = &spec.modes[n - 1];
        vec![mode.lf_plus.values().to_vec(), mode.lf_minus.values().to_vec()]
    } else {
        Vec::new()
    };
    let u = orthonormalize(constraints.iter().map(|c| matvec(&bh, c)).collect());

    let mut k = m.clone();
    if !u.is_empty() {
        // P M P + s U Uᵀ with P = I − U Uᵀ
        let mu: Vec<Vec<f64>> = u.iter().map(|ui| matvec(&m, ui)).collect();
        let gram: Vec<Vec<f64>> =
            u.iter().map(|ui| mu.iter().map(|mj| ui.iter().zip(mj).map(|(a, b)| a * b).sum()).collect()).collect();
        let shift = 1e3 * (1.0 + spec.c_star + a);
        k = Mat::from_fn(dim, dim, |i, j| {
            let mut v = m[(i, j)];
            for p in 0..u.len() {
                v -= u[p][i] * mu[p][j] + mu[p][i] * u[p][j];
                for q in 0..u.len() {
                    v += u[p][i] * gram[p][q] * u[q][j];
                }
                v += shift * u[p][i] * u[p][j];
            }
            v
        });
    }
    let eigs = k
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| DecompError::Eigensolver(format!("{e:?}")))?;
    Ok(eigs[0])
}

/// Per-mode constrained minima for `n = 0..ny/2` (the y-Nyquist mode excluded).
pub fn coercivity_by_mode(spec: &SpectralData) -> Result<CoercivityReport, DecompError> {
    let ny = spec.grid().ny();
    let by_mode = (0..ny / 2)
        .map(|n| mode_minimum(spec, n).map(|v| (n, v)))
        .collect::<Result<Vec<_>, _>>()?;
    let (mode, constant) = by_mode
        .iter()
        .copied()
        .fold((0, f64::INFINITY), |acc, (n, v)| if v < acc.1 { (n, v) } else { acc });
    if !(constant > 0.0) {
        return Err(DecompError::NotCoercive { value: constant, mode });
    }
    Ok(CoercivityReport { by_mode, constant })
}

/// Best constant `C` in `⟨P_γu, 𝕃P_γu⟩ ≥ C‖P_γu‖²_{H¹}` on the grid.
pub fn coercivity_constant(spec: &SpectralData, grid: &std::sync::Arc<zk_grid::Grid2D>) -> Result<f64, DecompError> {
    if !grid.same_as(spec.grid()) {
        return Err(DecompError::GridMismatch);
    }
    coercivity_by_mode(spec).map(|r| r.constant)
}
