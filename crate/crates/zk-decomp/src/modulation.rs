use zk_grid::{h1_norm, Field1D, Field2D};
use zk_soliton::SolitonProfile;

use crate::DecompError;

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    /// Largest admissible `‖v‖_{H¹} + |c − c*|` for the fitted state.
    pub delta0: f64,
    /// Target for both orthogonality pairings.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { delta0: 0.5, tol: 1e-11, max_iter: 50 }
    }
}

#[derive(Clone, Debug)]
pub struct ModulationFit {
    pub c: f64,
    /// Shift in `[-X, X)`.
    pub rho: f64,
    /// `τ_{−ρ}u − Q_c`.
    pub v: Field2D,
    pub iterations: usize,
    /// `max |(v, Q_{c*})|, |(v, ∂ₓQ_{c*})|` on the 2D domain.
    pub residual: f64,
}

fn wrap(rho: f64, half: f64) -> f64 {
    if (-half..half).contains(&rho) {
        return rho;
    }
    let p = 2.0 * half;
    let r = (rho + half).rem_euclid(p) - half;
    if r >= half {
        r - p
    } else {
        r
    }
}

struct Residual {
    g: [f64; 2],
    w: Field1D,
    qc: SolitonProfile,
}

impl Residual {
    fn norm(&self) -> f64 {
        self.g[0].abs().max(self.g[1].abs())
    }
}

fn residual(ubar: &Field1D, reference: &SolitonProfile, c: f64, rho: f64, ly: f64) -> Residual {
    let w = ubar.translate(-rho);
    let qc = SolitonProfile::sample_unchecked(c, ubar.grid());
    let r = &w - &qc.q;
    let g = [ly * r.dot(&reference.q), ly * r.dot(&reference.dq_dx)];
    Residual { g, w, qc }
}

/// Finds `(c, ρ)` such that `v = τ_{−ρ}u − Q_c` is orthogonal to `Q_{c*}` and
/// `∂ₓQ_{c*}`, by damped Newton iteration with the exact Jacobian. Both
/// pairings only see the y-average of `u`.
pub fn fit_modulation(
    u: &Field2D,
    reference: &SolitonProfile,
    c_guess: f64,
    rho_guess: f64,
    opts: &FitOptions,
) -> Result<ModulationFit, DecompError> {
    if !u.is_finite() {
        return Err(DecompError::NonFinite);
    }
    if !u.grid().same_as(reference.grid()) {
        return Err(DecompError::GridMismatch);
    }
    let grid = u.grid().clone();
    let ly = grid.torus_length();
    let half = grid.x_half_width();
    let ubar = u.y_mean();
    let (mut c, mut rho) = (c_guess, rho_guess);
    let mut cur = residual(&ubar, reference, c, rho, ly);
    let mut iterations = 0;
    while cur.norm() > opts.tol {
        if iterations == opts.max_iter || !c.is_finite() {
            return Err(DecompError::NoConvergence { iterations, residual: cur.norm() });
        }
        iterations += 1;
        let wx = cur.w.ddx();
        let j11 = -ly * cur.qc.dq_dc.dot(&reference.q);
        let j21 = -ly * cur.qc.dq_dc.dot(&reference.dq_dx);
        let j12 = ly * wx.dot(&reference.q);
        let j22 = ly * wx.dot(&reference.dq_dx);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return Err(DecompError::NoConvergence { iterations, residual: cur.norm() });
        }
        let dc = -(j22 * cur.g[0] - j12 * cur.g[1]) / det;
        let drho = -(-j21 * cur.g[0] + j11 * cur.g[1]) / det;
        let mut t = 1.0;
        loop {
            let (nc, nr) = (c + t * dc, rho + t * drho);
            if nc > 0.0 {
                let next = residual(&ubar, reference, nc, nr, ly);
                if next.norm() < cur.norm() || t < 1.0 / 64.0 {
                    c = nc;
                    rho = nr;
                    cur = next;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-6 {
                return Err(DecompError::NoConvergence { iterations, residual: cur.norm() });
            }
        }
    }
    let rho = wrap(rho, half);
    let qc = SolitonProfile::sample_unchecked(c, &grid);
    let mut v = u.translate(-rho);
    v.axpy(-1.0, &Field2D::from_profile(&qc.q));
    let distance = h1_norm(&v) + (c - reference.c).abs();
    if distance > opts.delta0 {
        return Err(DecompError::OutsideTube { distance, delta0: opts.delta0 });
    }
    let residual = cur.norm();
    Ok(ModulationFit { c, rho, v, iterations, residual })
}

#[cfg(test)]
mod tests {
    use super::wrap;

    #[test]
    fn wrap_into_box() {
        assert_eq!(wrap(0.3, 10.0), 0.3);
        assert!((wrap(10.5, 10.0) + 9.5).abs() < 1e-12);
        assert!((wrap(-10.5, 10.0) - 9.5).abs() < 1e-12);
        assert_eq!(wrap(10.0, 10.0), -10.0);
    }
}
