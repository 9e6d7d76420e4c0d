//! The line solitary wave `Q_c(x) = (3c/2) sech²(√c x / 2)`, its derivatives
//! in `x` and in the speed `c`, and the count of unstable transverse modes.

use std::sync::Arc;

use zk_grid::{Field1D, Field2D, Grid2D};

/// Distance from an integer below which `√(5c) L / 2` is treated as resonant.
pub const RESONANCE_TOL: f64 = 1e-9;

/// Largest admissible ratio `Q_c(X) / Q_c(0)` at the edge of the box.
pub const TAIL_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SolitonError {
    #[error("speed must be positive and finite, got {0}")]
    BadSpeed(f64),
    #[error("torus scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error(
        "box half-width {x_half_width} is too narrow for speed {c}: edge/peak ratio {ratio:.3e} exceeds {TAIL_TOL:e}"
    )]
    DomainTooNarrow { c: f64, x_half_width: f64, ratio: f64 },
    #[error(
        "resonant configuration: sqrt(5c) L / 2 = {value} is an integer; zero is an extra transverse eigenvalue"
    )]
    Resonant { value: f64 },
}

fn sech(u: f64) -> f64 {
    1.0 / u.cosh()
}

/// Pointwise values of the closed-form profile and its derivatives.
pub mod formula {
    use super::sech;

    fn arg(c: f64, x: f64) -> f64 {
        0.5 * c.sqrt() * x
    }

    pub fn q(c: f64, x: f64) -> f64 {
        1.5 * c * sech(arg(c, x)).powi(2)
    }

    pub fn dq_dx(c: f64, x: f64) -> f64 {
        let u = arg(c, x);
        -1.5 * c * c.sqrt() * sech(u).powi(2) * u.tanh()
    }

    pub fn d2q_dx2(c: f64, x: f64) -> f64 {
        // Q'' = cQ − Q²
        let v = q(c, x);
        c * v - v * v
    }

    pub fn dq_dc(c: f64, x: f64) -> f64 {
        let u = arg(c, x);
        let s2 = sech(u).powi(2);
        1.5 * s2 - 1.5 * u * s2 * u.tanh()
    }

    fn bracket(u: f64) -> f64 {
        let s2 = sech(u).powi(2);
        let t = u.tanh();
        -3.0 * s2 * t + 2.0 * u * s2 * t * t - u * s2 * s2
    }

    pub fn d2q_dc2(c: f64, x: f64) -> f64 {
        let u = arg(c, x);
        0.75 / c * u * bracket(u)
    }

    pub fn d2q_dxdc(c: f64, x: f64) -> f64 {
        let u = arg(c, x);
        0.75 * c.sqrt() * bracket(u)
    }
}

/// `Q_c`, `∂ₓQ_c` and `∂_cQ_c` sampled on the x-points of a grid.
#[derive(Clone, Debug)]
pub struct SolitonProfile {
    pub c: f64,
    pub q: Field1D,
    pub dq_dx: Field1D,
    pub dq_dc: Field1D,
}

/// Samples the solitary wave of speed `c` on `grid`.
pub fn soliton(c: f64, grid: &Arc<Grid2D>) -> Result<SolitonProfile, SolitonError> {
    if !(c.is_finite() && c > 0.0) {
        return Err(SolitonError::BadSpeed(c));
    }
    let xh = grid.x_half_width();
    let ratio = formula::q(c, xh) / formula::q(c, 0.0);
    if ratio > TAIL_TOL {
        return Err(SolitonError::DomainTooNarrow { c, x_half_width: xh, ratio });
    }
    Ok(SolitonProfile::sample_unchecked(c, grid))
}

impl SolitonProfile {
    /// Samples without the tail check; used for trial speeds inside iterations.
    pub fn sample_unchecked(c: f64, grid: &Arc<Grid2D>) -> Self {
        SolitonProfile {
            c,
            q: Field1D::from_fn(grid, |x| formula::q(c, x)),
            dq_dx: Field1D::from_fn(grid, |x| formula::dq_dx(c, x)),
            dq_dc: Field1D::from_fn(grid, |x| formula::dq_dc(c, x)),
        }
    }

    pub fn grid(&self) -> &Arc<Grid2D> {
        self.q.grid()
    }

    pub fn d2q_dc2(&self) -> Field1D {
        let c = self.c;
        Field1D::from_fn(self.grid(), |x| formula::d2q_dc2(c, x))
    }

    pub fn d2q_dxdc(&self) -> Field1D {
        let c = self.c;
        Field1D::from_fn(self.grid(), |x| formula::d2q_dxdc(c, x))
    }

    pub fn d2q_dx2(&self) -> Field1D {
        let c = self.c;
        Field1D::from_fn(self.grid(), |x| formula::d2q_dx2(c, x))
    }

    /// `Q_c^{3/2}`, the ground state of `𝓛_c`.
    pub fn q_three_halves(&self) -> Field1D {
        self.q.map(|v| v.max(0.0).powf(1.5))
    }

    pub fn q_2d(&self) -> Field2D {
        Field2D::from_profile(&self.q)
    }
    pub fn dq_dx_2d(&self) -> Field2D {
        Field2D::from_profile(&self.dq_dx)
    }
    pub fn dq_dc_2d(&self) -> Field2D {
        Field2D::from_profile(&self.dq_dc)
    }
}

/// `‖Q_c‖²_{L²(ℝ)} = 6 c^{3/2}`.
pub fn line_mass(c: f64) -> f64 {
    6.0 * c.powf(1.5)
}

/// `(∂_cQ_c, Q_c)_{L²(ℝ)} = 4.5 √c`.
pub fn dq_dc_dot_q(c: f64) -> f64 {
    4.5 * c.sqrt()
}

/// Number of unstable transverse wavenumbers, `⌊√(5c) L / 2⌋`.
pub fn n0(c: f64, torus_scale: f64) -> Result<usize, SolitonError> {
    if !(c.is_finite() && c > 0.0) {
        return Err(SolitonError::BadSpeed(c));
    }
    if !(torus_scale.is_finite() && torus_scale > 0.0) {
        return Err(SolitonError::BadScale(torus_scale));
    }
    let value = (5.0 * c).sqrt() * torus_scale / 2.0;
    if (value - value.round()).abs() < RESONANCE_TOL {
        return Err(SolitonError::Resonant { value });
    }
    Ok(value.floor() as usize)
}

/// Codimension of the center-stable manifold, `2 n0`.
pub fn codimension(c: f64, torus_scale: f64) -> Result<usize, SolitonError> {
    n0(c, torus_scale).map(|n| 2 * n)
}

/// Critical speed `4 / (5 L²)` above which the line soliton is transversally unstable.
pub fn stability_threshold(torus_scale: f64) -> f64 {
    4.0 / (5.0 * torus_scale * torus_scale)
}

/// Shift `k² / L²` of the transverse mode `k`.
pub fn mode_shift(k: usize, torus_scale: f64) -> f64 {
    (k * k) as f64 / (torus_scale * torus_scale)
}

/// Recommended box half-width for a reference speed.
pub fn default_x_half_width(c_star: f64) -> f64 {
    48.0 / c_star.sqrt()
}
