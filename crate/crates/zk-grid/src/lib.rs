//! Discretization of `ℝ × T_L` by a periodic box `[-X, X)` times the torus
//! `[0, 2πL)`, with Fourier differentiation, translation, quadrature and the
//! conserved functionals of the Zakharov–Kuznetsov equation
//! `u_t + ∂ₓ(Δu + u²) = 0`.

mod field;
mod grid;

pub use field::{Field1D, Field2D, Spectrum2D};
pub use grid::Grid2D;
pub use num_complex::Complex64;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GridError {
    #[error("{name} must be a power of two and at least 8, got {value}")]
    BadCount { name: &'static str, value: usize },
    #[error("{name} must be positive and finite, got {value}")]
    BadLength { name: &'static str, value: f64 },
    #[error("expected {expected} samples, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error("fields are sampled on different grids")]
    GridMismatch,
}

/// `∫ a b dx dy` by the trapezoid rule (spectrally accurate for periodic data).
pub fn inner_product(a: &Field2D, b: &Field2D) -> Result<f64, GridError> {
    if !a.same_grid(b) {
        return Err(GridError::GridMismatch);
    }
    Ok(a.dot(b))
}

/// Squared `H¹` norm computed in Fourier space.
pub fn h1_norm_sq(a: &Field2D) -> f64 {
    let g = a.grid().clone();
    a.spectrum()
        .weighted_norm_sq(|j, m| 1.0 + g.xi_d1(j).powi(2) + g.eta_d1(m).powi(2))
}

/// `sqrt(‖a‖² + ‖∇a‖²)`.
pub fn h1_norm(a: &Field2D) -> f64 {
    h1_norm_sq(a).sqrt()
}

/// `‖∇a‖²`.
pub fn grad_norm_sq(a: &Field2D) -> f64 {
    let g = a.grid().clone();
    a.spectrum().weighted_norm_sq(|j, m| g.xi_d1(j).powi(2) + g.eta_d1(m).powi(2))
}

/// `M(u) = ∫ u²`.
pub fn mass(u: &Field2D) -> f64 {
    u.dot(u)
}

/// `E(u) = ∫ (½|∇u|² − ⅓u³)`.
pub fn energy(u: &Field2D) -> f64 {
    let cubic: f64 = u.values().iter().map(|v| v * v * v).sum::<f64>() * u.grid().cell();
    0.5 * grad_norm_sq(u) - cubic / 3.0
}
