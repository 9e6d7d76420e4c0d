//! Linearized operators around the line soliton and their transverse
//! unstable/stable eigenpairs.

use std::sync::Arc;

use zk_grid::Grid2D;
use zk_soliton::{soliton, SolitonError};

mod eigen;
mod modes;
mod operator;

pub use eigen::{lambda_of_profile, IM_TOL, RE_TOL, WEIGHT};
pub use modes::{
    check_pairing_sign, line_mode, line_modes, transverse_mode, unstable_modes, Branch, EigenField, LineMode,
    SpectralData, TransverseMode,
};
pub use operator::{diff_matrix, schrodinger_matrix, Operator1D};

#[derive(Debug, thiserror::Error)]
pub enum SpectralError {
    #[error(transparent)]
    Soliton(#[from] SolitonError),
    #[error("shift must be finite and non-negative, got {0}")]
    BadShift(f64),
    #[error("ambiguous spectrum at c={c}, a={a}: {} real unstable candidates {candidates:?}", candidates.len())]
    Ambiguous { c: f64, a: f64, candidates: Vec<f64> },
    #[error("eigensolver failure: {0}")]
    Eigensolver(String),
    #[error("Q^(3/2) is not in the kernel at the threshold shift (residual {residual:.3e})")]
    KernelCheck { residual: f64 },
    #[error("grid torus scale {grid} differs from requested L = {requested}")]
    ScaleMismatch { requested: f64, grid: f64 },
    #[error("mode k={k} has no unstable eigenvalue on the box of half-width {x_half_width}; enlarge x_half_width")]
    UnresolvedMode { k: usize, x_half_width: f64 },
    #[error("no unstable line eigenvalue for k={k} (shift {a})")]
    NoLineEigenvalue { k: usize, a: f64 },
    #[error("n0 = {n0} transverse modes are not resolved by ny = {ny} after dealiasing")]
    TransverseUnresolved { n0: usize, ny: usize },
    #[error("eigen-residual {residual:.3e} too large for mode k={k}")]
    Residual { k: usize, residual: f64 },
    #[error("pairing (f+, L f-) = {value:.3e} is not positive for mode k={k}")]
    NonPositivePairing { k: usize, value: f64 },
    #[error("pairing (f+, L g+) = {value:.3e} is not negative")]
    SignViolation { value: f64 },
    #[error("self-pairing (f+, L f+) = {value:.3e} does not vanish")]
    SelfPairing { value: f64 },
}

/// `−∂ₓ² + c + a − 2Q_c` on the x-grid.
pub fn assemble_l1d(c: f64, a: f64, grid: &Arc<Grid2D>) -> Result<Operator1D, SpectralError> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(SpectralError::BadShift(a));
    }
    let profile = soliton(c, grid)?;
    Ok(Operator1D::new(grid, schrodinger_matrix(&profile, a)))
}

/// Positive eigenvalue of `∂ₓ(𝓛_c + a)` on the line. `None` when no
/// eigenvalue has real part above [`RE_TOL`]: every shift above `5c/4`, and
/// shifts so close below it that the rate is under the detection floor.
pub fn lambda_of(c: f64, a: f64, grid: &Arc<Grid2D>) -> Result<Option<f64>, SpectralError> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(SpectralError::BadShift(a));
    }
    let profile = soliton(c, grid)?;
    lambda_of_profile(&profile, a)
}
