//! Decomposition of perturbations of the line soliton along the unstable and
//! stable transverse modes, the generalized kernel `{∂ₓQ, ∂_cQ}` and a
//! remainder `γ` on which `𝕃_{c*}` is coercive.

mod coercivity;
mod modulation;

use std::sync::Arc;

use zk_grid::{grad_norm_sq, Field2D, Grid2D};
use zk_spectral::SpectralData;

pub use coercivity::{coercivity_constant, coercivity_by_mode, h1_quotient, CoercivityReport};
pub use modulation::{fit_modulation, FitOptions, ModulationFit};

#[derive(Debug, thiserror::Error)]
pub enum DecompError {
    #[error("field grid does not match the spectral data grid")]
    GridMismatch,
    #[error("non-finite input field")]
    NonFinite,
    #[error("kappa must lie in (0, 1], got {0}")]
    BadKappa(f64),
    #[error("quadratic form on the remainder is negative ({value:.3e}); decomposition is inconsistent")]
    NegativeForm { value: f64 },
    #[error("coercivity estimate {value:.3e} is not positive (mode n = {mode})")]
    NotCoercive { value: f64, mode: usize },
    #[error("eigensolver failure: {0}")]
    Eigensolver(String),
    #[error("modulation Newton iteration did not converge in {iterations} steps (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("field is outside the tube: distance estimate {distance:.3e} exceeds {delta0:.3e}")]
    OutsideTube { distance: f64, delta0: f64 },
    #[error(transparent)]
    Spectral(#[from] zk_spectral::SpectralError),
}

/// `𝕃_c u = −Δu + c u − 2 Q u` for a profile `q` extended in `y`.
pub fn apply_lbb(u: &Field2D, c: f64, q: &zk_grid::Field1D) -> Field2D {
    let mut out = u.laplacian().scaled(-1.0);
    out.axpy(c, u);
    out.axpy(-2.0, &u.mul_profile(q));
    out
}

/// Cached 2D fields used by every decomposition around one reference soliton.
#[derive(Clone, Debug)]
pub struct Decomposer {
    spec: Arc<SpectralData>,
    q: Field2D,
    dq_dx: Field2D,
    dq_dc: Field2D,
    dq_dx_sq: f64,
    dq_dc_q: f64,
}

/// Coefficients of `u = Σ(Λ⁺F⁺ + Λ⁻F⁻) + μ₁∂ₓQ + μ₂∂_cQ + γ`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    /// `lambda_plus[k-1][j]`
    pub lambda_plus: Vec<[f64; 2]>,
    pub lambda_minus: Vec<[f64; 2]>,
    pub mu1: f64,
    pub mu2: f64,
    pub gamma: Field2D,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Projection {
    Plus,
    Minus,
    /// Generalized kernel, `P₁ + P₂`.
    P0,
    P1,
    P2,
    Gamma,
    /// Identity minus `P_γ`.
    D,
}

impl Decomposer {
    pub fn new(spec: Arc<SpectralData>) -> Self {
        let p = &spec.profile;
        let q = p.q_2d();
        let dq_dx = p.dq_dx_2d();
        let dq_dc = p.dq_dc_2d();
        let dq_dx_sq = dq_dx.dot(&dq_dx);
        let dq_dc_q = dq_dc.dot(&q);
        Decomposer { spec, q, dq_dx, dq_dc, dq_dx_sq, dq_dc_q }
    }

    pub fn spectral(&self) -> &Arc<SpectralData> {
        &self.spec
    }
    pub fn grid(&self) -> &Arc<Grid2D> {
        self.spec.grid()
    }
    pub fn c_star(&self) -> f64 {
        self.spec.c_star
    }

    fn check(&self, u: &Field2D) -> Result<(), DecompError> {
        if !u.grid().same_as(self.grid()) {
            return Err(DecompError::GridMismatch);
        }
        if !u.is_finite() {
            return Err(DecompError::NonFinite);
        }
        Ok(())
    }

    pub fn decompose(&self, u: &Field2D) -> Result<Decomposition, DecompError> {
        self.check(u)?;
        let n0 = self.spec.n0;
        let mut lambda_plus = vec![[0.0; 2]; n0];
        let mut lambda_minus = vec![[0.0; 2]; n0];
        let mut gamma = u.clone();
        for f in &self.spec.f_modes {
            let lp = u.dot(&f.l_minus);
            let lm = u.dot(&f.l_plus);
            lambda_plus[f.k - 1][f.j] = lp;
            lambda_minus[f.k - 1][f.j] = lm;
            gamma.axpy(-lp, &f.plus);
            gamma.axpy(-lm, &f.minus);
        }
        let mu1 = u.dot(&self.dq_dx) / self.dq_dx_sq;
        let mu2 = u.dot(&self.q) / self.dq_dc_q;
        gamma.axpy(-mu1, &self.dq_dx);
        gamma.axpy(-mu2, &self.dq_dc);
        Ok(Decomposition { lambda_plus, lambda_minus, mu1, mu2, gamma })
    }

    /// Rebuilds the selected component from a decomposition.
    pub fn assemble(&self, d: &Decomposition, which: Projection) -> Field2D {
        let mut out = Field2D::zeros(self.grid());
        let add_plus = matches!(which, Projection::Plus | Projection::D);
        let add_minus = matches!(which, Projection::Minus | Projection::D);
        let add_mu1 = matches!(which, Projection::P0 | Projection::P1 | Projection::D);
        let add_mu2 = matches!(which, Projection::P0 | Projection::P2 | Projection::D);
        for f in &self.spec.f_modes {
            if add_plus {
                out.axpy(d.lambda_plus[f.k - 1][f.j], &f.plus);
            }
            if add_minus {
                out.axpy(d.lambda_minus[f.k - 1][f.j], &f.minus);
            }
        }
        if add_mu1 {
            out.axpy(d.mu1, &self.dq_dx);
        }
        if add_mu2 {
            out.axpy(d.mu2, &self.dq_dc);
        }
        if which == Projection::Gamma {
            out = d.gamma.clone();
        }
        out
    }

    pub fn project(&self, u: &Field2D, which: Projection) -> Result<Field2D, DecompError> {
        Ok(self.assemble(&self.decompose(u)?, which))
    }

    /// `⟨γ, 𝕃_{c*}γ⟩ = ‖∇γ‖² + c*‖γ‖² − 2(Q_{c*}γ, γ)`.
    pub fn gamma_form(&self, gamma: &Field2D) -> f64 {
        let potential = gamma.mul_profile(&self.spec.profile.q).dot(gamma);
        grad_norm_sq(gamma) + self.spec.c_star * gamma.dot(gamma) - 2.0 * potential
    }

    /// Squared energy norm with the `μ₁` component scaled by `kappa`.
    pub fn energy_norm_sq_parts(&self, d: &Decomposition, kappa: f64) -> Result<f64, DecompError> {
        let form = self.gamma_form(&d.gamma);
        if form < -1e-10 {
            return Err(DecompError::NegativeForm { value: form });
        }
        let lam: f64 = d
            .lambda_plus
            .iter()
            .chain(&d.lambda_minus)
            .flat_map(|p| p.iter())
            .map(|v| v * v)
            .sum();
        Ok(lam + (kappa * d.mu1).powi(2) + d.mu2 * d.mu2 + form.max(0.0))
    }

    pub fn energy_norm(&self, u: &Field2D) -> Result<f64, DecompError> {
        Ok(self.energy_norm_sq_parts(&self.decompose(u)?, 1.0)?.sqrt())
    }

    /// `‖u‖_{E_κ} = ‖(I − P₁)u + κP₁u‖_E`.
    pub fn energy_norm_kappa(&self, u: &Field2D, kappa: f64) -> Result<f64, DecompError> {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(DecompError::BadKappa(kappa));
        }
        Ok(self.energy_norm_sq_parts(&self.decompose(u)?, kappa)?.sqrt())
    }

    /// `(Λ⁺, Λ⁻)` flattened in `(k, j)` order.
    pub fn unstable_coords(d: &Decomposition) -> (Vec<f64>, Vec<f64>) {
        let flat = |v: &Vec<[f64; 2]>| v.iter().flat_map(|p| p.iter().copied()).collect();
        (flat(&d.lambda_plus), flat(&d.lambda_minus))
    }
}

impl Decomposition {
    /// Energy norm of the remainder `γ`, `⟨γ, 𝕃γ⟩^{1/2}`.
    pub fn gamma_energy(&self, dec: &Decomposer) -> f64 {
        dec.gamma_form(&self.gamma).max(0.0).sqrt()
    }
}

pub fn decompose(u: &Field2D, spec: &Arc<SpectralData>) -> Result<Decomposition, DecompError> {
    Decomposer::new(spec.clone()).decompose(u)
}

pub fn project(u: &Field2D, which: Projection, spec: &Arc<SpectralData>) -> Result<Field2D, DecompError> {
    Decomposer::new(spec.clone()).project(u, which)
}

pub fn energy_norm(u: &Field2D, spec: &Arc<SpectralData>) -> Result<f64, DecompError> {
    Decomposer::new(spec.clone()).energy_norm(u)
}

pub fn energy_norm_kappa(u: &Field2D, spec: &Arc<SpectralData>, kappa: f64) -> Result<f64, DecompError> {
    Decomposer::new(spec.clone()).energy_norm_kappa(u, kappa)
}
