use std::sync::Arc;

use zk_grid::{Complex64, Field1D, Field2D, Grid2D};
use zk_soliton::{formula, SolitonProfile};
use zk_spectral::SpectralData;

/// Fourier multipliers and reference-soliton fields shared by all steppers.
#[derive(Clone, Debug)]
pub struct Reference {
    pub spec: Arc<SpectralData>,
    pub c_star: f64,
    grid: Arc<Grid2D>,
    /// `iξ` with the Nyquist bin removed.
    pub(crate) dx_sym: Vec<Complex64>,
    pub(crate) mask: Vec<f64>,
    /// Symbol of `∂ₓ(−Δ + c*)`.
    pub(crate) lin_sym: Vec<Complex64>,
    pub q: Field2D,
    pub dq: Field2D,
    pub dcq: Field2D,
    /// `𝕃*∂ₓ²Q* / ‖∂ₓQ*‖²`, the functional defining `ρ̇ − c` in the linear system.
    pub(crate) alpha_lin: Field2D,
    /// `x`-transforms of `Q*`, `∂ₓQ*` and of `(−∂ₓ² + c*)∂ₓQ*`,
    /// `(−∂ₓ² + c*)∂ₓ²Q*`. Pairings of `∂ₓ(−Δ + c*)v` with `Q*` and `∂ₓQ*`
    /// equal `−(v, ·)` of the last two.
    pub(crate) q_x: Vec<Complex64>,
    pub(crate) dq_x: Vec<Complex64>,
    pub(crate) g_q_x: Vec<Complex64>,
    pub(crate) g_dq_x: Vec<Complex64>,
    /// `1 + ξ² + η²` with Nyquist bins dropped.
    pub(crate) h1_weight: Vec<f64>,
}

impl Reference {
    pub fn new(spec: Arc<SpectralData>) -> Self {
        let grid = spec.grid().clone();
        let c_star = spec.c_star;
        let nx = grid.nx();
        let mut dx_sym = Vec::with_capacity(grid.len());
        let mut mask = Vec::with_capacity(grid.len());
        let mut lin_sym = Vec::with_capacity(grid.len());
        let mut h1_weight = Vec::with_capacity(grid.len());
        for m in 0..grid.ny() {
            for j in 0..nx {
                let ik = Complex64::new(0.0, grid.xi_d1(j));
                dx_sym.push(ik);
                mask.push(if grid.dealias_mask(j, m) { 1.0 } else { 0.0 });
                lin_sym.push(ik * (grid.xi(j).powi(2) + grid.eta(m).powi(2) + c_star));
                h1_weight.push(1.0 + grid.xi_d1(j).powi(2) + grid.eta_d1(m).powi(2));
            }
        }
        let p: &SolitonProfile = &spec.profile;
        let helm = |f: &Field1D| {
            let mut out = f.d2x().scaled(-1.0);
            out.axpy(c_star, f);
            out
        };
        let d2q = p.dq_dx.ddx();
        let g_q = Field2D::from_profile(&helm(&p.dq_dx));
        let g_dq = Field2D::from_profile(&helm(&d2q));
        let dq_sq = p.dq_dx_2d().dot(&p.dq_dx_2d());
        let mut l_d2q = helm(&d2q);
        l_d2q.axpy(-2.0, &p.q.mul_pointwise(&d2q));
        let alpha_lin = Field2D::from_profile(&l_d2q).scaled(1.0 / dq_sq);
        let row = |f: &Field2D| grid.forward_x(&f.values()[..nx]);
        Reference {
            q_x: grid.forward_x(p.q.values()),
            dq_x: grid.forward_x(p.dq_dx.values()),
            g_q_x: row(&g_q),
            g_dq_x: row(&g_dq),
            h1_weight,
            c_star,
            q: p.q_2d(),
            dq: p.dq_dx_2d(),
            dcq: p.dq_dc_2d(),
            grid,
            dx_sym,
            mask,
            lin_sym,
            alpha_lin,
            spec,
        }
    }

    pub fn grid(&self) -> &Arc<Grid2D> {
        &self.grid
    }

    pub(crate) fn fft(&self, f: &Field2D) -> Vec<Complex64> {
        self.grid.forward(f.values())
    }

    /// `(f, p)` for a `y`-constant `p`, from `f̂` and the `x`-transform of `p`.
    pub(crate) fn dot_profile_hat(&self, f_hat: &[Complex64], p_x: &[Complex64]) -> f64 {
        let s: f64 = f_hat.iter().zip(p_x).map(|(a, b)| (a * b.conj()).re).sum();
        s * self.grid.cell() / self.grid.nx() as f64
    }

    pub(crate) fn h1_norm_sq_hat(&self, f_hat: &[Complex64]) -> f64 {
        let s: f64 = f_hat.iter().zip(&self.h1_weight).map(|(a, w)| w * a.norm_sqr()).sum();
        s * self.grid.cell() / self.grid.len() as f64
    }

    pub(crate) fn ifft(&self, c: &[Complex64]) -> Field2D {
        Field2D::from_values(&self.grid, self.grid.inverse(c)).expect("finite spectral data")
    }

    /// `∂ₓ` of the dealiased part of `f`.
    pub(crate) fn ddx_dealiased(&self, f: &Field2D) -> Field2D {
        let mut c = self.fft(f);
        for ((z, s), m) in c.iter_mut().zip(&self.dx_sym).zip(&self.mask) {
            *z *= s * m;
        }
        self.ifft(&c)
    }

    pub(crate) fn ddx(&self, f: &Field2D) -> Field2D {
        let mut c = self.fft(f);
        for (z, s) in c.iter_mut().zip(&self.dx_sym) {
            *z *= s;
        }
        self.ifft(&c)
    }

    /// `∂ₓ𝕃_{c*} v`.
    pub fn apply_dx_lbb(&self, v: &Field2D) -> Field2D {
        let mut c = self.fft(v);
        for (z, s) in c.iter_mut().zip(&self.lin_sym) {
            *z *= s;
        }
        let mut out = self.ifft(&c);
        out.axpy(-2.0, &self.ddx(&v.mul_profile(&self.spec.profile.q)));
        out
    }

    /// Generator of the linear system, `𝒜v = ∂ₓ𝕃_{c*}v + ((v, 𝕃∂ₓ²Q)/‖∂ₓQ‖²) ∂ₓQ`.
    pub fn apply_generator(&self, v: &Field2D) -> Field2D {
        let mut out = self.apply_dx_lbb(v);
        out.axpy(v.dot(&self.alpha_lin), &self.dq);
        out
    }

    /// `Q_c`, `∂ₓQ_c`, `∂_cQ_c` at a trial speed.
    pub(crate) fn profile_at(&self, c: f64) -> SolitonProfile {
        SolitonProfile::sample_unchecked(c, &self.grid)
    }

    pub(crate) fn profile_fields(&self, c: f64, f: fn(f64, f64) -> f64) -> Field1D {
        Field1D::from_fn(&self.grid, |x| f(c, x))
    }

    pub(crate) fn d2q_dc2(&self, c: f64) -> Field1D {
        self.profile_fields(c, formula::d2q_dc2)
    }
    pub(crate) fn d2q_dxdc(&self, c: f64) -> Field1D {
        self.profile_fields(c, formula::d2q_dxdc)
    }
}
