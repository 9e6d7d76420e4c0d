use std::sync::Arc;

use zk_grid::{h1_norm_sq, Complex64, Field2D};

use crate::reference::Reference;
use crate::DynError;

/// `u = τ_ρ(v + Q_c)` at time `t`.
#[derive(Clone, Debug)]
pub struct ModulatedState {
    pub v: Field2D,
    pub c: f64,
    pub rho: f64,
    pub t: f64,
}

impl ModulatedState {
    pub fn new(v: Field2D, c: f64, rho: f64) -> Self {
        ModulatedState { v, c, rho, t: 0.0 }
    }
    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.c.is_finite() && self.rho.is_finite() && self.t.is_finite()
    }
}

/// Radius of the cutoff ball in `‖v‖²_{H¹} + |c − c*|²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffParams {
    pub delta: f64,
}

impl Default for CutoffParams {
    fn default() -> Self {
        CutoffParams { delta: 1e-2 }
    }
}

/// Quintic smoothstep from 1 at `r ≤ 1` down to 0 at `r ≥ 2`.
pub fn chi(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let s = r - 1.0;
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// `χ((‖v‖²_{H¹} + |c − c*|²) / δ²)`.
pub fn chi_delta(v: &Field2D, c: f64, c_star: f64, params: &CutoffParams) -> f64 {
    let arg = (h1_norm_sq(v) + (c - c_star).powi(2)) / (params.delta * params.delta);
    chi(arg)
}

/// How strongly the nonlinear blocks enter the modulated equations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    /// The modulated system, `χ ≡ 1`.
    Full,
    /// Nonlinear blocks weighted by `χ_δ(v, c − c*)`.
    Localized(CutoffParams),
    /// `χ ≡ 0` with the speed frozen at `c0`.
    Linear { c0: f64 },
}

/// Right-hand side without the stiff part `∂ₓ(−Δ + c*)v`, and the
/// modulation rates `α = ρ̇ − c`, `β = ċ`.
#[derive(Clone, Debug)]
pub struct ModRhs {
    pub n: Field2D,
    pub alpha: f64,
    pub beta: f64,
    pub chi: f64,
}

struct HatRhs {
    n_hat: Vec<Complex64>,
    alpha: f64,
    beta: f64,
}

/// Modulation parameters seen by one Runge–Kutta stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageCoef {
    pub c: f64,
    pub rho_dot: f64,
    pub c_dot: f64,
}

/// Largest condition number accepted for the 2×2 modulation matrix.
pub const MAX_CONDITION: f64 = 1e8;

fn condition_2x2(m: [[f64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = m;
    let fro2 = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    if det == 0.0 {
        return f64::INFINITY;
    }
    // σ_max / σ_min from the two invariants of MᵀM
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let smax2 = 0.5 * (fro2 + disc);
    let smin2 = det * det / smax2;
    (smax2 / smin2).sqrt()
}

/// Integrating-factor RK4 for the modulated family of systems.
#[derive(Clone, Debug)]
pub struct ModulatedFlow {
    reference: Arc<Reference>,
    dt: f64,
    e_half: Vec<Complex64>,
    e_full: Vec<Complex64>,
}

impl ModulatedFlow {
    pub fn new(reference: Arc<Reference>, dt: f64) -> Self {
        let e_half = reference.lin_sym.iter().map(|s| (s * (0.5 * dt)).exp()).collect();
        let e_full = reference.lin_sym.iter().map(|s| (s * dt).exp()).collect();
        ModulatedFlow { reference, dt, e_half, e_full }
    }

    pub fn reference(&self) -> &Arc<Reference> {
        &self.reference
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub(crate) fn propagate(&self, c: &[Complex64], half: bool) -> Vec<Complex64> {
        let e = if half { &self.e_half } else { &self.e_full };
        c.iter().zip(e).map(|(a, b)| a * b).collect()
    }

    fn chi_for(&self, coupling: &Coupling, v_hat: &[Complex64], c: f64) -> f64 {
        match coupling {
            Coupling::Full => 1.0,
            Coupling::Linear { .. } => 0.0,
            Coupling::Localized(p) => {
                let arg = (self.reference.h1_norm_sq_hat(v_hat) + (c - self.reference.c_star).powi(2)) / (p.delta * p.delta);
                chi(arg)
            }
        }
    }

    /// Non-stiff part of the right-hand side at cutoff value `chi`.
    pub fn rhs(&self, v: &Field2D, c: f64, chi: f64) -> Result<ModRhs, DynError> {
        let r = &*self.reference;
        let k = self.rhs_hat(v, &r.fft(v), c, chi)?;
        Ok(ModRhs { n: r.ifft(&k.n_hat), alpha: k.alpha, beta: k.beta, chi })
    }

    /// [`Self::rhs`] with `v` given in both spaces and the result left in
    /// Fourier space. Every pairing with the `y`-constant reference fields
    /// only reads the `η = 0` row of the spectrum.
    fn rhs_hat(&self, v: &Field2D, v_hat: &[Complex64], c: f64, chi: f64) -> Result<HatRhs, DynError> {
        let r = &*self.reference;
        let g = r.grid();
        let p = &r.spec.profile;
        let c_star = r.c_star;
        if !(c > 0.0) {
            return Err(DynError::BadSpeed(c));
        }
        let nx = g.nx();
        let ny = g.ny() as f64;
        let qc = r.profile_at(c);
        // R0 = −2Q*v + χ[−v² + (c − c*)v + 2(Q* − Q_c)v]
        let coef: Vec<f64> = p
            .q
            .values()
            .iter()
            .zip(qc.q.values())
            .map(|(qs, qcv)| -2.0 * qs + chi * ((c - c_star) + 2.0 * (qs - qcv)))
            .collect();
        let inner: Vec<f64> = v
            .values()
            .iter()
            .enumerate()
            .map(|(i, &x)| x * coef[i % nx] - chi * x * x)
            .collect();
        let mut n_hat = g.forward(&inner);
        for ((z, s), m) in n_hat.iter_mut().zip(&r.dx_sym).zip(&r.mask) {
            *z *= s * m;
        }
        // A = ∂ₓ[Q* + χ(v + Q_c − Q*)],  B = −∂_cQ* − χ(∂_cQ_c − ∂_cQ*)
        let a_prof: Vec<f64> =
            p.dq_dx.values().iter().zip(qc.dq_dx.values()).map(|(s, q)| (1.0 - chi) * s + chi * q).collect();
        let b_prof: Vec<f64> =
            p.dq_dc.values().iter().zip(qc.dq_dc.values()).map(|(s, q)| -(1.0 - chi) * s - chi * q).collect();
        let mut a_hat: Vec<Complex64> = (0..v_hat.len()).map(|i| v_hat[i] * r.dx_sym[i] * (chi * r.mask[i])).collect();
        for (z, a) in a_hat.iter_mut().zip(g.forward_x(&a_prof)) {
            *z += a * ny;
        }
        let b_hat: Vec<Complex64> = g.forward_x(&b_prof).into_iter().map(|b| b * ny).collect();

        let dot = |f: &[Complex64], px: &[Complex64]| r.dot_profile_hat(f, px);
        let r1 = -dot(v_hat, &r.g_q_x) + dot(&n_hat, &r.q_x);
        let r2 = -dot(v_hat, &r.g_dq_x) + dot(&n_hat, &r.dq_x);
        let (alpha, beta) = if chi == 0.0 {
            // c is frozen and (v, Q*) is conserved by the linear flow itself
            (-r2 / dot(&a_hat, &r.dq_x), 0.0)
        } else {
            let m = [[dot(&a_hat, &r.q_x), dot(&b_hat, &r.q_x)], [dot(&a_hat, &r.dq_x), dot(&b_hat, &r.dq_x)]];
            let cond = condition_2x2(m);
            if !(cond <= MAX_CONDITION) {
                return Err(DynError::SingularModulation { condition: cond });
            }
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let alpha = (-r1 * m[1][1] + r2 * m[0][1]) / det;
            let beta = (-r2 * m[0][0] + r1 * m[1][0]) / det;
            (alpha, beta)
        };
        for (z, a) in n_hat.iter_mut().zip(&a_hat) {
            *z += a * alpha;
        }
        for (z, b) in n_hat.iter_mut().zip(&b_hat) {
            *z += b * beta;
        }
        if n_hat.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(DynError::NonFinite);
        }
        Ok(HatRhs { n_hat, alpha, beta })
    }

    /// One step of size `dt` (negative values integrate backward).
    pub fn step(&self, s: &ModulatedState, coupling: &Coupling) -> Result<ModulatedState, DynError> {
        self.step_with_stages(s, coupling).map(|(out, _)| out)
    }

    /// One step, also returning `(c, ρ̇, ċ)` at the four Runge–Kutta stages.
    pub fn step_with_stages(
        &self,
        s: &ModulatedState,
        coupling: &Coupling,
    ) -> Result<(ModulatedState, [StageCoef; 4]), DynError> {
        let r = &*self.reference;
        let h = self.dt;
        let c0 = match coupling {
            Coupling::Linear { c0 } => *c0,
            _ => s.c,
        };
        let eval = |v: &Field2D, v_hat: &[Complex64], c: f64| -> Result<HatRhs, DynError> {
            let chi = self.chi_for(coupling, v_hat, c);
            self.rhs_hat(v, v_hat, c, chi)
        };
        let combine = |a: &[Complex64], b: &[Complex64], w: f64| -> Vec<Complex64> {
            a.iter().zip(b).map(|(x, y)| x + y * w).collect()
        };
        let vh = r.fft(&s.v);
        let k1 = eval(&s.v, &vh, c0)?;
        let ca = c0 + 0.5 * h * k1.beta;
        let va_h = self.propagate(&combine(&vh, &k1.n_hat, 0.5 * h), true);
        let k2 = eval(&r.ifft(&va_h), &va_h, ca)?;
        let cb = c0 + 0.5 * h * k2.beta;
        let eh_v = self.propagate(&vh, true);
        let vb_h = combine(&eh_v, &k2.n_hat, 0.5 * h);
        let k3 = eval(&r.ifft(&vb_h), &vb_h, cb)?;
        let cc = c0 + h * k3.beta;
        let ef_v = self.propagate(&vh, false);
        let eh_n3 = self.propagate(&k3.n_hat, true);
        let vc_h = combine(&ef_v, &eh_n3, h);
        let k4 = eval(&r.ifft(&vc_h), &vc_h, cc)?;

        let ef_n1 = self.propagate(&k1.n_hat, false);
        let n23 = combine(&k2.n_hat, &k3.n_hat, 1.0);
        let eh_n23 = self.propagate(&n23, true);
        let next: Vec<Complex64> = (0..vh.len())
            .map(|i| ef_v[i] + (ef_n1[i] + 2.0 * eh_n23[i] + k4.n_hat[i]) * (h / 6.0))
            .collect();
        let v = r.ifft(&next);
        let c = c0 + h / 6.0 * (k1.beta + 2.0 * k2.beta + 2.0 * k3.beta + k4.beta);
        let rho_dot = |k: &HatRhs, c: f64| k.alpha + c;
        let rho = s.rho
            + h / 6.0 * (rho_dot(&k1, c0) + 2.0 * rho_dot(&k2, ca) + 2.0 * rho_dot(&k3, cb) + rho_dot(&k4, cc));
        let out = ModulatedState { v, c, rho, t: s.t + h };
        if !out.is_finite() {
            return Err(DynError::NonFinite);
        }
        let coef = |k: &HatRhs, c: f64| StageCoef { c, rho_dot: k.alpha + c, c_dot: k.beta };
        Ok((out, [coef(&k1, c0), coef(&k2, ca), coef(&k3, cb), coef(&k4, cc)]))
    }

    /// `n` steps, returning every intermediate state including the first.
    pub fn trajectory(&self, s: &ModulatedState, coupling: &Coupling, n: usize) -> Result<Vec<ModulatedState>, DynError> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(s.clone());
        for _ in 0..n {
            let next = self.step(out.last().unwrap(), coupling)?;
            out.push(next);
        }
        Ok(out)
    }
}

/// `(v_t, ċ, ρ̇)` of the modulated system.
pub fn rhs_modulated(state: &ModulatedState, reference: &Arc<Reference>) -> Result<(Field2D, f64, f64), DynError> {
    let flow = ModulatedFlow::new(reference.clone(), 0.0);
    let k = flow.rhs(&state.v, state.c, 1.0)?;
    let mut coeffs = reference.fft(&state.v);
    for (z, s) in coeffs.iter_mut().zip(&reference.lin_sym) {
        *z *= s;
    }
    let mut dv = reference.ifft(&coeffs);
    dv.axpy(1.0, &k.n);
    Ok((dv, k.beta, k.alpha + state.c))
}

pub fn step_modulated(state: &ModulatedState, reference: &Arc<Reference>, dt: f64) -> Result<ModulatedState, DynError> {
    ModulatedFlow::new(reference.clone(), dt).step(state, &Coupling::Full)
}

pub fn step_localized(
    state: &ModulatedState,
    params: &CutoffParams,
    reference: &Arc<Reference>,
    dt: f64,
) -> Result<ModulatedState, DynError> {
    ModulatedFlow::new(reference.clone(), dt).step(state, &Coupling::Localized(*params))
}

pub fn step_linear(state: &ModulatedState, c0: f64, reference: &Arc<Reference>, dt: f64) -> Result<ModulatedState, DynError> {
    ModulatedFlow::new(reference.clone(), dt).step(state, &Coupling::Linear { c0 })
}
