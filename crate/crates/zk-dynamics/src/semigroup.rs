use std::sync::Arc;

use zk_decomp::{Decomposer, Projection};
use zk_grid::{Complex64, Field2D};

use crate::etd::Etdrk4;
use crate::modulated::ModulatedState;
use crate::reference::Reference;
use crate::DynError;

/// `e^{t𝒜}` for the generator of the linear system.
///
/// On the span of the eigenfields and of `∂ₓQ`, `∂_cQ` the action is exact;
/// the remainder is integrated by ETDRK4 and projected back onto the
/// remainder subspace.
#[derive(Clone, Debug)]
pub struct Semigroup {
    reference: Arc<Reference>,
    decomposer: Decomposer,
    /// Largest ETDRK4 step used on the remainder.
    pub dt_max: f64,
}

impl Semigroup {
    pub fn new(reference: Arc<Reference>) -> Self {
        let decomposer = Decomposer::new(reference.spec.clone());
        Semigroup { reference, decomposer, dt_max: 0.01 }
    }

    pub fn decomposer(&self) -> &Decomposer {
        &self.decomposer
    }

    fn gamma_nonlinear(&self, vh: &[Complex64]) -> Result<Vec<Complex64>, DynError> {
        let r = &*self.reference;
        let v = r.ifft(vh);
        let mut n = r.ddx_dealiased(&v.mul_profile(&r.spec.profile.q)).scaled(-2.0);
        n.axpy(v.dot(&r.alpha_lin), &r.dq);
        Ok(r.fft(&n))
    }

    fn evolve_gamma(&self, gamma: &Field2D, t: f64) -> Result<Field2D, DynError> {
        if t == 0.0 {
            return Ok(gamma.clone());
        }
        let steps = (t.abs() / self.dt_max).ceil().max(1.0) as usize;
        let scheme = Etdrk4::new(&self.reference.lin_sym, t / steps as f64);
        let mut gh = self.reference.fft(gamma);
        for _ in 0..steps {
            gh = scheme.step(&gh, |v| self.gamma_nonlinear(v))?;
        }
        Ok(self.decomposer.project(&self.reference.ifft(&gh), Projection::Gamma)?)
    }

    pub fn apply(&self, v: &Field2D, t: f64) -> Result<Field2D, DynError> {
        let mut d = self.decomposer.decompose(v)?;
        for (mode, (p, m)) in self.reference.spec.modes.iter().zip(d.lambda_plus.iter_mut().zip(d.lambda_minus.iter_mut())) {
            let grow = (mode.lambda * t).exp();
            for j in 0..2 {
                p[j] *= grow;
                m[j] /= grow;
            }
        }
        let mut out = self.decomposer.assemble(&d, Projection::D);
        out.axpy(1.0, &self.evolve_gamma(&d.gamma, t)?);
        Ok(out)
    }
}

pub fn apply_semigroup(v: &Field2D, t: f64, reference: &Arc<Reference>) -> Result<Field2D, DynError> {
    Semigroup::new(reference.clone()).apply(v, t)
}

/// Largest deviations from the conserved quantities of the linear system.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConservationReport {
    pub gamma_energy_drift: f64,
    pub q_pairing_drift: f64,
    pub dq_pairing_drift: f64,
}

/// `max_t |‖P_γv(t)‖_E − ‖P_γv(0)‖_E|`, `max_t |(v(t) − v(0), Q)|`,
/// `max_t |(v(t) − v(0), ∂ₓQ)|` along a trajectory of the linear system.
pub fn conservation_report(traj: &[ModulatedState], decomposer: &Decomposer) -> Result<ConservationReport, DynError> {
    let Some(first) = traj.first() else {
        return Ok(ConservationReport::default());
    };
    let p = &decomposer.spectral().profile;
    let q = p.q_2d();
    let dq = p.dq_dx_2d();
    let measure = |s: &ModulatedState| -> Result<(f64, f64, f64), DynError> {
        let d = decomposer.decompose(&s.v)?;
        Ok((d.gamma_energy(decomposer), s.v.dot(&q), s.v.dot(&dq)))
    };
    let base = measure(first)?;
    let mut rep = ConservationReport::default();
    for s in &traj[1..] {
        let m = measure(s)?;
        rep.gamma_energy_drift = rep.gamma_energy_drift.max((m.0 - base.0).abs());
        rep.q_pairing_drift = rep.q_pairing_drift.max((m.1 - base.1).abs());
        rep.dq_pairing_drift = rep.dq_pairing_drift.max((m.2 - base.2).abs());
    }
    Ok(rep)
}
