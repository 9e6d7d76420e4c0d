use zk_grid::{h1_norm, Complex64, Field2D};

use crate::modulated::{Coupling, ModulatedFlow, ModulatedState, StageCoef};
use crate::DynError;

/// Stage-resolved modulation parameters of a reference solution, recorded
/// with the same step that the tangent flow will use.
#[derive(Clone, Debug)]
pub struct ReferenceTrajectory {
    pub dt: f64,
    pub t0: f64,
    pub stages: Vec<[StageCoef; 4]>,
    /// States at the step times, `stages.len() + 1` of them.
    pub states: Vec<ModulatedState>,
}

impl ReferenceTrajectory {
    pub fn record(flow: &ModulatedFlow, s0: &ModulatedState, coupling: &Coupling, steps: usize) -> Result<Self, DynError> {
        let mut stages = Vec::with_capacity(steps);
        let mut states = Vec::with_capacity(steps + 1);
        states.push(s0.clone());
        for _ in 0..steps {
            let (next, coef) = flow.step_with_stages(states.last().unwrap(), coupling)?;
            stages.push(coef);
            states.push(next);
        }
        Ok(ReferenceTrajectory { dt: flow.dt(), t0: s0.t, stages, states })
    }

    pub fn steps(&self) -> usize {
        self.stages.len()
    }
}

/// Perturbation `η` along a reference trajectory, with speed offset `a1`.
/// `base` is the member of the perturbed family at zero offset, advanced in
/// lockstep so that its stage values feed the linearization.
#[derive(Clone, Debug)]
pub struct TangentState {
    pub eta: Field2D,
    pub a1: f64,
    pub base: Field2D,
    pub step: usize,
}

impl TangentState {
    pub fn new(eta: Field2D, a1: f64, traj: &ReferenceTrajectory) -> Self {
        TangentState { eta, a1, base: traj.states[0].v.clone(), step: 0 }
    }
    pub fn t(&self, traj: &ReferenceTrajectory) -> f64 {
        traj.t0 + self.step as f64 * traj.dt
    }
}

/// Right-hand side (non-stiff part) of the `v`-equation with prescribed
/// `(c, ρ̇, ċ)`, the speed shifted by `shift`.
fn prescribed_rhs(flow: &ModulatedFlow, v: &Field2D, coef: &StageCoef, shift: f64) -> Field2D {
    let r = flow.reference();
    let c = coef.c + shift;
    let qc = zk_soliton::SolitonProfile::sample_unchecked(c, r.grid());
    // (ρ̇ − c*)∂ₓv − 2∂ₓ(Q_c v) − ∂ₓP(v²) + (ρ̇ − c)∂ₓQ_c − ċ∂_cQ_c
    let mut lin = v.scaled(coef.rho_dot - r.c_star);
    lin.axpy(-2.0, &v.mul_profile(&qc.q));
    let mut n = r.ddx_dealiased(&lin);
    n.axpy(-1.0, &r.ddx_dealiased(&v.mul_pointwise(v)));
    let mut prof = qc.dq_dx.scaled(coef.rho_dot - c);
    prof.axpy(-coef.c_dot, &qc.dq_dc);
    n.axpy(1.0, &Field2D::from_profile(&prof));
    n
}

/// Derivative of [`prescribed_rhs`] at `(v0, shift = 0)` in the direction `(η, a1)`.
fn tangent_rhs(flow: &ModulatedFlow, eta: &Field2D, a1: f64, v0: &Field2D, coef: &StageCoef) -> Field2D {
    let r = flow.reference();
    let c0 = coef.c;
    let qc = zk_soliton::SolitonProfile::sample_unchecked(c0, r.grid());
    let mut lin = eta.scaled(coef.rho_dot - r.c_star);
    lin.axpy(-2.0, &eta.mul_profile(&qc.q));
    lin.axpy(-2.0 * a1, &v0.mul_profile(&qc.dq_dc));
    let mut n = r.ddx_dealiased(&lin);
    n.axpy(-2.0, &r.ddx_dealiased(&v0.mul_pointwise(eta)));
    let mut prof = qc.dq_dx.scaled(-a1);
    prof.axpy(a1 * (coef.rho_dot - c0), &r.d2q_dxdc(c0));
    prof.axpy(-coef.c_dot * a1, &r.d2q_dc2(c0));
    n.axpy(1.0, &Field2D::from_profile(&prof));
    n
}

/// Integrating-factor RK4 over several coupled fields sharing the stiff part.
fn if_rk4<F>(flow: &ModulatedFlow, fields: &[Field2D], mut rhs: F) -> Result<Vec<Field2D>, DynError>
where
    F: FnMut(usize, &[Field2D]) -> Vec<Field2D>,
{
    let r = flow.reference();
    let h = flow.dt();
    let k = fields.len();
    let add = |a: &[Complex64], b: &[Complex64], s: f64| -> Vec<Complex64> { a.iter().zip(b).map(|(x, y)| x + y * s).collect() };
    let vh: Vec<Vec<Complex64>> = fields.iter().map(|f| r.fft(f)).collect();
    let to_hat = |fs: Vec<Field2D>| -> Vec<Vec<Complex64>> { fs.iter().map(|f| r.fft(f)).collect() };

    let n1 = to_hat(rhs(0, fields));
    let sa: Vec<Field2D> = (0..k).map(|i| r.ifft(&flow.propagate(&add(&vh[i], &n1[i], 0.5 * h), true))).collect();
    let n2 = to_hat(rhs(1, &sa));
    let eh: Vec<Vec<Complex64>> = vh.iter().map(|v| flow.propagate(v, true)).collect();
    let sb: Vec<Field2D> = (0..k).map(|i| r.ifft(&add(&eh[i], &n2[i], 0.5 * h))).collect();
    let n3 = to_hat(rhs(2, &sb));
    let ef: Vec<Vec<Complex64>> = vh.iter().map(|v| flow.propagate(v, false)).collect();
    let sc: Vec<Field2D> = (0..k).map(|i| r.ifft(&add(&ef[i], &flow.propagate(&n3[i], true), h))).collect();
    let n4 = to_hat(rhs(3, &sc));
    let out = (0..k)
        .map(|i| {
            let ef_n1 = flow.propagate(&n1[i], false);
            let n23 = add(&n2[i], &n3[i], 1.0);
            let eh_n23 = flow.propagate(&n23, true);
            let next: Vec<Complex64> = (0..ef[i].len())
                .map(|m| ef[i][m] + (ef_n1[m] + 2.0 * eh_n23[m] + n4[i][m]) * (h / 6.0))
                .collect();
            r.ifft(&next)
        })
        .collect::<Vec<_>>();
    if out.iter().any(|f| !f.is_finite()) {
        return Err(DynError::NonFinite);
    }
    Ok(out)
}

/// One step of the perturbed family: `v` with speed `c + shift` and the
/// reference `ρ̇`, `ċ` of step `step`.
pub fn step_prescribed(
    flow: &ModulatedFlow,
    v: &Field2D,
    shift: f64,
    traj: &ReferenceTrajectory,
    step: usize,
) -> Result<Field2D, DynError> {
    let coefs = traj.stages.get(step).ok_or(DynError::TrajectoryMismatch { step, available: traj.steps() })?;
    check_dt(flow, traj)?;
    let mut out = if_rk4(flow, std::slice::from_ref(v), |i, s| vec![prescribed_rhs(flow, &s[0], &coefs[i], shift)])?;
    Ok(out.remove(0))
}

fn check_dt(flow: &ModulatedFlow, traj: &ReferenceTrajectory) -> Result<(), DynError> {
    if flow.dt() != traj.dt {
        return Err(DynError::StepMismatch { flow: flow.dt(), trajectory: traj.dt });
    }
    Ok(())
}

/// One step of the tangent equation together with its base solution.
pub fn step_tangent(flow: &ModulatedFlow, ts: &TangentState, traj: &ReferenceTrajectory) -> Result<TangentState, DynError> {
    let coefs = traj
        .stages
        .get(ts.step)
        .ok_or(DynError::TrajectoryMismatch { step: ts.step, available: traj.steps() })?;
    check_dt(flow, traj)?;
    let a1 = ts.a1;
    let mut out = if_rk4(flow, &[ts.base.clone(), ts.eta.clone()], |i, s| {
        vec![prescribed_rhs(flow, &s[0], &coefs[i], 0.0), tangent_rhs(flow, &s[1], a1, &s[0], &coefs[i])]
    })?;
    let eta = out.pop().unwrap();
    let base = out.pop().unwrap();
    Ok(TangentState { eta, a1, base, step: ts.step + 1 })
}

/// `‖(w_h − w_0)/h − η‖_{H¹}` at the end of the trajectory, for each `h`,
/// where `w_h` starts from `v(0) + h η(0)` with speed offset `h a1`.
pub fn directional_derivative_errors(
    flow: &ModulatedFlow,
    traj: &ReferenceTrajectory,
    eta0: &Field2D,
    a1: f64,
    hs: &[f64],
) -> Result<Vec<f64>, DynError> {
    let mut ts = TangentState::new(eta0.clone(), a1, traj);
    for _ in 0..traj.steps() {
        ts = step_tangent(flow, &ts, traj)?;
    }
    let v0 = &traj.states[0].v;
    hs.iter()
        .map(|&h| {
            let mut w = v0.clone();
            w.axpy(h, eta0);
            for n in 0..traj.steps() {
                w = step_prescribed(flow, &w, h * a1, traj, n)?;
            }
            let mut diff = (&w - &ts.base).scaled(1.0 / h);
            diff.axpy(-1.0, &ts.eta);
            Ok(h1_norm(&diff))
        })
        .collect()
}
