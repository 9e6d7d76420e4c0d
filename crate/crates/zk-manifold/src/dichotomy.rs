use zk_decomp::Decomposer;
use zk_dynamics::{step_tangent, ModulatedFlow, ReferenceTrajectory, TangentState};
use zk_grid::{h1_norm, Field2D};

use crate::ManifoldError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Classification {
    /// The trigger held first at `t0`.
    Growth { t0: f64 },
    /// The trigger never held on the window.
    Bounded,
}

/// Tangent-flow behavior along a reference trajectory, judged by the
/// trigger `K₀κ^{1/3}(‖P_{≤0}η‖_{E_{κ^{1/3}}} + |a₁|) < ‖P₊η‖_E`.
#[derive(Clone, Debug, PartialEq)]
pub struct DichotomyReport {
    pub classification: Classification,
    /// Largest rate `λ_k`, used as `k*` in the growth display.
    pub k_star: f64,
    /// `min LHS/RHS` of `3‖P₊η(t)‖ > e^{k*(t−t0)/2}(‖P₊η(t0)‖ + K₀κ^{1/3}(‖P_{≤0}η(t)‖ + |a₁|))`
    /// over `t ≥ t0 + 1/2`; `None` when the window ends earlier.
    pub growth_margin: Option<f64>,
    /// `max ‖P₊η‖ / (κ^{1/3}(‖P_{≤0}η‖ + |a₁|))` before the trigger (or on the whole window).
    pub plus_ratio: f64,
    /// Smallest `K₁ ≥ 0` with `‖P_{≤0}η(t)‖ + |a₁| ≤ e^{K₁κ^{1/6}t}(‖P_{≤0}η(0)‖ + |a₁|)`.
    pub k1: f64,
    /// `sup (‖v‖_{H¹} + |c − c*|)` of the reference trajectory.
    pub tube_sup: f64,
    /// `(t, ‖P₊η‖_E, ‖P_{≤0}η‖_{E_{κ^{1/3}}})` at every step.
    pub history: Vec<(f64, f64, f64)>,
}

impl DichotomyReport {
    pub fn growth_verified(&self) -> Option<bool> {
        self.growth_margin.map(|m| m > 1.0)
    }
    pub fn bounded_verified(&self) -> bool {
        matches!(self.classification, Classification::Bounded) && self.plus_ratio.is_finite() && self.k1.is_finite()
    }
}

fn split_norms(eta: &Field2D, dec: &Decomposer, kappa13: f64) -> Result<(f64, f64), ManifoldError> {
    let mut d = dec.decompose(eta)?;
    let plus = d.lambda_plus.iter().flat_map(|p| p.iter()).map(|x| x * x).sum::<f64>().sqrt();
    d.lambda_plus.iter_mut().for_each(|p| *p = [0.0; 2]);
    Ok((plus, dec.energy_norm_sq_parts(&d, kappa13)?.sqrt()))
}

/// Evolves the tangent equation from `(eta0, a1)` along `traj` and
/// classifies the solution.
pub fn tangent_dichotomy(
    eta0: &Field2D,
    a1: f64,
    flow: &ModulatedFlow,
    traj: &ReferenceTrajectory,
    kappa: f64,
    k0: f64,
    dec: &Decomposer,
) -> Result<DichotomyReport, ManifoldError> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(ManifoldError::BadRadius(kappa));
    }
    let k_star = dec.spectral().f_modes.iter().map(|f| f.lambda).fold(0.0, f64::max);
    let c_star = dec.c_star();
    let tube_sup = traj.states.iter().map(|s| h1_norm(&s.v) + (s.c - c_star).abs()).fold(0.0, f64::max);
    let k13 = kappa.cbrt();
    let mut ts = TangentState::new(eta0.clone(), a1, traj);
    let mut history = Vec::with_capacity(traj.steps() + 1);
    let (p, z) = split_norms(&ts.eta, dec, k13)?;
    history.push((ts.t(traj), p, z));
    for _ in 0..traj.steps() {
        ts = step_tangent(flow, &ts, traj).map_err(|source| ManifoldError::Flow { t: ts.t(traj), source })?;
        let (p, z) = split_norms(&ts.eta, dec, k13)?;
        history.push((ts.t(traj), p, z));
    }

    let lower = |z: f64| k0 * k13 * (z + a1.abs());
    let trigger = history.iter().position(|&(_, p, z)| lower(z) < p);
    let (t_start, z0) = (history[0].0, history[0].2);
    let before = &history[..trigger.unwrap_or(history.len())];
    let plus_ratio = before
        .iter()
        .map(|&(_, p, z)| if p == 0.0 { 0.0 } else { p / (k13 * (z + a1.abs())) })
        .fold(0.0, f64::max);
    let base = z0 + a1.abs();
    let k1 = before
        .iter()
        .filter(|h| h.0 > t_start && base > 0.0)
        .map(|&(t, _, z)| ((z + a1.abs()) / base).ln() / (kappa.powf(1.0 / 6.0) * (t - t_start)))
        .fold(0.0, f64::max);

    let (classification, growth_margin) = match trigger {
        None => (Classification::Bounded, None),
        Some(i) => {
            let (t0, p0, _) = history[i];
            let margin = history[i..]
                .iter()
                .filter(|h| h.0 >= t0 + 0.5 - 1e-12)
                .map(|&(t, p, z)| 3.0 * p / ((0.5 * k_star * (t - t0)).exp() * (p0 + lower(z))))
                .reduce(f64::min);
            (Classification::Growth { t0 }, margin)
        }
    };
    Ok(DichotomyReport { classification, k_star, growth_margin, plus_ratio, k1, tube_sup, history })
}
