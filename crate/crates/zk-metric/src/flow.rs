use std::sync::Arc;

use zk_dynamics::{Coupling, CutoffParams, ModulatedFlow, ModulatedState, Reference, Semigroup};
use zk_grid::Field2D;

use crate::{MetricError, MobileMetric, Prepared};

/// Time window and resolution for comparing two localized-flow solutions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowProbe {
    pub t_star: f64,
    pub dt: f64,
    /// Number of sampled times on each side of `t = 0`.
    pub samples: usize,
}

impl Default for FlowProbe {
    fn default() -> Self {
        FlowProbe { t_star: 1.0, dt: 1e-2, samples: 10 }
    }
}

/// `sup_{|t|≤T*} 𝔪(t)/𝔪(0)`, and the drift
/// `sup_t ‖P_d(v₀(t) − v₁(t) − e^{t𝒜}(v₀(0) − v₁(0)))‖_E + |S(t) − S(0)|`
/// with `S` the square root of the shift infimum, also relative to
/// `δ^{1/4}𝔪(0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowCompatibility {
    pub m0: f64,
    pub sup_ratio: f64,
    pub drift: f64,
    pub drift_constant: f64,
}

fn d_part(metric: &MobileMetric, w: &Field2D) -> Result<f64, MetricError> {
    let d = metric.decomposer().decompose(w)?;
    let mut g = d.clone();
    g.gamma = Field2D::zeros(w.grid());
    Ok(metric.decomposer().energy_norm_sq_parts(&g, 1.0)?.sqrt())
}

/// Evolves both states under the localized flow with cutoff radius
/// `metric.params.delta`, forward and backward in time.
pub fn flow_compatibility(
    s0: &ModulatedState,
    s1: &ModulatedState,
    metric: &MobileMetric,
    reference: &Arc<Reference>,
    probe: &FlowProbe,
) -> Result<FlowCompatibility, MetricError> {
    let coupling = Coupling::Localized(CutoffParams { delta: metric.params.delta });
    let semigroup = Semigroup::new(reference.clone());
    let prep = |s: &ModulatedState| -> Result<Prepared, MetricError> { metric.prepare(&s.v, s.c) };
    let (p0, p1) = (prep(s0)?, prep(s1)?);
    let m0 = metric.distance_prepared(&p0, &p1)?.value;
    let shift0 = metric.shift_part(&p0, &p1)?;
    let w0 = &s0.v - &s1.v;

    let steps = (probe.t_star / probe.dt).round().max(1.0) as usize;
    let per_sample = (steps / probe.samples.max(1)).max(1);
    let (mut sup_m, mut drift): (f64, f64) = (m0, 0.0);
    for dir in [1.0, -1.0] {
        let flow = ModulatedFlow::new(reference.clone(), dir * probe.dt);
        let (mut a, mut b) = (s0.clone(), s1.clone());
        let mut lin = w0.clone();
        let mut n = 0;
        while n < steps {
            let chunk = per_sample.min(steps - n);
            for _ in 0..chunk {
                a = flow.step(&a, &coupling)?;
                b = flow.step(&b, &coupling)?;
            }
            lin = semigroup.apply(&lin, dir * probe.dt * chunk as f64)?;
            n += chunk;
            let (pa, pb) = (prep(&a)?, prep(&b)?);
            sup_m = sup_m.max(metric.distance_prepared(&pa, &pb)?.value);
            let mut diff = &a.v - &b.v;
            diff.axpy(-1.0, &lin);
            let shift = metric.shift_part(&pa, &pb)?;
            drift = drift.max(d_part(metric, &diff)? + (shift - shift0).abs());
        }
    }
    let scale = metric.params.delta.powf(0.25) * m0;
    Ok(FlowCompatibility { m0, sup_ratio: sup_m / m0, drift, drift_constant: drift / scale })
}
