use std::sync::Arc;

use zk_grid::Field2D;

use crate::modulated::{Coupling, CutoffParams, ModulatedFlow, ModulatedState};
use crate::reference::Reference;
use crate::semigroup::Semigroup;
use crate::DynError;

/// Ratios measured along a localized-flow solution over `|t| ≤ T*`:
/// `sup‖v(t)‖_E / ‖v(0)‖_E`,
/// `sup‖P_d(v(t) − e^{t𝒜}v(0))‖_E / m²` and
/// `sup|‖P_γv(t)‖²_E − ‖P_γv(0)‖²_E| / m³` with `m = min(‖v(0)‖_E, δ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalizedEstimates {
    pub norm_ratio: f64,
    pub duhamel_constant: f64,
    pub gamma_constant: f64,
}

pub fn localized_estimates(
    s0: &ModulatedState,
    params: &CutoffParams,
    reference: &Arc<Reference>,
    t_star: f64,
    dt: f64,
) -> Result<LocalizedEstimates, DynError> {
    let sg = Semigroup::new(reference.clone());
    let dec = sg.decomposer();
    let coupling = Coupling::Localized(*params);
    let d0 = dec.decompose(&s0.v)?;
    let e0 = dec.energy_norm_sq_parts(&d0, 1.0)?.sqrt();
    let g0 = dec.gamma_form(&d0.gamma);
    let m = e0.min(params.delta);
    let steps = (t_star / dt).round().max(1.0) as usize;
    let (mut norm_ratio, mut duhamel, mut gamma): (f64, f64, f64) = (1.0, 0.0, 0.0);
    for dir in [1.0, -1.0] {
        let flow = ModulatedFlow::new(reference.clone(), dir * dt);
        let mut s = s0.clone();
        let mut lin = s0.v.clone();
        for _ in 0..steps {
            s = flow.step(&s, &coupling)?;
            lin = sg.apply(&lin, dir * dt)?;
            let d = dec.decompose(&s.v)?;
            norm_ratio = norm_ratio.max(dec.energy_norm_sq_parts(&d, 1.0)?.sqrt() / e0);
            gamma = gamma.max((dec.gamma_form(&d.gamma) - g0).abs());
            let mut pd = dec.decompose(&(&s.v - &lin))?;
            pd.gamma = Field2D::zeros(s.v.grid());
            duhamel = duhamel.max(dec.energy_norm_sq_parts(&pd, 1.0)?.sqrt());
        }
    }
    Ok(LocalizedEstimates { norm_ratio, duhamel_constant: duhamel / (m * m), gamma_constant: gamma / (m * m * m) })
}
