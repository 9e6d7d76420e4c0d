use zk_decomp::{fit_modulation, Decomposer, FitOptions};
use zk_dynamics::ModulatedState;
use zk_grid::Field2D;

use crate::ManifoldError;

/// `‖P₊v(t)‖_E` at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthSample {
    pub t: f64,
    pub plus_norm: f64,
}

/// Range of `‖P₊v‖_E` used by the fit: above roundoff, below the nonlinear regime.
pub const GROWTH_WINDOW: (f64, f64) = (1e-6, 1e-2);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthFit {
    pub rate: f64,
    pub intercept: f64,
    pub points: usize,
    pub t_first: f64,
    pub t_last: f64,
}

/// `‖P₊v‖_E`, the Euclidean norm of the unstable coordinates.
pub fn plus_norm(v: &Field2D, dec: &Decomposer) -> Result<f64, ManifoldError> {
    let d = dec.decompose(v)?;
    Ok(d.lambda_plus.iter().flat_map(|p| p.iter()).map(|x| x * x).sum::<f64>().sqrt())
}

pub fn samples_from_states(states: &[ModulatedState], dec: &Decomposer) -> Result<Vec<GrowthSample>, ManifoldError> {
    states
        .iter()
        .map(|s| Ok(GrowthSample { t: s.t, plus_norm: plus_norm(&s.v, dec)? }))
        .collect()
}

/// Fits the modulation parameters of each full-equation snapshot, warm
/// started from the previous fit, and measures the unstable part of the
/// fitted perturbation.
pub fn samples_from_fields(
    snapshots: &[(f64, Field2D)],
    dec: &Decomposer,
    c_guess: f64,
    rho_guess: f64,
) -> Result<Vec<GrowthSample>, ManifoldError> {
    let profile = &dec.spectral().profile;
    let (mut c, mut rho) = (c_guess, rho_guess);
    let mut out = Vec::with_capacity(snapshots.len());
    for (t, u) in snapshots {
        let fit = fit_modulation(u, profile, c, rho, &FitOptions::default())?;
        c = fit.c;
        rho = fit.rho;
        out.push(GrowthSample { t: *t, plus_norm: plus_norm(&fit.v, dec)? });
    }
    Ok(out)
}

/// Least-squares slope of `log ‖P₊v‖_E` against `t` over the samples that
/// fall inside [`GROWTH_WINDOW`].
pub fn measure_growth(samples: &[GrowthSample]) -> Result<GrowthFit, ManifoldError> {
    measure_growth_in(samples, GROWTH_WINDOW)
}

pub fn measure_growth_in(samples: &[GrowthSample], window: (f64, f64)) -> Result<GrowthFit, ManifoldError> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.plus_norm > window.0 && s.plus_norm < window.1)
        .map(|s| (s.t, s.plus_norm.ln()))
        .collect();
    let distinct = pts.first().is_some_and(|p| pts.iter().any(|q| q.0 != p.0));
    if pts.len() < 2 || !distinct {
        return Err(ManifoldError::EmptyWindow { points: pts.len() });
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let rate = sxy / sxx;
    Ok(GrowthFit {
        rate,
        intercept: ym - rate * tm,
        points: pts.len(),
        t_first: pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        t_last: pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    })
}
