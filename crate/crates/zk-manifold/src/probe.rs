use rand::Rng;
use zk_grid::Field2D;
use zk_metric::{random_tube_state, MobileMetric, MobileParams};

use crate::shoot::{admissible_part, shoot_graph, ShootConfig, ShootContext, ShootResult};
use crate::ManifoldError;

/// Random admissible `(w, c)` with `‖w‖_E + |log c − log c*| = radius`, the
/// split between the two terms drawn uniformly from `[1/2, 1]`.
pub fn random_graph_point<R: Rng + ?Sized>(
    rng: &mut R,
    ctx: &ShootContext,
    radius: f64,
    cfg: &ShootConfig,
) -> Result<(Field2D, f64), ManifoldError> {
    let dec = ctx.decomposer();
    let raw = random_tube_state(rng, dec.grid(), ctx.c_star(), 1.0).v;
    let w = admissible_part(&raw, ctx, cfg.direction)?;
    let share = rng.random_range(0.5..1.0);
    let w = w.scaled(share * radius / dec.energy_norm(&w)?);
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let c = ctx.c_star() * (sign * (1.0 - share) * radius).exp();
    Ok((w, c))
}

#[derive(Clone, Debug)]
pub struct LipschitzProbe {
    /// `max ‖a(w₀, c₀) − a(w₁, c₁)‖ / 𝔪_δ` over the admitted pairs.
    pub value: f64,
    pub pairs: usize,
    pub shots: Vec<ShootResult>,
}

/// Shoots `n_samples` random points at `radius` and compares every pair of
/// graph values with the mobile distance of the inputs, `δ = cfg.delta`.
/// Pairs at distance zero are skipped.
pub fn lipschitz_probe<R: Rng + ?Sized>(
    rng: &mut R,
    n_samples: usize,
    radius: f64,
    cfg: &ShootConfig,
    ctx: &ShootContext,
) -> Result<LipschitzProbe, ManifoldError> {
    if n_samples < 10 {
        return Err(ManifoldError::TooFewSamples(n_samples));
    }
    let metric = MobileMetric::new(ctx.decomposer().clone(), MobileParams::new(cfg.delta)?);
    let mut points = Vec::with_capacity(n_samples);
    let mut shots = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let (w, c) = random_graph_point(rng, ctx, radius, cfg)?;
        shots.push(shoot_graph(&w, c, cfg, ctx)?);
        points.push(metric.prepare(&w, c)?);
    }
    let (mut value, mut pairs) = (0.0f64, 0usize);
    for i in 0..n_samples {
        for j in i + 1..n_samples {
            let m = metric.distance_prepared(&points[i], &points[j])?.value;
            if !(m > 1e-14) {
                continue;
            }
            let da = shots[i].a_plus.iter().zip(&shots[j].a_plus).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            value = value.max(da / m);
            pairs += 1;
        }
    }
    Ok(LipschitzProbe { value, pairs, shots })
}
