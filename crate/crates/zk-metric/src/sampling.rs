use std::sync::Arc;

use rand::Rng;
use zk_grid::{h1_norm, Field2D, Grid2D};

/// A perturbation `v` and speed `c`.
#[derive(Clone, Debug)]
pub struct TubeState {
    pub v: Field2D,
    pub c: f64,
}

fn random_field<R: Rng + ?Sized>(rng: &mut R, grid: &Arc<Grid2D>) -> Field2D {
    let bumps: Vec<(f64, f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(-1.0..1.0),
                rng.random_range(-6.0..6.0),
                rng.random_range(1.0..3.0),
                rng.random_range(0..3) as f64,
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let l = grid.torus_scale();
    Field2D::from_fn(grid, |x, y| {
        bumps
            .iter()
            .map(|&(a, x0, w, n, ph)| a * (-((x - x0) / w).powi(2)).exp() * (n * y / l + ph).cos())
            .sum()
    })
    .dealiased()
}

/// Random smooth localized `v` with `‖v‖_{H¹}` uniform in `[0.2, 1]·radius`
/// and `|log c − log c*| ≤ radius`.
pub fn random_tube_state<R: Rng + ?Sized>(rng: &mut R, grid: &Arc<Grid2D>, c_star: f64, radius: f64) -> TubeState {
    let f = random_field(rng, grid);
    let target = radius * rng.random_range(0.2..1.0);
    let v = f.scaled(target / h1_norm(&f));
    let c = c_star * (radius * rng.random_range(-1.0..1.0)).exp();
    TubeState { v, c }
}

/// Three tube states. Half of the draws are independent; the other half
/// are shifted copies of one state with a small independent perturbation,
/// so that the shift infimum is exercised away from `q = 0`.
pub fn random_tube_triple<R: Rng + ?Sized>(rng: &mut R, grid: &Arc<Grid2D>, c_star: f64, radius: f64) -> [TubeState; 3] {
    if rng.random_bool(0.5) {
        return [
            random_tube_state(rng, grid, c_star, radius),
            random_tube_state(rng, grid, c_star, radius),
            random_tube_state(rng, grid, c_star, radius),
        ];
    }
    let base = random_tube_state(rng, grid, c_star, radius);
    let mut shifted = || {
        let q = rng.random_range(-1.0..1.0);
        let noise = random_tube_state(rng, grid, c_star, 0.1 * radius);
        let mut v = base.v.translate(q);
        v.axpy(1.0, &noise.v);
        TubeState { v, c: base.c * (noise.c / c_star) }
    };
    let b = shifted();
    let c = shifted();
    [base, b, c]
}
