use std::sync::Arc;

use zk_decomp::{Decomposer, Projection};
use zk_dynamics::{Coupling, CutoffParams, ModulatedFlow, ModulatedState, Reference};
use zk_grid::Field2D;
use zk_soliton::SolitonProfile;
use zk_spectral::SpectralData;

use crate::growth::GrowthSample;
use crate::tube::Tube;
use crate::ManifoldError;

/// Which invariant graph is approximated: data whose forward orbit stays
/// near the soliton (unknowns on `F⁺`), or whose backward orbit does
/// (unknowns on `F⁻`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShootConfig {
    /// Radius of the `H¹` tube around `{τ_qQ_{c*}}`.
    pub epsilon: f64,
    /// Cutoff radius of the localized system that is integrated.
    pub delta: f64,
    /// Horizon; `None` means `30 / λ_min`.
    pub t_max: Option<f64>,
    pub dt: f64,
    /// Steps between tube checks and growth samples.
    pub check_every: usize,
    /// The discriminant is read when the unknown-direction coordinates first
    /// reach this fraction of `epsilon` in norm.
    pub soft_fraction: f64,
    pub bracket_tol: f64,
    /// Iteration stops once a correction is below this size.
    pub stall_tol: f64,
    pub max_iter: usize,
    /// Admissible `‖w‖_E + |log c − log c*|` as a fraction of `epsilon`.
    pub radius_fraction: f64,
    pub direction: Direction,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig {
            epsilon: 1e-2,
            delta: 1e-2,
            t_max: None,
            dt: 2.5e-2,
            check_every: 20,
            soft_fraction: 0.1,
            bracket_tol: 1e-10,
            stall_tol: 1e-19,
            max_iter: 40,
            radius_fraction: 0.5,
            direction: Direction::Forward,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShootResult {
    /// Coefficients on `F_k^{±,j}`, ordered `(k, j)` lexicographically.
    pub a_plus: Vec<f64>,
    pub persist_time: f64,
    pub converged: bool,
    /// Size (max norm) of the last accepted correction.
    pub bracket_width: f64,
    pub iterations: usize,
    /// Discriminant `Λ e^{−λ|t|}` of the final trajectory.
    pub discriminant: Vec<f64>,
}

/// Outcome of integrating one candidate initial state.
#[derive(Clone, Debug)]
pub struct Persistence {
    /// Time spent in the tube, at most the horizon.
    pub time: f64,
    pub exited: bool,
    pub discriminant: Vec<f64>,
    /// Norm of the unknown-direction coordinates at every check.
    pub samples: Vec<GrowthSample>,
    pub final_state: ModulatedState,
}

/// Reference data shared by all shooting runs around one soliton.
#[derive(Clone, Debug)]
pub struct ShootContext {
    reference: Arc<Reference>,
    dec: Decomposer,
    tube: Tube,
    lambdas: Vec<f64>,
    plus: Vec<Field2D>,
    minus: Vec<Field2D>,
}

impl ShootContext {
    pub fn new(spec: Arc<SpectralData>) -> Result<Self, ManifoldError> {
        if spec.is_stable() {
            return Err(ManifoldError::NoUnstableModes);
        }
        let mut modes: Vec<_> = spec.f_modes.iter().collect();
        modes.sort_by_key(|f| (f.k, f.j));
        let lambdas = modes.iter().map(|f| f.lambda).collect();
        let plus = modes.iter().map(|f| f.plus.clone()).collect();
        let minus = modes.iter().map(|f| f.minus.clone()).collect();
        let tube = Tube::new(spec.grid(), spec.c_star)?;
        let dec = Decomposer::new(spec.clone());
        Ok(ShootContext { reference: Arc::new(Reference::new(spec)), dec, tube, lambdas, plus, minus })
    }

    pub fn decomposer(&self) -> &Decomposer {
        &self.dec
    }
    pub fn reference(&self) -> &Arc<Reference> {
        &self.reference
    }
    pub fn tube(&self) -> &Tube {
        &self.tube
    }
    pub fn c_star(&self) -> f64 {
        self.reference.c_star
    }
    /// `λ` of each unknown direction, in coefficient order.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }
    pub fn lambda_min(&self) -> f64 {
        self.lambdas.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn t_max(&self, cfg: &ShootConfig) -> f64 {
        cfg.t_max.unwrap_or(30.0 / self.lambda_min())
    }
    pub fn directions(&self, dir: Direction) -> &[Field2D] {
        match dir {
            Direction::Forward => &self.plus,
            Direction::Backward => &self.minus,
        }
    }

    /// Coordinates of `v` along the unknown directions.
    pub fn coordinates(&self, v: &Field2D, dir: Direction) -> Result<Vec<f64>, ManifoldError> {
        let d = self.dec.decompose(v)?;
        let (plus, minus) = Decomposer::unstable_coords(&d);
        Ok(match dir {
            Direction::Forward => plus,
            Direction::Backward => minus,
        })
    }

    /// `w + Σ aᵢ Fᵢ`.
    pub fn compose(&self, w: &Field2D, a: &[f64], dir: Direction) -> Field2D {
        let mut v = w.clone();
        for (ai, f) in a.iter().zip(self.directions(dir)) {
            v.axpy(*ai, f);
        }
        v
    }

    /// Integrates the localized system from `(v0, c)` until the state leaves
    /// the tube or the horizon is reached.
    pub fn persistence(&self, v0: &Field2D, c: f64, cfg: &ShootConfig) -> Result<Persistence, ManifoldError> {
        let sign = match cfg.direction {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        };
        let flow = ModulatedFlow::new(self.reference.clone(), sign * cfg.dt);
        let coupling = Coupling::Localized(CutoffParams { delta: cfg.delta });
        let t_max = self.t_max(cfg);
        let steps = (t_max / cfg.dt).ceil() as usize;
        let every = cfg.check_every.max(1);
        let soft = cfg.soft_fraction * cfg.epsilon;

        let mut s = ModulatedState::new(v0.clone(), c, 0.0);
        let mut samples = Vec::with_capacity(steps / every + 2);
        let mut discriminant: Option<Vec<f64>> = None;
        let mut n = 0usize;
        let mut read = |s: &ModulatedState, t: f64, force: bool, samples: &mut Vec<GrowthSample>| -> Result<(), ManifoldError> {
            let x = self.coordinates(&s.v, cfg.direction)?;
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            samples.push(GrowthSample { t, plus_norm: norm });
            if discriminant.is_none() && (norm >= soft || force) {
                discriminant = Some(x.iter().zip(&self.lambdas).map(|(v, l)| v * (-l * t).exp()).collect());
            }
            Ok(())
        };
        read(&s, 0.0, false, &mut samples)?;
        let (mut exited, mut time) = (false, t_max);
        let mut d_prev = self.tube_distance_of(&s);
        if d_prev >= cfg.epsilon {
            return Err(ManifoldError::OutsideTube { dist: d_prev, epsilon: cfg.epsilon });
        }
        while n < steps {
            let chunk = every.min(steps - n);
            for _ in 0..chunk {
                s = flow.step(&s, &coupling).map_err(|source| ManifoldError::Flow { t: s.t, source })?;
            }
            n += chunk;
            let t = (n as f64 * cfg.dt).min(t_max);
            let d = self.tube_distance_of(&s);
            if d >= cfg.epsilon {
                let t0 = t - chunk as f64 * cfg.dt;
                time = t0 + (cfg.epsilon - d_prev) / (d - d_prev) * (t - t0);
                exited = true;
                read(&s, t, true, &mut samples)?;
                break;
            }
            d_prev = d;
            read(&s, t, n >= steps, &mut samples)?;
        }
        Ok(Persistence {
            time: time.min(t_max),
            exited,
            discriminant: discriminant.unwrap_or_else(|| vec![0.0; self.lambdas.len()]),
            samples,
            final_state: s,
        })
    }

    fn tube_distance_of(&self, s: &ModulatedState) -> f64 {
        let q = SolitonProfile::sample_unchecked(s.c, s.v.grid());
        let mut u = Field2D::from_profile(&q.q);
        u.axpy(1.0, &s.v);
        self.tube.distance(&u).dist
    }

    fn check_input(&self, w: &Field2D, c: f64, cfg: &ShootConfig) -> Result<(), ManifoldError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(ManifoldError::BadSpeed(c));
        }
        if !(cfg.epsilon > 0.0 && cfg.delta > 0.0 && cfg.dt > 0.0) {
            return Err(ManifoldError::BadRadius(cfg.epsilon.min(cfg.delta).min(cfg.dt)));
        }
        let d = self.dec.decompose(w)?;
        let size = self.dec.energy_norm_sq_parts(&d, 1.0)?.sqrt();
        let radius = size + (c / self.c_star()).ln().abs();
        if radius > cfg.radius_fraction * cfg.epsilon {
            return Err(ManifoldError::TooFar { radius, limit: cfg.radius_fraction * cfg.epsilon });
        }
        let unknown = self.coordinates(w, cfg.direction)?;
        let leak = unknown
            .iter()
            .map(|v| v.abs())
            .chain([d.mu1.abs(), d.mu2.abs()])
            .fold(0.0, f64::max);
        if leak > 1e-8 * size + 1e-14 {
            return Err(ManifoldError::NotOnDomain { leak });
        }
        Ok(())
    }
}

/// Removes the unknown-direction and kernel components of `v`, leaving data
/// admissible for [`shoot_graph`] in the given direction.
pub fn admissible_part(v: &Field2D, ctx: &ShootContext, dir: Direction) -> Result<Field2D, ManifoldError> {
    let dec = ctx.decomposer();
    let mut d = dec.decompose(v)?;
    match dir {
        Direction::Forward => d.lambda_plus.iter_mut().for_each(|p| *p = [0.0; 2]),
        Direction::Backward => d.lambda_minus.iter_mut().for_each(|p| *p = [0.0; 2]),
    }
    let mut out = dec.assemble(&d, Projection::Plus);
    out.axpy(1.0, &dec.assemble(&d, Projection::Minus));
    out.axpy(1.0, &d.gamma);
    Ok(out)
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Coefficients `a` such that `w + Σ aᵢFᵢ` with speed `c` stays in the
/// `ε`-tube for the whole horizon.
///
/// Off the graph the unknown-direction coordinates grow like `e^{λt}` with
/// a definite sign, so `Λ(t)e^{−λt}` read at the first time those
/// coordinates reach `soft_fraction·ε` is, to leading order, `a − G(w, c)`.
/// The root is found by a quasi-Newton iteration on that discriminant,
/// started from the identity Jacobian with Broyden updates, and with step
/// halving whenever a correction neither shrinks the discriminant nor
/// extends the persistence time.
pub fn shoot_graph(w: &Field2D, c: f64, cfg: &ShootConfig, ctx: &ShootContext) -> Result<ShootResult, ManifoldError> {
    ctx.check_input(w, c, cfg)?;
    let dir = cfg.direction;
    let m = ctx.lambdas().len();
    let t_max = ctx.t_max(cfg);
    let run = |a: &[f64]| ctx.persistence(&ctx.compose(w, a, dir), c, cfg);

    let mut a = vec![0.0; m];
    let mut p = run(&a)?;
    let mut h: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut width = f64::INFINITY;
    let mut iterations = 0;
    while p.time < t_max && iterations < cfg.max_iter {
        let step: Vec<f64> = (0..m).map(|i| -(0..m).map(|j| h[i][j] * p.discriminant[j]).sum::<f64>()).collect();
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..5 {
            let trial: Vec<f64> = a.iter().zip(&step).map(|(x, s)| x + scale * s).collect();
            let q = run(&trial)?;
            let better = norm(&q.discriminant) < norm(&p.discriminant) || q.time > p.time;
            if better {
                accepted = Some((trial, q));
                break;
            }
            scale *= 0.5;
        }
        iterations += 1;
        let Some((a_new, p_new)) = accepted else {
            break;
        };
        let s: Vec<f64> = a_new.iter().zip(&a).map(|(x, y)| x - y).collect();
        let y: Vec<f64> = p_new.discriminant.iter().zip(&p.discriminant).map(|(x, y)| x - y).collect();
        let hy: Vec<f64> = (0..m).map(|i| (0..m).map(|j| h[i][j] * y[j]).sum()).collect();
        let s_h: Vec<f64> = (0..m).map(|j| (0..m).map(|i| s[i] * h[i][j]).sum()).collect();
        let denom: f64 = s.iter().zip(&hy).map(|(x, y)| x * y).sum();
        if denom.abs() > 1e-300 && denom.is_finite() {
            for i in 0..m {
                for j in 0..m {
                    h[i][j] += (s[i] - hy[i]) * s_h[j] / denom;
                }
            }
        }
        width = max_abs(&s);
        a = a_new;
        p = p_new;
        if width < cfg.stall_tol {
            break;
        }
    }
    let persisted = p.time >= t_max;
    Ok(ShootResult {
        a_plus: a,
        persist_time: p.time,
        converged: persisted || width < cfg.bracket_tol,
        bracket_width: if persisted && iterations == 0 { 0.0 } else { width },
        iterations,
        discriminant: p.discriminant,
    })
}
