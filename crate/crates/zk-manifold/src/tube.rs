use std::f64::consts::PI;
use std::sync::Arc;

use zk_dynamics::FullFlow;
use zk_grid::{h1_norm_sq, mass, Complex64, Field2D, Grid2D};
use zk_soliton::formula;

use crate::ManifoldError;

/// A field together with the tube `{u : inf_q ‖u − τ_qQ_c‖_{H¹} < ε}` it is
/// tested against.
#[derive(Clone, Debug)]
pub struct TubeQuery {
    pub c_ref: f64,
    pub epsilon: f64,
    pub u: Field2D,
}

impl TubeQuery {
    pub fn new(u: Field2D, c_ref: f64, epsilon: f64) -> Result<Self, ManifoldError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(ManifoldError::BadRadius(epsilon));
        }
        check_speed(c_ref)?;
        Ok(TubeQuery { c_ref, epsilon, u })
    }

    pub fn distance(&self) -> Result<TubeDistance, ManifoldError> {
        Ok(Tube::new(self.u.grid(), self.c_ref)?.distance(&self.u))
    }

    pub fn inside(&self) -> Result<bool, ManifoldError> {
        Ok(self.distance()?.dist < self.epsilon)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeDistance {
    pub dist: f64,
    /// Minimizing shift, in `[-X, X)`.
    pub q_min: f64,
}

fn check_speed(c: f64) -> Result<(), ManifoldError> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(ManifoldError::BadSpeed(c))
    }
}

fn wrap(x: f64, half: f64) -> f64 {
    (x + half).rem_euclid(2.0 * half) - half
}

/// Precomputed transform of one solitary-wave profile for repeated distance
/// queries on a fixed grid.
///
/// Because `Q_c` does not depend on `y`, the cross term
/// `⟨u, τ_qQ_c⟩_{H¹}` only involves the `y`-average of `u`, which makes the
/// objective a one-dimensional trigonometric sum in `q`.
#[derive(Clone, Debug)]
pub struct Tube {
    grid: Arc<Grid2D>,
    c_ref: f64,
    q_hat: Vec<Complex64>,
    weights: Vec<f64>,
}

impl Tube {
    pub fn new(grid: &Arc<Grid2D>, c_ref: f64) -> Result<Self, ManifoldError> {
        check_speed(c_ref)?;
        let profile: Vec<f64> = grid.xs().iter().map(|&x| formula::q(c_ref, x)).collect();
        let q_hat = grid.forward_x(&profile);
        let weights = (0..grid.nx()).map(|j| 1.0 + grid.xi_d1(j).powi(2)).collect();
        Ok(Tube { grid: grid.clone(), c_ref, q_hat, weights })
    }

    pub fn c_ref(&self) -> f64 {
        self.c_ref
    }

    /// `τ_qQ_c` sampled from the closed form, with periodic wrap.
    pub fn translated(&self, q: f64) -> Field2D {
        let half = self.grid.x_half_width();
        let c = self.c_ref;
        Field2D::from_fn(&self.grid, |x, _| formula::q(c, wrap(x - q, half)))
    }

    pub fn distance(&self, u: &Field2D) -> TubeDistance {
        let g = &*self.grid;
        let nx = g.nx();
        let ubar = u.y_mean();
        let u_hat = g.forward_x(ubar.values());
        let a: Vec<Complex64> = (0..nx).map(|k| u_hat[k] * self.q_hat[k].conj() * self.weights[k]).collect();
        let scale = g.dx() * g.torus_length() / nx as f64;

        // cross(q_m) at every grid shift q_m = m·dx is one inverse transform
        let coarse = g.inverse_x(&a);
        let best = (0..nx).max_by(|&i, &j| coarse[i].total_cmp(&coarse[j])).unwrap_or(0);
        let q_of = |m: isize| m as f64 * g.dx();
        let m = if best > nx / 2 { best as isize - nx as isize } else { best as isize };

        let slope = |q: f64| -> f64 {
            let mut s = 0.0;
            for (k, ak) in a.iter().enumerate() {
                let xi = g.xi(k);
                if g.is_nyquist_x(k) {
                    s -= ak.re * xi * (xi * q).sin();
                } else {
                    let e = Complex64::from_polar(1.0, xi * q);
                    s -= xi * (ak * e).im;
                }
            }
            s * scale
        };
        let (mut lo, mut hi) = (q_of(m - 1), q_of(m + 1));
        let (mut glo, mut ghi) = (slope(lo), slope(hi));
        let q = if glo > 0.0 && ghi < 0.0 {
            // Illinois false position on the derivative of the cross term
            let mut side = 0i8;
            let mut mid = 0.5 * (lo + hi);
            for _ in 0..200 {
                mid = (lo * ghi - hi * glo) / (ghi - glo);
                if !(mid > lo && mid < hi) {
                    mid = 0.5 * (lo + hi);
                }
                let gm = slope(mid);
                if gm == 0.0 || hi - lo < 1e-15 * (1.0 + mid.abs()) {
                    break;
                }
                if gm > 0.0 {
                    lo = mid;
                    glo = gm;
                    if side == 1 {
                        ghi *= 0.5;
                    }
                    side = 1;
                } else {
                    hi = mid;
                    ghi = gm;
                    if side == -1 {
                        glo *= 0.5;
                    }
                    side = -1;
                }
            }
            mid
        } else {
            q_of(m)
        };
        let q = wrap(q, g.x_half_width());
        let mut diff = u.clone();
        diff.axpy(-1.0, &self.translated(q));
        TubeDistance { dist: h1_norm_sq(&diff).sqrt(), q_min: q }
    }
}

/// `(inf_q ‖u − τ_qQ_{c_ref}‖_{H¹}, argmin)`.
pub fn tube_distance(u: &Field2D, c_ref: f64) -> Result<TubeDistance, ManifoldError> {
    Ok(Tube::new(u.grid(), c_ref)?.distance(u))
}

/// Speed of the line soliton with the same mass as `u`:
/// `2πL · 6c^{3/2} = M(u)`.
pub fn mass_based_c(u: &Field2D) -> Result<f64, ManifoldError> {
    let m = mass(u);
    if !(m > 0.0) {
        return Err(ManifoldError::ZeroMass);
    }
    let l = u.grid().torus_scale();
    Ok((m / (12.0 * PI * l)).powf(2.0 / 3.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExitOptions {
    pub dt: f64,
    /// Steps between two tube-distance evaluations.
    pub check_every: usize,
}

impl Default for ExitOptions {
    fn default() -> Self {
        ExitOptions { dt: 1e-2, check_every: 10 }
    }
}

/// Evolves `u0` by the ZK equation and returns the first time its tube
/// distance reaches `epsilon`, linearly interpolated between checks.
pub fn exit_time(
    u0: &Field2D,
    c_ref: f64,
    epsilon: f64,
    t_max: f64,
    opts: &ExitOptions,
) -> Result<Option<f64>, ManifoldError> {
    let tube = Tube::new(u0.grid(), c_ref)?;
    if !(epsilon > 0.0) {
        return Err(ManifoldError::BadRadius(epsilon));
    }
    let d0 = tube.distance(u0).dist;
    if d0 >= epsilon {
        return Err(ManifoldError::OutsideTube { dist: d0, epsilon });
    }
    let flow = FullFlow::new(u0.grid(), opts.dt);
    let steps = (t_max / opts.dt).round() as usize;
    let every = opts.check_every.max(1);
    let (mut u, mut n, mut d_prev) = (u0.clone(), 0usize, d0);
    while n < steps {
        let chunk = every.min(steps - n);
        u = flow
            .advance(&u, chunk)
            .map_err(|source| ManifoldError::Flow { t: n as f64 * opts.dt, source })?;
        n += chunk;
        let d = tube.distance(&u).dist;
        if d >= epsilon {
            let t1 = n as f64 * opts.dt;
            let t0 = t1 - chunk as f64 * opts.dt;
            return Ok(Some(t0 + (epsilon - d_prev) / (d - d_prev) * (t1 - t0)));
        }
        d_prev = d;
    }
    Ok(None)
}
