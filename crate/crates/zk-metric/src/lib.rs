//! The mobile quasi-distance `𝔪_δ` between perturbations `(v, c)` of a line
//! soliton. Remainder components are compared up to a spatial shift `q`,
//! and the shift is charged `δq²φ_δ²`.

mod axioms;
mod flow;
mod sampling;

use std::sync::Arc;

use zk_decomp::{DecompError, Decomposer, Decomposition};
use zk_grid::{Field2D, Spectrum2D};
use zk_spectral::SpectralData;

pub use axioms::{cauchy_sequence, quasi_axioms_report, AxiomSample, CauchyStep, QuasiAxiomsReport};
pub use flow::{flow_compatibility, FlowCompatibility, FlowProbe};
pub use sampling::{random_tube_state, random_tube_triple, TubeState};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("delta must be positive and finite, got {0}")]
    BadDelta(f64),
    #[error("C2 must be at least 1, got {0}")]
    BadThreshold(f64),
    #[error("speeds must be positive, got {0}")]
    BadSpeed(f64),
    #[error("quasi-distance axiom violated: {0}")]
    AxiomViolation(String),
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Dynamics(#[from] zk_dynamics::DynError),
}

/// `δ` and the threshold `C₂` of the correction weight `φ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobileParams {
    pub delta: f64,
    pub c2: f64,
}

impl MobileParams {
    pub fn new(delta: f64) -> Result<Self, MetricError> {
        Self::with_threshold(delta, 10.0)
    }

    pub fn with_threshold(delta: f64, c2: f64) -> Result<Self, MetricError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(MetricError::BadDelta(delta));
        }
        if !(c2 >= 1.0 && c2.is_finite()) {
            return Err(MetricError::BadThreshold(c2));
        }
        Ok(MobileParams { delta, c2 })
    }
}

/// `φ(r) = 1 + (r − 1)·s((r − C₂)/C₂)` with the quintic smoothstep `s`:
/// equal to 1 up to `C₂`, to `r` from `2C₂` on, nondecreasing in between.
pub fn phi(r: f64, c2: f64) -> f64 {
    let t = ((r - c2) / c2).clamp(0.0, 1.0);
    let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    if t >= 1.0 {
        r
    } else {
        1.0 + (r - 1.0) * s
    }
}

/// `φ(δ⁻¹‖P_γv‖_E)`.
pub fn phi_delta(v: &Field2D, params: &MobileParams, dec: &Decomposer) -> Result<f64, MetricError> {
    let d = dec.decompose(v)?;
    Ok(phi(d.gamma_energy(dec) / params.delta, params.c2))
}

/// Two states `(v₀, c₀)` and `(v₁, c₁)`.
#[derive(Clone, Debug)]
pub struct StatePair {
    pub v0: Field2D,
    pub c0: f64,
    pub v1: Field2D,
    pub c1: f64,
}

/// Value of `𝔪_δ` together with its three squared contributions and the
/// optimal shift `q` and ordering `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobileDistance {
    pub value: f64,
    pub d_part_sq: f64,
    pub shift_part_sq: f64,
    pub log_part_sq: f64,
    pub q: f64,
    pub j: usize,
}

/// Per-state data reused across distance evaluations.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub decomposition: Decomposition,
    gamma_hat: Spectrum2D,
    /// `φ_δ` of the state.
    pub phi: f64,
    pub c: f64,
    /// The remainder vanishes, so every shift of it does too.
    gamma_vanishes: bool,
}

const GOLDEN_TOL: f64 = 1e-8;

/// Mobile distance evaluator bound to one reference soliton and one `δ`.
#[derive(Clone, Debug)]
pub struct MobileMetric {
    dec: Decomposer,
    pub params: MobileParams,
}

impl MobileMetric {
    pub fn new(dec: Decomposer, params: MobileParams) -> Self {
        MobileMetric { dec, params }
    }

    pub fn from_spectral(spec: Arc<SpectralData>, params: MobileParams) -> Self {
        MobileMetric { dec: Decomposer::new(spec), params }
    }

    pub fn decomposer(&self) -> &Decomposer {
        &self.dec
    }

    pub fn prepare(&self, v: &Field2D, c: f64) -> Result<Prepared, MetricError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(MetricError::BadSpeed(c));
        }
        let decomposition = self.dec.decompose(v)?;
        let phi = phi(decomposition.gamma_energy(&self.dec) / self.params.delta, self.params.c2);
        let gamma_hat = decomposition.gamma.spectrum();
        let gamma_vanishes = decomposition.gamma.max_abs() == 0.0;
        Ok(Prepared { decomposition, gamma_hat, phi, c, gamma_vanishes })
    }

    /// `‖a − τ_q b‖²_E + δq²φ_b²`, with `a`, `b` remainder components.
    fn shift_objective(&self, a: &Prepared, b: &Prepared, q: f64) -> Result<f64, MetricError> {
        let mut w = a.decomposition.gamma.clone();
        if q == 0.0 {
            w.axpy(-1.0, &b.decomposition.gamma);
        } else {
            w.axpy(-1.0, &b.gamma_hat.translate(q).to_field());
        }
        let d = self.dec.decompose(&w)?;
        let e = self.dec.energy_norm_sq_parts(&d, 1.0)?;
        Ok(e + self.params.delta * q * q * b.phi * b.phi)
    }

    /// `inf_q` of [`Self::shift_objective`] over the periodic box, with its minimizer.
    fn shift_infimum(&self, a: &Prepared, b: &Prepared) -> Result<(f64, f64), MetricError> {
        let grid = self.dec.grid();
        let dx = grid.dx();
        let half = grid.x_half_width();
        let j0 = self.shift_objective(a, b, 0.0)?;
        if b.gamma_vanishes {
            return Ok((j0, 0.0));
        }
        let weight = self.params.delta * b.phi * b.phi;
        let window = ((j0 / weight).sqrt() + dx).min(half);
        let kmax = (window / dx).floor() as i64;
        let (mut best_q, mut best) = (0.0, j0);
        for k in 1..=kmax {
            for q in [k as f64 * dx, -(k as f64) * dx] {
                if q < -half || q >= half {
                    continue;
                }
                let v = self.shift_objective(a, b, q)?;
                if v < best {
                    best = v;
                    best_q = q;
                }
            }
        }
        let (q, v) = golden_section(|q| self.shift_objective(a, b, q), best_q - dx, best_q + dx, GOLDEN_TOL)?;
        if v < best {
            Ok((v, q))
        } else {
            Ok((best, best_q))
        }
    }

    pub fn distance_prepared(&self, s0: &Prepared, s1: &Prepared) -> Result<MobileDistance, MetricError> {
        let d_part_sq = d_part_sq(&s0.decomposition, &s1.decomposition);
        let (v0, q0) = self.shift_infimum(s0, s1)?;
        let (v1, q1) = self.shift_infimum(s1, s0)?;
        let pick_first = v0 < v1 || (v0 == v1 && q0.abs() <= q1.abs());
        let (shift_part_sq, q, j) = if pick_first { (v0, q0, 0) } else { (v1, q1, 1) };
        let log_part_sq = (s0.c.ln() - s1.c.ln()).powi(2);
        let value = (d_part_sq + shift_part_sq + log_part_sq).sqrt();
        Ok(MobileDistance { value, d_part_sq, shift_part_sq, log_part_sq, q, j })
    }

    pub fn distance(&self, pair: &StatePair) -> Result<MobileDistance, MetricError> {
        let s0 = self.prepare(&pair.v0, pair.c0)?;
        let s1 = self.prepare(&pair.v1, pair.c1)?;
        self.distance_prepared(&s0, &s1)
    }

    /// Square root of the shift infimum alone.
    pub fn shift_part(&self, s0: &Prepared, s1: &Prepared) -> Result<f64, MetricError> {
        let (v0, _) = self.shift_infimum(s0, s1)?;
        let (v1, _) = self.shift_infimum(s1, s0)?;
        Ok(v0.min(v1).sqrt())
    }
}

/// `‖P_d(v₀ − v₁)‖²_E` from the two decompositions.
fn d_part_sq(a: &Decomposition, b: &Decomposition) -> f64 {
    let diff = |x: &[[f64; 2]], y: &[[f64; 2]]| -> f64 {
        x.iter().zip(y).flat_map(|(p, q)| [(p[0] - q[0]).powi(2), (p[1] - q[1]).powi(2)]).sum()
    };
    diff(&a.lambda_plus, &b.lambda_plus)
        + diff(&a.lambda_minus, &b.lambda_minus)
        + (a.mu1 - b.mu1).powi(2)
        + (a.mu2 - b.mu2).powi(2)
}

pub fn mobile_distance(pair: &StatePair, params: &MobileParams, dec: &Decomposer) -> Result<f64, MetricError> {
    Ok(MobileMetric::new(dec.clone(), *params).distance(pair)?.value)
}

/// Golden-section search on `[lo, hi]` down to an interval of width `tol`.
fn golden_section<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64), MetricError>
where
    F: FnMut(f64) -> Result<f64, MetricError>,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}
