use zk_grid::{h1_norm, Field2D};

use crate::{MetricError, MobileMetric, TubeState};

pub type AxiomSample = [TubeState; 3];

/// Measured constants of the quasi-distance axioms over a sample of triples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuasiAxiomsReport {
    pub delta: f64,
    pub triples: usize,
    /// `max |𝔪(a, b) − 𝔪(b, a)|`.
    pub symmetry_max: f64,
    /// `max 𝔪(a, a)`.
    pub identity_max: f64,
    /// Smallest `𝔪` between distinct sampled states.
    pub min_distinct: f64,
    /// `max 𝔪(a, b) / (𝔪(a, c) + 𝔪(c, b))` over all orderings.
    pub triangle_constant: f64,
    /// `max (|‖v₁‖_{H¹} − ‖v₀‖_{H¹}| + ‖v₀ − v₁‖_{L²} + |log c₀ − log c₁|) / 𝔪`.
    pub lower_constant: f64,
    /// `max 𝔪 / (‖v₀ − v₁‖_{H¹} + |log c₀ − log c₁|)`.
    pub upper_constant: f64,
    pub violations: Vec<String>,
}

impl QuasiAxiomsReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn lower_quantity(a: &TubeState, b: &TubeState) -> f64 {
    (h1_norm(&b.v) - h1_norm(&a.v)).abs() + (&a.v - &b.v).norm_l2() + (a.c.ln() - b.c.ln()).abs()
}

fn upper_quantity(a: &TubeState, b: &TubeState) -> f64 {
    h1_norm(&(&a.v - &b.v)) + (a.c.ln() - b.c.ln()).abs()
}

/// Evaluates symmetry, identity, the quasi-triangle inequality and the
/// two-sided comparison with `H¹` on every triple.
pub fn quasi_axioms_report(samples: &[AxiomSample], metric: &MobileMetric) -> Result<QuasiAxiomsReport, MetricError> {
    let mut rep = QuasiAxiomsReport {
        delta: metric.params.delta,
        triples: samples.len(),
        min_distinct: f64::INFINITY,
        ..Default::default()
    };
    for (n, t) in samples.iter().enumerate() {
        let p: Vec<_> = t.iter().map(|s| metric.prepare(&s.v, s.c)).collect::<Result<_, _>>()?;
        let m = |i: usize, j: usize| metric.distance_prepared(&p[i], &p[j]).map(|d| d.value);
        let (ab, ac, bc) = (m(0, 1)?, m(0, 2)?, m(1, 2)?);
        let ba = m(1, 0)?;
        let aa = m(0, 0)?;
        rep.symmetry_max = rep.symmetry_max.max((ab - ba).abs());
        rep.identity_max = rep.identity_max.max(aa);
        if ab != ba {
            rep.violations.push(format!("triple {n}: asymmetric, {ab:e} vs {ba:e}"));
        }
        if aa != 0.0 {
            rep.violations.push(format!("triple {n}: m(a, a) = {aa:e}"));
        }
        for (d, x, y) in [(ab, ac, bc), (ac, ab, bc), (bc, ab, ac)] {
            if x + y > 0.0 {
                rep.triangle_constant = rep.triangle_constant.max(d / (x + y));
            }
        }
        for ((i, j), d) in [((0, 1), ab), ((0, 2), ac), ((1, 2), bc)] {
            if !(d >= 0.0) {
                rep.violations.push(format!("triple {n}: negative or undefined distance {d}"));
                continue;
            }
            let lo = lower_quantity(&t[i], &t[j]);
            let hi = upper_quantity(&t[i], &t[j]);
            if d > 0.0 {
                rep.min_distinct = rep.min_distinct.min(d);
                rep.lower_constant = rep.lower_constant.max(lo / d);
            } else if lo > 1e-10 {
                rep.violations.push(format!("triple {n}: distinct states at distance 0"));
            }
            if hi > 0.0 {
                rep.upper_constant = rep.upper_constant.max(d / hi);
            }
        }
    }
    Ok(rep)
}

/// One term of the sequence `v_n = τ_{2⁻ⁿ}v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CauchyStep {
    pub n: usize,
    /// `𝔪(v_n, v_{n+1})`.
    pub mobile_to_next: f64,
    /// `‖v_n − v‖_{H¹}`.
    pub h1_to_limit: f64,
}

pub fn cauchy_sequence(v: &Field2D, c: f64, terms: usize, metric: &MobileMetric) -> Result<Vec<CauchyStep>, MetricError> {
    let member = |n: usize| v.translate(0.5f64.powi(n as i32));
    let mut prev = metric.prepare(&member(0), c)?;
    let mut out = Vec::with_capacity(terms);
    for n in 0..terms {
        let vn = member(n);
        let next = metric.prepare(&member(n + 1), c)?;
        let d = metric.distance_prepared(&prev, &next)?.value;
        out.push(CauchyStep { n, mobile_to_next: d, h1_to_limit: h1_norm(&(vn - v)) });
        prev = next;
    }
    Ok(out)
}
