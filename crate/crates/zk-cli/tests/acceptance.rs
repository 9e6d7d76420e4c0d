//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run a subset with `cargo test --release -p zk-cli --test acceptance -- 2 5`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use zk_cli::config::Origin;
use zk_cli::output::{read_meta, read_rows};
use zk_cli::{run, Command, RawConfig};
use zk_decomp::{Decomposer, Projection};
use zk_dynamics::{
    conservation_report, directional_derivative_errors, Coupling, FullFlow, ModulatedFlow, ModulatedState, Reference,
    ReferenceTrajectory,
};
use zk_grid::{energy, mass, Field2D, Grid2D};
use zk_manifold::{
    measure_growth, random_graph_point, samples_from_fields, shoot_graph, lipschitz_probe, ShootConfig, ShootContext,
};
use zk_metric::{
    flow_compatibility, quasi_axioms_report, random_tube_state, random_tube_triple, AxiomSample, FlowProbe, MobileMetric,
    MobileParams,
};
use zk_soliton::{dq_dc_dot_q, soliton};
use zk_spectral::{assemble_l1d, lambda_of, line_modes, unstable_modes, SpectralData};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn grid_on(x: f64, nx: usize, l: f64, ny: usize) -> Arc<Grid2D> {
    Grid2D::new(x, nx, l, ny).unwrap()
}

fn spec() -> &'static Arc<SpectralData> {
    static S: OnceLock<Arc<SpectralData>> = OnceLock::new();
    S.get_or_init(|| Arc::new(unstable_modes(1.0, 1.0, &grid_on(48.0, 512, 1.0, 8)).unwrap()))
}

fn reference() -> &'static Arc<Reference> {
    static R: OnceLock<Arc<Reference>> = OnceLock::new();
    R.get_or_init(|| Arc::new(Reference::new(spec().clone())))
}

fn ctx() -> &'static ShootContext {
    static C: OnceLock<ShootContext> = OnceLock::new();
    C.get_or_init(|| ShootContext::new(spec().clone()).unwrap())
}

fn dec() -> Decomposer {
    Decomposer::new(spec().clone())
}

fn lambda1() -> f64 {
    spec().f_modes[0].lambda
}

fn bump(amp: f64, x0: f64, phase: f64) -> Field2D {
    Field2D::from_fn(spec().grid(), |x, y| {
        amp * (-(x - x0).powi(2) / 3.0).exp() * (1.0 + 0.5 * (y + phase).cos() + 0.25 * (2.0 * y).sin())
    })
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

// ------------------------------------------------------------------ 1

fn threshold_reproduction() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (c, expect_unstable) in [(0.5, false), (0.7, false), (0.79, false), (0.81, true), (1.0, true), (2.0, true)] {
        let out = dir.path().join(format!("c{c}"));
        let mut raw = RawConfig::default();
        raw.insert("c_star", &c.to_string(), Origin::Default).unwrap();
        raw.insert("output_dir", out.to_str().unwrap(), Origin::Default).unwrap();
        let start = Instant::now();
        let report = run(Command::Spectrum, &raw).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let text = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
        let rows = read_rows(&text).len();
        let stable_note = read_meta(&text).iter().any(|(k, v)| k == "note" && v == "stable regime");
        let good = if expect_unstable { rows >= 1 && !stable_note } else { rows == 0 && stable_note };
        ok &= good && secs < 60.0 && report.value("n0") == Some(&rows.to_string()[..]);
        parts.push(format!("c={c}: {rows} rows in {secs:.2}s"));
    }
    verdict(ok, parts.join(", "))
}

// ------------------------------------------------------------------ 2

fn eigenstructure() -> Verdict {
    let g = spec().grid();
    let line = line_modes(1.0, 1.0, g).unwrap();
    let m = &line[0];
    // the 1-D pairing is normalized to −1/(πL)
    let line_pairing = -std::f64::consts::PI * m.check_pairing;
    let plane_pairing = spec().f_modes.iter().map(|f| (f.plus.dot(&f.l_minus) - 1.0).abs()).fold(0.0, f64::max);
    let symmetry = m.check_symmetry.max(spec().modes[0].symmetry_error);
    let at_edge = lambda_of(1.0, 1.25, g).unwrap();
    let approach: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|h| lambda_of(1.0, 1.25 - h, g).unwrap().unwrap_or(f64::NAN))
        .collect();
    let l512 = lambda_of(1.0, 1.0, g).unwrap().unwrap();
    let l1024 = lambda_of(1.0, 1.0, &grid_on(48.0, 1024, 1.0, 8)).unwrap().unwrap();
    let rel = (l512 - l1024).abs() / l1024;

    let approach_text = approach.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ");
    let edge_ok = at_edge == Some(0.0)
        && approach.iter().all(|v| *v > 0.0)
        && approach.windows(2).all(|w| w[1] < w[0])
        && approach[2] < 1e-3;
    let ok = (line_pairing - 1.0).abs() < 1e-8 && plane_pairing < 1e-8 && symmetry < 1e-6 && edge_ok && rel < 1e-6;
    verdict(
        ok,
        format!(
            "pairing |1−{line_pairing:.12}|, 2-D pairing error {plane_pairing:.1e}, symmetry {symmetry:.1e}, \
             λ(5/4) = {at_edge:?}, λ(5/4 − h) for h = 1e−1, 1e−2, 1e−3: {approach_text}, λ₁ {l512:.10} vs {l1024:.10} (rel {rel:.1e})"
        ),
    )
}

// ------------------------------------------------------------------ 3

fn identity_suite() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for c in [1.0f64, 2.0] {
        let g = grid_on(48.0 / c.sqrt(), 512, 1.0, 8);
        let p = soliton(c, &g).unwrap();
        let lc = assemble_l1d(c, 0.0, &g).unwrap();
        let kernel = lc.apply(&p.dq_dx).max_abs();
        let speed = (&lc.apply(&p.dq_dc) + &p.q).max_abs();
        let pairing = (p.dq_dc.dot(&p.q) - 4.5 * c.sqrt()).abs();
        let closed = (dq_dc_dot_q(c) - 4.5 * c.sqrt()).abs();
        let e = kernel.max(speed).max(pairing).max(closed);
        worst = worst.max(e);
        parts.push(format!("c={c}: L∂ₓQ {kernel:.1e}, L∂_cQ+Q {speed:.1e}, (∂_cQ,Q)−4.5√c {pairing:.1e}"));
    }
    let r = reference();
    let a_dx = r.apply_generator(&r.dq);
    let a_dc = r.apply_generator(&r.dcq);
    let gen = a_dx.max_abs().max(a_dx.norm_l2()).max(a_dc.max_abs()).max(a_dc.norm_l2());
    worst = worst.max(gen);
    parts.push(format!("𝒜∂ₓQ, 𝒜∂_cQ {gen:.1e}"));
    verdict(worst < 1e-7, parts.join("; "))
}

// ------------------------------------------------------------------ 4

fn conservation() -> Verdict {
    let g = spec().grid();
    let mut u0 = soliton(1.0, g).unwrap().q_2d();
    u0.axpy(1.0, &bump(0.05, -4.0, 0.3));
    let u0 = u0.dealiased();
    let (m0, e0) = (mass(&u0), energy(&u0));
    let flow = FullFlow::new(g, 1e-3);
    let mut u = u0.clone();
    let (mut dm, mut de): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        u = flow.advance(&u, 100).unwrap();
        dm = dm.max((mass(&u) - m0).abs());
        de = de.max((energy(&u) - e0).abs());
    }
    let (rel_m, rel_e) = (dm / m0.abs(), de / e0.abs());

    let d = dec();
    let lin = ModulatedFlow::new(reference().clone(), 1e-3);
    let mut v0 = bump(0.05, -2.0, 1.1);
    v0.axpy(1.0, &bump(-0.03, 3.0, -0.4).ddy());
    let v0 = {
        let mut w = v0.clone();
        w.axpy(-1.0, &d.project(&v0, Projection::P1).unwrap());
        w
    };
    let traj = lin.trajectory(&ModulatedState::new(v0, 1.0, 0.0), &Coupling::Linear { c0: 1.0 }, 2000).unwrap();
    let rep = conservation_report(&traj, &d).unwrap();
    let lin_worst = rep.gamma_energy_drift.max(rep.q_pairing_drift).max(rep.dq_pairing_drift);
    verdict(
        dm < 1e-8 && de < 1e-6 && lin_worst < 1e-6,
        format!(
            "full flow: mass drift {dm:.1e} (relative {rel_m:.1e}), energy drift {de:.1e} (relative {rel_e:.1e}); linear flow: ‖P_γv‖_E {:.1e}, (v,Q) {:.1e}, (v,∂ₓQ) {:.1e}",
            rep.gamma_energy_drift, rep.q_pairing_drift, rep.dq_pairing_drift
        ),
    )
}

// ------------------------------------------------------------------ 5

fn growth_rate() -> Verdict {
    let start = Instant::now();
    let g = spec().grid();
    let mut u = soliton(1.0, g).unwrap().q_2d();
    u.axpy(1e-5, &spec().f_modes[0].plus);
    let flow = FullFlow::new(g, 1e-2);
    let mut snaps = vec![(0.0, u.clone())];
    for n in 1..=90 {
        u = flow.advance(&u, 100).unwrap();
        snaps.push((n as f64, u.clone()));
    }
    let samples = samples_from_fields(&snaps, ctx().decomposer(), 1.0, 0.0).unwrap();
    let fit = measure_growth(&samples).unwrap();
    let line = spec().modes[0].lambda_line;
    let err = (fit.rate / lambda1() - 1.0).abs();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        err < 0.05 && secs < 300.0,
        format!("rate {:.8} vs λ₁ {:.8} (line {line:.6}), relative error {err:.2e} in {secs:.0}s", fit.rate, lambda1()),
    )
}

// ------------------------------------------------------------------ 6

fn quasi_distance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let triples: Vec<AxiomSample> = (0..100).map(|_| random_tube_triple(&mut rng, spec().grid(), 1.0, 0.05)).collect();
    let mut ok = true;
    let (mut tri, mut lower, mut upper) = (Vec::new(), Vec::new(), Vec::new());
    let mut parts = Vec::new();
    for delta in [1e-1, 1e-2, 1e-3] {
        let rep = quasi_axioms_report(&triples, &MobileMetric::new(dec(), MobileParams::new(delta).unwrap())).unwrap();
        ok &= rep.passed() && rep.symmetry_max == 0.0 && rep.identity_max == 0.0;
        ok &= [rep.triangle_constant, rep.lower_constant, rep.upper_constant].iter().all(|k| k.is_finite() && *k > 0.0);
        tri.push(rep.triangle_constant);
        lower.push(rep.lower_constant);
        upper.push(rep.upper_constant);
        parts.push(format!(
            "δ={delta:.0e}: triangle {:.3}, lower {:.3}, upper {:.3}",
            rep.triangle_constant, rep.lower_constant, rep.upper_constant
        ));
    }
    let spreads = [spread(&tri), spread(&lower), spread(&upper)];
    ok &= spreads.iter().all(|s| *s <= 2.0);
    parts.push(format!("spread across δ {:.2}/{:.2}/{:.2}", spreads[0], spreads[1], spreads[2]));
    verdict(ok, parts.join("; "))
}

// ------------------------------------------------------------------ 7

/// `(sup 𝔪(t)/𝔪(0), drift constant)` at each `δ` over 20 pairs drawn at
/// `radius(δ)`.
fn flow_constants(radius: impl Fn(f64) -> f64, probe: &FlowProbe) -> Vec<(f64, f64)> {
    let d = dec();
    [1e-1, 1e-2]
        .into_iter()
        .map(|delta| {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut orth = || {
                let s = random_tube_state(&mut rng, spec().grid(), 1.0, radius(delta));
                let mut v = s.v.clone();
                v.axpy(-1.0, &d.project(&s.v, Projection::P0).unwrap());
                ModulatedState::new(v, s.c, 0.0)
            };
            let metric = MobileMetric::new(dec(), MobileParams::new(delta).unwrap());
            let (mut sup, mut k): (f64, f64) = (0.0, 0.0);
            for _ in 0..20 {
                let (a, b) = (orth(), orth());
                let fc = flow_compatibility(&a, &b, &metric, reference(), probe).unwrap();
                sup = sup.max(fc.sup_ratio);
                k = k.max(fc.drift_constant);
            }
            (sup, k)
        })
        .collect()
}

fn flow_distance() -> Verdict {
    let probe = FlowProbe::default();
    let r = flow_constants(|_| 0.05, &probe);
    let ks: Vec<f64> = r.iter().map(|x| x.1).collect();
    let ok = r.iter().all(|x| x.0 <= 10.0 && x.1.is_finite()) && spread(&ks) <= 2.0;
    verdict(
        ok,
        format!(
            "T*={}: sup 𝔪(t)/𝔪(0) {:.3} / {:.3}, drift K {:.3e} / {:.3e} for δ = 1e−1 / 1e−2 (spread {:.2})",
            probe.t_star,
            r[0].0,
            r[1].0,
            ks[0],
            ks[1],
            spread(&ks)
        ),
    )
}

// ------------------------------------------------------------------ 8

fn manifold_dichotomy() -> Verdict {
    let start = Instant::now();
    let cfg = ShootConfig::default();
    let t_max = ctx().t_max(&cfg);
    let k_star = spec().k_star_max.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut persisted, mut exits, mut min_persist, mut min_rate, mut max_exit) = (0, 0, f64::INFINITY, f64::INFINITY, 0.0f64);
    for _ in 0..10 {
        let (w, c) = random_graph_point(&mut rng, ctx(), 1e-3, &cfg).unwrap();
        let shot = shoot_graph(&w, c, &cfg, ctx()).unwrap();
        min_persist = min_persist.min(shot.persist_time);
        if shot.persist_time >= t_max {
            persisted += 1;
        }
        for sign in [1.0, -1.0] {
            let mut a = shot.a_plus.clone();
            a[0] += sign * 1e-3;
            let v0 = ctx().compose(&w, &a, cfg.direction);
            let p = ctx().persistence(&v0, c, &cfg).unwrap();
            let rate = measure_growth(&p.samples).map(|f| f.rate).unwrap_or(0.0);
            min_rate = min_rate.min(rate);
            max_exit = max_exit.max(p.time);
            if p.exited && p.time < t_max && rate >= 0.95 * k_star / 2.0 {
                exits += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        persisted == 10 && exits == 20 && secs < 1800.0,
        format!(
            "{persisted}/10 shots persist to Tmax {t_max:.1} (min {min_persist:.1}); {exits}/20 perturbed runs exit \
             (latest {max_exit:.1}, min rate {min_rate:.5} vs k*/2 {:.5}) in {secs:.0}s",
            k_star / 2.0
        ),
    )
}

// ------------------------------------------------------------------ 9

fn tangent_consistency() -> Verdict {
    let d = dec();
    let orthogonal = |v: &Field2D| {
        let mut out = v.clone();
        out.axpy(-1.0, &d.project(v, Projection::P1).unwrap());
        out
    };
    let flow = ModulatedFlow::new(reference().clone(), 1e-3);
    let s0 = ModulatedState::new(orthogonal(&bump(0.01, -1.0, 0.3)), 1.01, 0.0);
    let traj = ReferenceTrajectory::record(&flow, &s0, &Coupling::Full, 1000).unwrap();
    let eta0 = orthogonal(&bump(1.0, 1.0, -0.5));
    let hs = [1e-2, 1e-3, 1e-4];
    let errs = directional_derivative_errors(&flow, &traj, &eta0, 0.5, &hs).unwrap();
    let slope = log_log_slope(&hs, &errs);
    verdict((slope - 1.0).abs() < 0.2, format!("errors {:.3e} {:.3e} {:.3e}, slope {slope:.4}", errs[0], errs[1], errs[2]))
}

// ------------------------------------------------------------------ 10

fn lipschitz() -> Verdict {
    let cfg = ShootConfig { epsilon: 6e-2, delta: 2.5e-2, t_max: Some(20.0 / lambda1()), ..ShootConfig::default() };
    let mut values = Vec::new();
    for (i, radius) in [1e-2, 1e-3, 1e-4].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        values.push(lipschitz_probe(&mut rng, 10, radius, &cfg, ctx()).unwrap().value);
    }
    let nonincreasing = values.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        values[1] < 0.5 && nonincreasing,
        format!("probe {:.4e} / {:.4e} / {:.4e} at radius 1e−2 / 1e−3 / 1e−4", values[0], values[1], values[2]),
    )
}

type Criterion = (u32, &'static str, fn() -> Verdict);

const CRITERIA: [Criterion; 10] = [
    (1, "threshold reproduction", threshold_reproduction),
    (2, "eigenstructure", eigenstructure),
    (3, "identity suite", identity_suite),
    (4, "conservation", conservation),
    (5, "growth-rate match", growth_rate),
    (6, "quasi-distance suite", quasi_distance),
    (7, "flow-distance compatibility", flow_distance),
    (8, "manifold dichotomy", manifold_dichotomy),
    (9, "tangent consistency", tangent_consistency),
    (10, "Lipschitz probe", lipschitz),
];

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    // non-numeric arguments such as libtest flags are ignored
    let mut failed = 0;
    for (n, name, check) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                verdict(false, format!("panicked: {msg}"))
            });
        let took = fmt_duration(start.elapsed());
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        if !outcome.pass {
            failed += 1;
        }
        println!("criterion {n:2} {status} {name} [{took}]: {}", outcome.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn fmt_duration(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}
