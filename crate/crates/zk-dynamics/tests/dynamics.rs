use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use zk_decomp::{fit_modulation, Decomposer, FitOptions, Projection};
use zk_dynamics::snapshot::{read_snapshot, write_snapshot};
use zk_dynamics::*;
use zk_grid::{energy, h1_norm, h1_norm_sq, mass, Field2D, Grid2D};
use zk_soliton::soliton;
use zk_spectral::{unstable_modes, SpectralData};

fn spec() -> &'static Arc<SpectralData> {
    static S: OnceLock<Arc<SpectralData>> = OnceLock::new();
    S.get_or_init(|| {
        let g = Grid2D::new(48.0, 512, 1.0, 8).unwrap();
        Arc::new(unstable_modes(1.0, 1.0, &g).unwrap())
    })
}

fn reference() -> &'static Arc<Reference> {
    static R: OnceLock<Arc<Reference>> = OnceLock::new();
    R.get_or_init(|| Arc::new(Reference::new(spec().clone())))
}

fn grid() -> &'static Arc<Grid2D> {
    spec().grid()
}

fn bump(amp: f64, x0: f64, phase: f64) -> Field2D {
    Field2D::from_fn(grid(), |x, y| {
        amp * (-(x - x0).powi(2) / 3.0).exp() * (1.0 + 0.5 * (y + phase).cos() + 0.25 * (2.0 * y).sin())
    })
}

/// Removes the `∂ₓQ` and `∂_cQ` components so that the modulation
/// orthogonality conditions hold.
fn orthogonal(v: &Field2D) -> Field2D {
    let d = Decomposer::new(spec().clone());
    let mut out = v.clone();
    out.axpy(-1.0, &d.project(v, Projection::P1).unwrap());
    out.axpy(-1.0, &d.project(v, Projection::P2).unwrap());
    out
}

fn pairings(v: &Field2D) -> (f64, f64) {
    let r = reference();
    (v.dot(&r.q), v.dot(&r.dq))
}

#[test]
fn traveling_wave_is_reproduced() {
    let g = grid();
    let q = soliton(1.0, g).unwrap().q_2d().dealiased();
    let flow = FullFlow::new(g, 1e-3);
    let u = flow.advance(&q, 1000).unwrap();
    let err = (u - &q.translate(1.0)).norm_l2();
    assert!(err < 1e-6, "traveling-wave error {err:e}");
}

#[test]
fn full_flow_conserves_mass_and_energy() {
    let g = grid();
    let mut u0 = soliton(1.0, g).unwrap().q_2d();
    u0.axpy(1.0, &bump(0.05, -4.0, 0.3));
    let u0 = u0.dealiased();
    let (m0, e0) = (mass(&u0), energy(&u0));
    let flow = FullFlow::new(g, 1e-3);
    let mut u = u0.clone();
    let (mut dm, mut de): (f64, f64) = (0.0, 0.0);
    for _ in 0..10 {
        u = flow.advance(&u, 1000).unwrap();
        dm = dm.max(((mass(&u) - m0) / m0).abs());
        de = de.max(((energy(&u) - e0) / e0).abs());
    }
    assert!(dm < 1e-8, "mass drift {dm:e}");
    assert!(de < 1e-6, "energy drift {de:e}");
}

#[test]
fn full_flow_is_fourth_order() {
    let g = grid();
    let mut u0 = soliton(1.5, g).unwrap().q_2d();
    u0.axpy(1.0, &bump(0.2, -2.0, 0.0));
    let u0 = u0.dealiased();
    let t = 0.5;
    let run = |dt: f64| FullFlow::new(g, dt).advance(&u0, (t / dt).round() as usize).unwrap();
    let errs: Vec<f64> = [2e-3, 1e-3, 5e-4].iter().map(|&dt| (run(dt) - &run(dt / 2.0)).norm_l2()).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((3.5..4.5).contains(&order), "observed order {order} from {errs:?}");
    }
}

#[test]
fn full_flow_detects_blowup() {
    let g = grid();
    let mut flow = FullFlow::new(g, 1e-3);
    flow.cap = 1.0;
    let u = soliton(1.0, g).unwrap().q_2d().scaled(2.0);
    assert!(matches!(flow.step(&u), Err(DynError::Blowup { .. })));
}

#[test]
fn equilibrium_has_zero_rhs() {
    let s = ModulatedState::new(Field2D::zeros(grid()), 1.0, 0.0);
    let (dv, dc, rho_dot) = rhs_modulated(&s, reference()).unwrap();
    assert!(dv.max_abs() < 1e-12, "{}", dv.max_abs());
    assert!(dc.abs() < 1e-12);
    assert!((rho_dot - 1.0).abs() < 1e-12);
    let flow = ModulatedFlow::new(reference().clone(), 0.0);
    let k = flow.rhs(&Field2D::zeros(grid()), 1.0, 1.0).unwrap();
    assert!(k.n.max_abs() < 1e-12 && k.alpha.abs() < 1e-12 && k.beta.abs() < 1e-12);
}

#[test]
fn modulated_flow_matches_refitted_full_flow() {
    let g = grid();
    let v0 = orthogonal(&bump(0.02, -3.0, 0.7)).dealiased();
    let s0 = ModulatedState::new(orthogonal(&v0), 1.05, 0.4);
    let dt = 1e-3;
    let flow = ModulatedFlow::new(reference().clone(), dt);
    let traj = flow.trajectory(&s0, &Coupling::Full, 1000).unwrap();
    let full = FullFlow::new(g, dt).advance(&assemble_state(&s0), 1000).unwrap();
    let end = traj.last().unwrap();
    let fit = fit_modulation(&full, &spec().profile, end.c, end.rho, &FitOptions::default()).unwrap();
    assert!((fit.c - end.c).abs() < 1e-6, "c: {} vs {}", fit.c, end.c);
    assert!((fit.rho - end.rho).abs() < 1e-6, "rho: {} vs {}", fit.rho, end.rho);
    let dv = h1_norm(&(fit.v - &end.v));
    assert!(dv < 1e-6, "v mismatch {dv:e}");
    let (pq, pdq) = pairings(&end.v);
    let nv = end.v.norm_l2();
    assert!(pq.abs() < 1e-6 * nv && pdq.abs() < 1e-6 * nv);
}

#[test]
fn localized_flow_reduces_to_both_limits() {
    let params = CutoffParams::default();
    let dt = 1e-3;
    let big = ModulatedState::new(orthogonal(&bump(0.1, 2.0, 0.0)), 1.0, 0.0);
    assert!(h1_norm_sq(&big.v) >= 2.0 * params.delta.powi(2));
    let a = step_localized(&big, &params, reference(), dt).unwrap();
    let b = step_linear(&big, big.c, reference(), dt).unwrap();
    assert_eq!(a.v.values(), b.v.values());
    assert_eq!((a.c, a.rho), (b.c, b.rho));

    let small = ModulatedState::new(orthogonal(&bump(1e-4, 2.0, 0.0)), 1.0 + 1e-4, 0.0);
    assert_eq!(chi_delta(&small.v, small.c, 1.0, &params), 1.0);
    let a = step_localized(&small, &params, reference(), dt).unwrap();
    let b = step_modulated(&small, reference(), dt).unwrap();
    assert_eq!(a.v.values(), b.v.values());
    assert_eq!((a.c, a.rho), (b.c, b.rho));
}

#[test]
fn localized_flow_preserves_translation_and_speed_components() {
    let params = CutoffParams::default();
    let d = Decomposer::new(spec().clone());
    let v0 = orthogonal(&bump(1.2e-3, -1.0, 0.2));
    let offset = (1.5 * params.delta.powi(2) - h1_norm_sq(&v0)).sqrt();
    let mut s = ModulatedState::new(v0, 1.0 + offset, 0.0);
    let chi0 = chi_delta(&s.v, s.c, 1.0, &params);
    assert!(chi0 > 0.0 && chi0 < 1.0, "start inside the transition layer, chi = {chi0}");
    let d0 = d.decompose(&s.v).unwrap();
    let flow = ModulatedFlow::new(reference().clone(), 1e-3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        s = flow.step(&s, &Coupling::Localized(params)).unwrap();
        let dn = d.decompose(&s.v).unwrap();
        worst = worst.max((dn.mu1 - d0.mu1).abs()).max((dn.mu2 - d0.mu2).abs());
    }
    assert!(worst < 1e-8, "mu drift {worst:e}");
}

#[test]
fn semigroup_on_eigenfields_and_kernel() {
    let sg = Semigroup::new(reference().clone());
    let t = 0.7;
    for f in &spec().f_modes {
        let out = sg.apply(&f.plus, t).unwrap();
        let expect = f.plus.scaled((f.lambda * t).exp());
        assert!((out - &expect).norm_l2() < 1e-8 * expect.norm_l2());
        let out = sg.apply(&f.minus, t).unwrap();
        let expect = f.minus.scaled((-f.lambda * t).exp());
        assert!((out - &expect).norm_l2() < 1e-8 * expect.norm_l2());
    }
    let r = reference();
    for k in [&r.dq, &r.dcq] {
        let out = sg.apply(k, t).unwrap();
        assert!((out - k).norm_l2() < 1e-8 * k.norm_l2());
    }
}

#[test]
fn generator_annihilates_symmetry_directions() {
    let r = reference();
    assert!(r.apply_generator(&r.dq).norm_l2() < 1e-7);
    assert!(r.apply_generator(&r.dcq).norm_l2() < 1e-7);
    // the two pairings behind the second identity
    let d2q = r.dq.ddx();
    let lhs = -r.q.dot(&d2q);
    let rhs = r.dq.dot(&r.dq);
    assert!((lhs - rhs).abs() < 1e-10 * rhs);
}

#[test]
fn semigroup_matches_linear_flow() {
    let r = reference();
    let v0 = bump(0.01, 1.5, 0.4);
    let t = 0.5;
    let sg = apply_semigroup(&v0, t, r).unwrap();
    let flow = ModulatedFlow::new(r.clone(), 1e-3);
    let traj = flow.trajectory(&ModulatedState::new(v0.clone(), 1.0, 0.0), &Coupling::Linear { c0: 1.0 }, 500).unwrap();
    let err = (sg - &traj.last().unwrap().v).norm_l2();
    assert!(err < 1e-6 * v0.norm_l2(), "{err:e}");
}

#[test]
fn linear_flow_conservation_laws() {
    let r = reference();
    let d = Decomposer::new(spec().clone());
    let flow = ModulatedFlow::new(r.clone(), 1e-3);
    let lin = Coupling::Linear { c0: 1.0 };

    let mut v0 = bump(0.05, -2.0, 1.1);
    v0.axpy(1.0, &bump(-0.03, 3.0, -0.4).ddy());
    let traj = flow.trajectory(&ModulatedState::new(v0, 1.0, 0.0), &lin, 2000).unwrap();
    let rep = conservation_report(&traj, &d).unwrap();
    assert!(rep.gamma_energy_drift < 1e-6, "{rep:?}");
    assert!(rep.q_pairing_drift < 1e-6, "{rep:?}");
    assert!(rep.dq_pairing_drift < 1e-6, "{rep:?}");

    let f = &spec().f_modes[0];
    let traj = flow.trajectory(&ModulatedState::new(f.plus.clone(), 1.0, 0.0), &lin, 2000).unwrap();
    for s in traj.iter().step_by(200) {
        let g = d.decompose(&s.v).unwrap().gamma;
        assert!(g.norm_l2() < 1e-6 * s.v.norm_l2());
    }

    let gamma_only = d.project(&bump(0.05, 0.5, 0.0), Projection::Gamma).unwrap();
    let traj = flow.trajectory(&ModulatedState::new(gamma_only, 1.0, 0.0), &lin, 2000).unwrap();
    let rep = conservation_report(&traj, &d).unwrap();
    assert!(rep.q_pairing_drift < 1e-6, "{rep:?}");
}

#[test]
fn linear_flow_stays_bounded_over_long_times() {
    // with an unmasked ∂ₓ(Qv) the near-Nyquist band grew like e^{0.9t} at these steps
    let d = Decomposer::new(spec().clone());
    let gamma_only = d.project(&bump(0.05, 0.5, 0.3), Projection::Gamma).unwrap();
    let e0 = d.decompose(&gamma_only).unwrap().gamma_energy(&d);
    for dt in [2.5e-2, 1e-2] {
        let flow = ModulatedFlow::new(reference().clone(), dt);
        let lin = Coupling::Linear { c0: 1.0 };
        let mut s = ModulatedState::new(gamma_only.clone(), 1.0, 0.0);
        for _ in 0..(80.0 / dt) as usize {
            s = flow.step(&s, &lin).unwrap();
        }
        let e = d.decompose(&s.v).unwrap().gamma_energy(&d);
        assert!((e / e0 - 1.0).abs() < 1e-3, "dt {dt}: γ-energy ratio {}", e / e0);
    }
}

fn tangent_setup(v_amp: f64, steps: usize) -> (ModulatedFlow, ReferenceTrajectory) {
    let flow = ModulatedFlow::new(reference().clone(), 1e-3);
    let v0 = orthogonal(&bump(v_amp, -1.0, 0.3));
    let s0 = ModulatedState::new(v0, 1.0 + v_amp, 0.0);
    let traj = ReferenceTrajectory::record(&flow, &s0, &Coupling::Full, steps).unwrap();
    (flow, traj)
}

#[test]
fn tangent_about_soliton_is_linearized_flow() {
    let (flow, traj) = tangent_setup(0.0, 300);
    let f = &spec().f_modes[1];
    let mut ts = TangentState::new(f.plus.clone(), 0.0, &traj);
    for _ in 0..traj.steps() {
        ts = step_tangent(&flow, &ts, &traj).unwrap();
    }
    let t = ts.t(&traj);
    let expect = f.plus.scaled((f.lambda * t).exp());
    assert!((ts.eta - &expect).norm_l2() < 1e-8 * expect.norm_l2());
    assert!(ts.base.max_abs() == 0.0);
}

#[test]
fn tangent_step_is_linear() {
    let (flow, traj) = tangent_setup(0.01, 5);
    let e1 = bump(0.3, 0.0, 0.0);
    let e2 = bump(-0.7, 2.0, 1.0).ddx();
    let run = |eta: &Field2D, a1: f64| {
        let mut ts = TangentState::new(eta.clone(), a1, &traj);
        for _ in 0..traj.steps() {
            ts = step_tangent(&flow, &ts, &traj).unwrap();
        }
        ts.eta
    };
    let sum = run(&(e1.clone() + &e2), 0.8);
    let parts = run(&e1, 0.3) + &run(&e2, 0.5);
    let scale = parts.max_abs().max(1.0);
    assert!((sum - &parts).max_abs() < 1e-10 * scale);
}

#[test]
fn tangent_matches_finite_differences() {
    let (flow, traj) = tangent_setup(0.01, 1000);
    let eta0 = orthogonal(&bump(1.0, 1.0, -0.5));
    let hs = [1e-2, 1e-3, 1e-4];
    let errs = directional_derivative_errors(&flow, &traj, &eta0, 0.5, &hs).unwrap();
    let slope = (errs[0].ln() - errs[2].ln()) / (hs[0].ln() - hs[2].ln());
    assert!((slope - 1.0).abs() < 0.2, "slope {slope} from {errs:?}");
}

#[test]
fn tangent_rejects_steps_past_the_trajectory() {
    let (flow, traj) = tangent_setup(0.0, 1);
    let ts = TangentState::new(Field2D::zeros(grid()), 0.0, &traj);
    let ts = step_tangent(&flow, &ts, &traj).unwrap();
    assert!(matches!(step_tangent(&flow, &ts, &traj), Err(DynError::TrajectoryMismatch { .. })));
    let other = ModulatedFlow::new(reference().clone(), 2e-3);
    let ts = TangentState::new(Field2D::zeros(grid()), 0.0, &traj);
    assert!(matches!(step_tangent(&other, &ts, &traj), Err(DynError::StepMismatch { .. })));
}

#[test]
fn cutoff_values() {
    let p = CutoffParams { delta: 0.25 };
    let zero = Field2D::zeros(grid());
    assert_eq!(chi_delta(&zero, 1.0, 1.0, &p), 1.0);
    assert_eq!(chi_delta(&zero, 1.25, 1.0, &p), 1.0);
    assert_eq!(chi_delta(&zero, 1.0 + 3f64.sqrt() * 0.25, 1.0, &p), 0.0);
    let mut prev = 1.0;
    for i in 0..=100 {
        let x = chi(1.0 + i as f64 / 100.0);
        assert!((0.0..=1.0).contains(&x) && x <= prev);
        prev = x;
    }
}

#[test]
fn singular_modulation_is_reported() {
    let flow = ModulatedFlow::new(reference().clone(), 1e-3);
    // at c = c*, v = −Q* makes the translation column vanish
    let v = reference().q.scaled(-1.0);
    let r = flow.rhs(&v, 1.0, 1.0);
    assert!(matches!(r, Err(DynError::SingularModulation { .. })), "{r:?}");
    assert!(matches!(flow.rhs(&Field2D::zeros(grid()), -1.0, 1.0), Err(DynError::BadSpeed(_))));
}

#[test]
fn snapshot_roundtrip() {
    let s = ModulatedState { v: bump(0.3, 1.0, 0.2), c: 1.1, rho: -0.25, t: 3.5 };
    let mut buf = Vec::new();
    write_snapshot(&mut buf, &s).unwrap();
    assert_eq!(&buf[..4], b"ZKS1");
    assert_eq!(buf.len(), 4 + 8 + 40 + 8 * grid().len());
    let back = read_snapshot(buf.as_slice()).unwrap();
    assert_eq!(back.v.values(), s.v.values());
    assert_eq!((back.c, back.rho, back.t), (s.c, s.rho, s.t));
    assert!(back.v.grid().same_as(grid()));
    assert!(matches!(read_snapshot(&buf[..10]), Err(DynError::Io(_))));
    buf[0] = b'X';
    assert!(matches!(read_snapshot(buf.as_slice()), Err(DynError::Format(_))));
}

#[test]
fn localized_estimate_constants_are_stable_under_refinement() {
    let measure = |nx: usize| {
        let g = Grid2D::new(48.0, nx, 1.0, 8).unwrap();
        let spec = Arc::new(unstable_modes(1.0, 1.0, &g).unwrap());
        let r = Arc::new(Reference::new(spec.clone()));
        let d = Decomposer::new(spec);
        let raw = Field2D::from_fn(&g, |x, y| 4e-3 * (-(x + 1.0).powi(2) / 3.0).exp() * (1.0 + 0.5 * (y + 0.3).cos()));
        let mut v = raw.clone();
        v.axpy(-1.0, &d.project(&raw, Projection::P0).unwrap());
        let s0 = ModulatedState::new(v, 1.0 + 2e-3, 0.0);
        localized_estimates(&s0, &CutoffParams::default(), &r, 1.0, 1e-2).unwrap()
    };
    let a = measure(512);
    let b = measure(1024);
    for (x, y) in [
        (a.norm_ratio, b.norm_ratio),
        (a.duhamel_constant, b.duhamel_constant),
        (a.gamma_constant, b.gamma_constant),
    ] {
        assert!(x.is_finite() && y.is_finite());
        assert!((x - y).abs() <= 0.1 * x.abs().max(y.abs()) + 1e-12, "{a:?} vs {b:?}");
    }
    assert!(a.norm_ratio < 2.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cutoff_stays_in_unit_interval(r in -1.0f64..5.0) {
        let x = chi(r);
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert!(chi(r + 0.01) <= x);
    }

    #[test]
    fn tangent_is_linear_in_random_directions(s1 in -2.0f64..2.0, s2 in -2.0f64..2.0, a in -1.0f64..1.0) {
        let (flow, traj) = tangent_setup(0.01, 3);
        let e = bump(0.2, 1.0, 0.5);
        let run = |eta: &Field2D, a1: f64| {
            let mut ts = TangentState::new(eta.clone(), a1, &traj);
            for _ in 0..traj.steps() {
                ts = step_tangent(&flow, &ts, &traj).unwrap();
            }
            ts.eta
        };
        let lhs = run(&e.scaled(s1 + s2), a * (s1 + s2));
        let rhs = run(&e.scaled(s1), a * s1) + &run(&e.scaled(s2), a * s2);
        prop_assert!((lhs - &rhs).max_abs() < 1e-10 * rhs.max_abs().max(1.0));
    }
}
