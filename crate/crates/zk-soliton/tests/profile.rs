use zk_grid::{Field1D, Grid2D};
use zk_soliton::*;

fn apply_lc(p: &SolitonProfile, f: &Field1D) -> Field1D {
    let mut out = f.d2x().scaled(-1.0);
    out.axpy(p.c, f);
    out.axpy(-2.0, &p.q.mul_pointwise(f));
    out
}

#[test]
fn peak_heights() {
    assert_eq!(formula::q(1.0, 0.0), 1.5);
    assert_eq!(formula::q(4.0, 0.0), 6.0);
    let g = Grid2D::new(48.0, 512, 1.0, 8).unwrap();
    let p = soliton(1.0, &g).unwrap();
    assert_eq!(p.q.values()[256], 1.5);
}

#[test]
fn samples_match_closed_form() {
    let g = Grid2D::new(30.0, 256, 1.0, 8).unwrap();
    let p = soliton(1.7, &g).unwrap();
    for (j, v) in p.q.values().iter().enumerate() {
        let u = 0.5 * 1.7f64.sqrt() * g.x(j);
        let exact = 1.5 * 1.7 / u.cosh().powi(2);
        assert!((v - exact).abs() < 1e-14);
    }
}

#[test]
fn speed_derivatives_match_finite_differences() {
    let h = 1e-6;
    for c in [0.6, 1.0, 2.3] {
        for x in [-3.1, -0.4, 0.0, 0.7, 2.2, 5.0] {
            let fd = (formula::q(c + h, x) - formula::q(c - h, x)) / (2.0 * h);
            assert!((formula::dq_dc(c, x) - fd).abs() < 1e-8, "dq_dc c={c} x={x}");
            let fd2 = (formula::dq_dc(c + h, x) - formula::dq_dc(c - h, x)) / (2.0 * h);
            assert!((formula::d2q_dc2(c, x) - fd2).abs() < 1e-8, "d2q_dc2 c={c} x={x}");
            let fdx = (formula::dq_dc(c, x + h) - formula::dq_dc(c, x - h)) / (2.0 * h);
            assert!((formula::d2q_dxdc(c, x) - fdx).abs() < 1e-8, "d2q_dxdc c={c} x={x}");
            let fdq = (formula::q(c, x + h) - formula::q(c, x - h)) / (2.0 * h);
            assert!((formula::dq_dx(c, x) - fdq).abs() < 1e-8, "dq_dx c={c} x={x}");
        }
    }
}

#[test]
fn profile_equation_and_kernel_identities() {
    for c in [1.0f64, 2.0] {
        let g = Grid2D::new(48.0 / c.sqrt(), 512, 1.0, 8).unwrap();
        let p = soliton(c, &g).unwrap();
        let resid = &(&p.q.d2x().scaled(-1.0) + &p.q.scaled(c)) - &p.q.mul_pointwise(&p.q);
        assert!(resid.max_abs() < 1e-8, "profile residual {}", resid.max_abs());
        assert!(apply_lc(&p, &p.dq_dx).max_abs() < 1e-8);
        assert!((&apply_lc(&p, &p.dq_dc) + &p.q).max_abs() < 1e-8);
        let pairing = p.dq_dc.dot(&p.q);
        assert!((pairing - dq_dc_dot_q(c)).abs() < 1e-8, "pairing {pairing}");
        assert!((p.q.dot(&p.q) - line_mass(c)).abs() < 1e-8);
    }
}

#[test]
fn rejects_bad_inputs() {
    let g = Grid2D::new(10.0, 128, 1.0, 8).unwrap();
    assert!(matches!(soliton(1.0, &g), Err(SolitonError::DomainTooNarrow { .. })));
    assert_eq!(soliton(0.0, &g).unwrap_err(), SolitonError::BadSpeed(0.0));
    assert!(soliton(-1.0, &g).is_err());
}

#[test]
fn transverse_mode_counts() {
    assert_eq!(n0(1.0, 1.0).unwrap(), 1);
    assert_eq!(n0(1.0, 3.0).unwrap(), 3);
    assert!(matches!(n0(0.8, 1.0), Err(SolitonError::Resonant { .. })));
    assert_eq!(n0(0.5, 1.0).unwrap(), 0);
    assert_eq!(n0(0.81, 1.0).unwrap(), 1);
    assert_eq!(codimension(1.0, 3.0).unwrap(), 6);
}

#[test]
fn thresholds() {
    assert_eq!(stability_threshold(1.0), 0.8);
    assert_eq!(stability_threshold(2.0), 0.2);
    assert!(stability_threshold(1e8) < 1e-15);
}
