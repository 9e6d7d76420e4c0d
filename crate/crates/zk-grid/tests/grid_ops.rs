use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use zk_grid::{energy, grad_norm_sq, h1_norm, inner_product, mass, Field2D, Grid2D, GridError};

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

fn q(c: f64, x: f64) -> f64 {
    1.5 * c * sech(0.5 * c.sqrt() * x).powi(2)
}

fn dq(c: f64, x: f64) -> f64 {
    let u = 0.5 * c.sqrt() * x;
    -1.5 * c * c.sqrt() * sech(u).powi(2) * u.tanh()
}

/// Composite Simpson rule on a fine uniform mesh.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn grid(l: f64) -> Arc<Grid2D> {
    Grid2D::new(24.0, 256, l, 8).unwrap()
}

#[test]
fn rejects_bad_counts() {
    assert!(matches!(Grid2D::new(10.0, 100, 1.0, 8), Err(GridError::BadCount { .. })));
    assert!(matches!(Grid2D::new(10.0, 64, 1.0, 4), Err(GridError::BadCount { .. })));
    assert!(matches!(Grid2D::new(-1.0, 64, 1.0, 8), Err(GridError::BadLength { .. })));
}

#[test]
fn spacings_and_wavenumbers() {
    let g = Grid2D::new(10.0, 64, 2.0, 16).unwrap();
    assert!((g.dx() - 20.0 / 64.0).abs() < 1e-15);
    assert!((g.dy() - 2.0 * PI * 2.0 / 16.0).abs() < 1e-15);
    assert_eq!(g.mode_y(3), 3);
    assert!((g.eta(3) - 1.5).abs() < 1e-15);
    assert_eq!(g.max_resolved_mode_y(), 5);
    // 2/3 rule keeps |k| <= 21 of 64 x-modes and |n| <= 5 of 16 y-modes.
    let kept_x = (0..64).filter(|&j| g.keep_x(j)).count();
    let kept_y = (0..16).filter(|&m| g.keep_y(m)).count();
    assert_eq!(kept_x, 43);
    assert_eq!(kept_y, 11);
}

#[test]
fn soliton_mass_matches_closed_form() {
    for l in [1.0, 2.5] {
        let g = grid(l);
        let qf = Field2D::from_fn(&g, |x, _| q(1.0, x));
        let expected = 2.0 * PI * l * 6.0;
        assert!((inner_product(&qf, &qf).unwrap() - expected).abs() < 1e-10 * expected);
        assert!((mass(&qf) - expected).abs() < 1e-10 * expected);
    }
    let g = Grid2D::new(24.0 / 2.0, 256, 1.0, 8).unwrap();
    let qf = Field2D::from_fn(&g, |x, _| q(4.0, x));
    let expected = 2.0 * PI * 6.0 * 8.0;
    assert!((mass(&qf) - expected).abs() < 1e-10 * expected);
}

#[test]
fn inner_product_basic_identities() {
    let g = grid(1.0);
    let qf = Field2D::from_fn(&g, |x, _| q(1.0, x));
    let zero = Field2D::zeros(&g);
    assert_eq!(inner_product(&qf, &zero).unwrap(), 0.0);
    assert!(inner_product(&qf.ddx(), &qf).unwrap().abs() < 1e-12);
    let other = Grid2D::new(24.0, 128, 1.0, 8).unwrap();
    assert_eq!(inner_product(&qf, &Field2D::zeros(&other)), Err(GridError::GridMismatch));
}

#[test]
fn h1_norm_matches_quadrature() {
    let g = grid(1.0);
    let qf = Field2D::from_fn(&g, |x, _| q(1.0, x));
    let dq2 = simpson(|x| dq(1.0, x).powi(2), -24.0, 24.0, 20 * 256);
    let expected = (2.0 * PI * (6.0 + dq2)).sqrt();
    assert!((h1_norm(&qf) - expected).abs() < 1e-10 * expected);
    // symbolic value of ∫Q₁'² is 6/5
    assert!((dq2 - 1.2).abs() < 1e-10);

    assert_eq!(h1_norm(&Field2D::zeros(&g)), 0.0);
    let one = Field2D::from_fn(&g, |_, _| 1.0);
    assert!((h1_norm(&one) - g.area().sqrt()).abs() < 1e-12 * g.area().sqrt());
}

#[test]
fn soliton_energy_matches_quadrature() {
    for c in [1.0f64, 2.0] {
        let g = Grid2D::new(24.0 / c.sqrt(), 256, 1.0, 8).unwrap();
        let qf = Field2D::from_fn(&g, |x, _| q(c, x));
        let xh = 24.0 / c.sqrt();
        let dq2 = simpson(|x| dq(c, x).powi(2), -xh, xh, 20 * 256);
        // ∫Q_c³ = 7.2 c^{5/2}
        let cubic = 7.2 * c.powf(2.5);
        let expected = 2.0 * PI * (0.5 * dq2 - cubic / 3.0);
        assert!((energy(&qf) - expected).abs() < 1e-9 * expected.abs(), "c={c}");
    }
}

#[test]
fn derivatives_of_single_modes() {
    let g = Grid2D::new(5.0, 64, 1.5, 16).unwrap();
    let xh = g.x_half_width();
    let l = g.torus_scale();
    let s = Field2D::from_fn(&g, |x, _| (PI * x / xh).sin());
    let ds = s.ddx();
    for (j, v) in ds.values().iter().enumerate() {
        let x = g.x(j % g.nx());
        assert!((v - PI / xh * (PI * x / xh).cos()).abs() < 1e-13);
    }
    let cy = Field2D::from_fn(&g, |_, y| (y / l).cos());
    let dcy = cy.ddy();
    for (i, v) in dcy.values().iter().enumerate() {
        let y = g.y(i / g.nx());
        assert!((v + (y / l).sin() / l).abs() < 1e-13);
    }
    let c = Field2D::from_fn(&g, |_, _| 3.0);
    assert!(c.laplacian().max_abs() < 1e-13);
}

#[test]
fn translation_is_exact_for_band_limited_fields() {
    let g = Grid2D::new(8.0, 64, 1.0, 8).unwrap();
    let xh = g.x_half_width();
    let f = Field2D::from_fn(&g, |x, y| (3.0 * PI * x / xh).sin() * y.cos() + (PI * x / xh).cos());
    let shifted = f.translate(0.37);
    let exact = Field2D::from_fn(&g, |x, y| {
        let x = x - 0.37;
        (3.0 * PI * x / xh).sin() * y.cos() + (PI * x / xh).cos()
    });
    assert!((&shifted - &exact).max_abs() < 1e-13);
    // reflection is an involution
    assert_eq!(f.reflect_x().reflect_x().values(), f.values());
}

fn smooth_field(g: &Arc<Grid2D>, coeffs: &[(f64, f64, f64)]) -> Field2D {
    let xh = g.x_half_width();
    let l = g.torus_scale();
    Field2D::from_fn(g, |x, y| {
        let mut s = 0.0;
        for (i, &(a, b, w)) in coeffs.iter().enumerate() {
            let k = (i % 5 + 1) as f64;
            let n = (i % 2) as f64;
            s += a * (k * PI * x / xh + w).sin() * (n * y / l).cos() + b * (-(x - w).powi(2)).exp();
        }
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval_holds(coeffs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -3.0..3.0f64), 1..6)) {
        let g = Grid2D::new(8.0, 64, 1.0, 8).unwrap();
        let f = smooth_field(&g, &coeffs);
        let direct = f.dot(&f);
        let spectral = f.spectrum().weighted_norm_sq(|_, _| 1.0);
        prop_assert!((direct - spectral).abs() <= 1e-12 * direct.max(1e-300));
    }

    #[test]
    fn ddx_is_skew(a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -3.0..3.0f64), 1..6),
                   b in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -3.0..3.0f64), 1..6)) {
        let g = Grid2D::new(8.0, 64, 1.0, 8).unwrap();
        let fa = smooth_field(&g, &a);
        let fb = smooth_field(&g, &b);
        let lhs = fa.ddx().dot(&fb);
        let rhs = -fa.dot(&fb.ddx());
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn repeated_ddx_is_second_derivative(a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -3.0..3.0f64), 1..6)) {
        let g = Grid2D::new(8.0, 64, 1.0, 8).unwrap();
        let f = smooth_field(&g, &a).dealiased();
        let twice = f.ddx().ddx();
        let lap_x = &f.laplacian() - &f.ddy().ddy();
        prop_assert!((&twice - &lap_x).max_abs() < 1e-10);
    }

    #[test]
    fn inner_product_is_symmetric_and_bilinear(a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -3.0..3.0f64), 1..4),
                                             b in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -3.0..3.0f64), 1..4),
                                             s in -3.0..3.0f64) {
        let g = Grid2D::new(8.0, 64, 1.0, 8).unwrap();
        let fa = smooth_field(&g, &a);
        let fb = smooth_field(&g, &b);
        prop_assert_eq!(fa.dot(&fb), fb.dot(&fa));
        let lhs = (&fa * s).dot(&fb) + fb.dot(&fb);
        let rhs = (&(&fa * s) + &fb).dot(&fb);
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
        prop_assert!(grad_norm_sq(&fa) >= 0.0);
    }
}
