use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex;
use zk_grid::Field1D;
use zk_soliton::SolitonProfile;

use crate::operator::{apply_dense, diff_matrix, schrodinger_matrix, weighted_schrodinger_matrix};
use crate::SpectralError;

/// Smallest real part accepted as an unstable eigenvalue.
pub const RE_TOL: f64 = 1e-6;
/// Relative bound on the imaginary part of an accepted eigenvalue.
pub const IM_TOL: f64 = 1e-6;
/// Exponential weight `γ = WEIGHT · √c` used to push the essential spectrum
/// of the line operator into the left half-plane.
pub const WEIGHT: f64 = 0.5;

pub(crate) fn real_unstable(eigs: &[Complex<f64>]) -> Vec<f64> {
    let mut out: Vec<f64> = eigs
        .iter()
        .filter(|z| z.re > RE_TOL && z.im.abs() < IM_TOL * z.re.abs().max(1.0))
        .map(|z| z.re)
        .collect();
    out.sort_by(|a, b| b.partial_cmp(a).unwrap());
    out
}

fn single_candidate(cands: Vec<f64>, c: f64, a: f64) -> Result<Option<f64>, SpectralError> {
    match cands.len() {
        0 => Ok(None),
        1 => Ok(Some(cands[0])),
        _ => Err(SpectralError::Ambiguous { c, a, candidates: cands }),
    }
}

fn eigenvalues(m: &Mat<f64>) -> Result<Vec<Complex<f64>>, SpectralError> {
    m.eigenvalues()
        .map_err(|e| SpectralError::Eigensolver(format!("{e:?}")))
}

fn check_shift(a: f64) -> Result<(), SpectralError> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(SpectralError::BadShift(a));
    }
    Ok(())
}

/// Matrices of the line problem in the weighted variable `g = e^{γx} f`:
/// returns `(∂ₓ − γ)` composed with the conjugated Schrödinger operator,
/// together with that Schrödinger operator.
pub(crate) fn weighted_generator(profile: &SolitonProfile, a: f64, gamma: f64) -> (Mat<f64>, Mat<f64>) {
    let (dw, lw) = weighted_schrodinger_matrix(profile, a, gamma);
    (&dw * &lw, lw)
}

/// Positive eigenvalue of `∂ₓ(𝓛_c + a)` on the line.
///
/// The problem is solved for `e^{γx} f` with `γ = WEIGHT·√c`, which moves the
/// essential spectrum to `Re ≤ −γ(c + a − γ²)` so that only the isolated
/// eigenvalue survives the real-part filter. At the endpoint `a = 5c/4` the
/// kernel is verified on `Q_c^{3/2}` and zero is returned.
pub fn lambda_of_profile(profile: &SolitonProfile, a: f64) -> Result<Option<f64>, SpectralError> {
    check_shift(a)?;
    let c = profile.c;
    let crit = 1.25 * c;
    if (a - crit).abs() <= 1e-12 * crit {
        let ground = profile.q_three_halves();
        let l = schrodinger_matrix(profile, a);
        let r = apply_dense(&l, ground.values());
        let resid = r.iter().fold(0.0f64, |m, v| m.max(v.abs())) / ground.max_abs();
        if resid > 1e-6 {
            return Err(SpectralError::KernelCheck { residual: resid });
        }
        return Ok(Some(0.0));
    }
    let (gen, _) = weighted_generator(profile, a, WEIGHT * c.sqrt());
    single_candidate(real_unstable(&eigenvalues(&gen)?), c, a)
}

pub(crate) fn lambda_box(profile: &SolitonProfile, gen: &Mat<f64>, a: f64) -> Result<Option<f64>, SpectralError> {
    single_candidate(real_unstable(&eigenvalues(gen)?), profile.c, a)
}

/// `∂ₓ(−∂ₓ² + c + a − 2Q_c)` on the periodic box and the Schrödinger factor.
pub(crate) fn box_generator(profile: &SolitonProfile, a: f64) -> (Mat<f64>, Mat<f64>) {
    let d1 = diff_matrix(profile.grid(), 1);
    let l = schrodinger_matrix(profile, a);
    (&d1 * &l, l)
}

/// A few steps of shifted inverse iteration, normalized in max-norm.
pub(crate) fn inverse_iteration(m: &Mat<f64>, shift: f64, start: &[f64]) -> Vec<f64> {
    let n = m.nrows();
    let shifted = Mat::from_fn(n, n, |i, j| m[(i, j)] - if i == j { shift } else { 0.0 });
    let lu = shifted.partial_piv_lu();
    let mut x = Mat::from_fn(n, 1, |i, _| start[i]);
    for _ in 0..3 {
        lu.solve_in_place(x.as_mut());
        let s = (0..n).fold(0.0f64, |acc, i| acc.max(x[(i, 0)].abs()));
        for i in 0..n {
            x[(i, 0)] /= s;
        }
    }
    (0..n).map(|i| x[(i, 0)]).collect()
}

pub(crate) fn perturbed_shift(lambda: f64) -> f64 {
    lambda + 1e-12 * lambda.abs().max(1.0)
}

pub(crate) fn dot(dx: f64, a: &[f64], b: &[f64]) -> f64 {
    dx * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

pub(crate) fn reflect(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|j| v[(n - j) % n]).collect()
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Relative residual `‖M f − λ f‖∞ / (|λ| ‖f‖∞)`.
pub(crate) fn eigen_residual(m: &Mat<f64>, f: &[f64], lambda: f64) -> f64 {
    let mf = apply_dense(m, f);
    let r = mf.iter().zip(f).fold(0.0f64, |acc, (a, b)| acc.max((a - lambda * b).abs()));
    r / (lambda.abs() * max_abs(f))
}

pub(crate) fn start_vector(profile: &SolitonProfile) -> Vec<f64> {
    // Deterministic, not orthogonal to the unstable eigenvector.
    let q = profile.q.values();
    let dq = profile.dq_dx.values();
    q.iter().zip(dq).map(|(a, b)| a - 0.7 * b + 1e-3).collect()
}

pub(crate) fn field(profile: &SolitonProfile, v: Vec<f64>) -> Field1D {
    Field1D::from_values(profile.grid(), v).expect("finite eigenvector")
}
