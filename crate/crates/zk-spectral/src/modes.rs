use std::f64::consts::PI;
use std::sync::Arc;

use zk_grid::{Field1D, Field2D, Grid2D};
use zk_soliton::{mode_shift, n0, soliton, SolitonProfile};

use crate::eigen::*;
use crate::operator::{apply_dense, weighted_schrodinger_matrix};
use crate::SpectralError;

/// Unstable/stable eigenpair of `∂ₓ(𝓛_{c*} + k²/L²)` on the periodic box.
#[derive(Clone, Debug)]
pub struct TransverseMode {
    pub k: usize,
    /// Box eigenvalue, the rate seen by the discretized dynamics.
    pub lambda: f64,
    /// Eigenvalue of the same operator on the line.
    pub lambda_line: f64,
    pub f_plus: Field1D,
    pub f_minus: Field1D,
    /// `(𝓛 + k²/L²) f_plus` and `(𝓛 + k²/L²) f_minus`.
    pub lf_plus: Field1D,
    pub lf_minus: Field1D,
    /// Relative gap between `f_plus(x)` and `−f_minus(−x)` when `f_minus`
    /// comes from its own eigensolve.
    pub symmetry_error: f64,
    pub residual_plus: f64,
    pub residual_minus: f64,
}

/// Sign of the eigenfield: `+` unstable, `−` stable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// `F_k^{±,j}` with `j = 0` the cosine and `j = 1` the sine in `y`, together
/// with `𝕃_{c*} F_k^{±,j}`.
#[derive(Clone, Debug)]
pub struct EigenField {
    pub k: usize,
    pub j: usize,
    pub lambda: f64,
    pub plus: Field2D,
    pub minus: Field2D,
    pub l_plus: Field2D,
    pub l_minus: Field2D,
}

impl EigenField {
    pub fn field(&self, b: Branch) -> &Field2D {
        match b {
            Branch::Plus => &self.plus,
            Branch::Minus => &self.minus,
        }
    }
    pub fn l_field(&self, b: Branch) -> &Field2D {
        match b {
            Branch::Plus => &self.l_plus,
            Branch::Minus => &self.l_minus,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralData {
    pub c_star: f64,
    pub torus_scale: f64,
    pub n0: usize,
    pub modes: Vec<TransverseMode>,
    pub k_star_max: Option<f64>,
    pub k_star_min: Option<f64>,
    /// Ordered by `(k, j)`.
    pub f_modes: Vec<EigenField>,
    pub profile: SolitonProfile,
}

impl SpectralData {
    pub fn grid(&self) -> &Arc<Grid2D> {
        self.profile.grid()
    }
    /// Number of unstable directions, `2 n0`.
    pub fn dim(&self) -> usize {
        self.f_modes.len()
    }
    pub fn is_stable(&self) -> bool {
        self.n0 == 0
    }
}

fn sign_fix(profile: &SolitonProfile, f: &mut [f64], weight: impl Fn(f64) -> f64) {
    let grid = profile.grid();
    let ground = profile.q_three_halves();
    let proj: f64 = (0..f.len()).map(|j| f[j] * ground.values()[j] * weight(grid.x(j))).sum();
    if proj < 0.0 {
        f.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Normalized mode pair for wavenumber `k` on the periodic box.
pub fn transverse_mode(profile: &SolitonProfile, k: usize, torus_scale: f64) -> Result<TransverseMode, SpectralError> {
    let grid = profile.grid();
    let dx = grid.dx();
    let a = mode_shift(k, torus_scale);
    let (gen, l) = box_generator(profile, a);
    let lambda0 = lambda_box(profile, &gen, a)?.ok_or(SpectralError::UnresolvedMode {
        k,
        x_half_width: grid.x_half_width(),
    })?;
    let mut f = inverse_iteration(&gen, perturbed_shift(lambda0), &start_vector(profile));
    sign_fix(profile, &mut f, |_| 1.0);
    let mut fm: Vec<f64> = reflect(&f).into_iter().map(|v| -v).collect();

    let lfm = apply_dense(&l, &fm);
    let lambda = dot(dx, &lfm, &apply_dense(&gen, &f)) / dot(dx, &lfm, &f);
    let residual_plus = eigen_residual(&gen, &f, lambda);
    let residual_minus = eigen_residual(&gen, &fm, -lambda);
    let worst = residual_plus.max(residual_minus);
    if !(worst <= 1e-6) {
        return Err(SpectralError::Residual { k, residual: worst });
    }

    let p = dot(dx, &f, &lfm);
    if !(p > 0.0) {
        return Err(SpectralError::NonPositivePairing { k, value: p });
    }
    let target = 1.0 / (PI * torus_scale);
    let s = (target / p).sqrt();
    f.iter_mut().for_each(|v| *v *= s);
    fm.iter_mut().for_each(|v| *v *= s);
    let lf_plus = apply_dense(&l, &f);
    let lf_minus = apply_dense(&l, &fm);

    let mut ind = inverse_iteration(&gen, perturbed_shift(-lambda), &reflect(&start_vector(profile)));
    let t = target / dot(dx, &lf_plus, &ind);
    ind.iter_mut().for_each(|v| *v *= t);
    let ind_r = reflect(&ind);
    let gap = f.iter().zip(&ind_r).fold(0.0f64, |m, (a, b)| m.max((a + b).abs()));
    let symmetry_error = gap / max_abs(&f);

    let lambda_line = lambda_of_profile(profile, a)?.ok_or(SpectralError::UnresolvedMode {
        k,
        x_half_width: grid.x_half_width(),
    })?;

    Ok(TransverseMode {
        k,
        lambda,
        lambda_line,
        f_plus: field(profile, f),
        f_minus: field(profile, fm),
        lf_plus: field(profile, lf_plus),
        lf_minus: field(profile, lf_minus),
        symmetry_error,
        residual_plus,
        residual_minus,
    })
}

/// All unstable transverse modes of the line soliton of speed `c_star` on
/// `ℝ × T_L`, with `L` the torus scale of `grid`.
pub fn unstable_modes(c_star: f64, torus_scale: f64, grid: &Arc<Grid2D>) -> Result<SpectralData, SpectralError> {
    if (grid.torus_scale() - torus_scale).abs() > 1e-12 * torus_scale.abs() {
        return Err(SpectralError::ScaleMismatch { requested: torus_scale, grid: grid.torus_scale() });
    }
    let profile = soliton(c_star, grid)?;
    let n = n0(c_star, torus_scale)?;
    if n > grid.max_resolved_mode_y() {
        return Err(SpectralError::TransverseUnresolved { n0: n, ny: grid.ny() });
    }
    let modes = (1..=n)
        .map(|k| transverse_mode(&profile, k, torus_scale))
        .collect::<Result<Vec<_>, _>>()?;
    let k_star_max = modes.iter().map(|m| m.lambda).reduce(f64::max);
    let k_star_min = modes.iter().map(|m| m.lambda).reduce(f64::min);
    let mut f_modes = Vec::with_capacity(2 * n);
    for m in &modes {
        let kk = m.k as f64 / torus_scale;
        for j in 0..2 {
            let g = move |y: f64| if j == 0 { (kk * y).cos() } else { (kk * y).sin() };
            f_modes.push(EigenField {
                k: m.k,
                j,
                lambda: m.lambda,
                plus: Field2D::separable(&m.f_plus, g),
                minus: Field2D::separable(&m.f_minus, g),
                l_plus: Field2D::separable(&m.lf_plus, g),
                l_minus: Field2D::separable(&m.lf_minus, g),
            });
        }
    }
    Ok(SpectralData { c_star, torus_scale, n0: n, modes, k_star_max, k_star_min, f_modes, profile })
}

/// Returns `(f⁺, 𝓛(k) g⁺)` with `g⁺(x) = f⁺(−x)` after checking that it is
/// negative and that `(f⁺, 𝓛(k) f⁺)` vanishes.
pub fn check_pairing_sign(mode: &TransverseMode) -> Result<f64, SpectralError> {
    let self_pairing = mode.lf_plus.dot(&mode.f_plus);
    if self_pairing.abs() > 1e-8 {
        return Err(SpectralError::SelfPairing { value: self_pairing });
    }
    let value = mode.lf_plus.dot(&mode.f_plus.reflect());
    if !(value < 0.0) {
        return Err(SpectralError::SignViolation { value });
    }
    Ok(value)
}

/// Eigenpair of the line problem, for reporting rates and profiles that do
/// not depend on the box size.
#[derive(Clone, Debug)]
pub struct LineMode {
    pub k: usize,
    pub lambda: f64,
    /// `(f⁺, 𝓛(k) g⁺)`, equal to `−1/(πL)` after normalization.
    pub check_pairing: f64,
    pub check_symmetry: f64,
    pub f_plus: Field1D,
    pub f_minus: Field1D,
}

/// Computes `f⁺` through `g = e^{γx} f⁺`; stable-side quantities use
/// `e^{−γx} f⁻`, which is the reflection of `g`.
pub fn line_mode(profile: &SolitonProfile, k: usize, torus_scale: f64) -> Result<LineMode, SpectralError> {
    let grid = profile.grid();
    let dx = grid.dx();
    let a = mode_shift(k, torus_scale);
    let gamma = WEIGHT * profile.c.sqrt();
    let (gen, _) = weighted_generator(profile, a, gamma);
    let lambda0 = lambda_box(profile, &gen, a)?.ok_or(SpectralError::NoLineEigenvalue { k, a })?;
    let mut g = inverse_iteration(&gen, perturbed_shift(lambda0), &start_vector(profile));
    sign_fix(profile, &mut g, |x| (-gamma * x).exp());

    let (_, l_up) = weighted_schrodinger_matrix(profile, a, -gamma);
    let (gen_up, _) = weighted_generator(profile, a, -gamma);
    let h: Vec<f64> = reflect(&g).into_iter().map(|v| -v).collect();
    let lh = apply_dense(&l_up, &h);
    let lambda = dot(dx, &lh, &apply_dense(&gen, &g)) / dot(dx, &lh, &g);
    let residual = eigen_residual(&gen, &g, lambda);
    if !(residual <= 1e-6) {
        return Err(SpectralError::Residual { k, residual });
    }
    let p = dot(dx, &g, &lh);
    if !(p > 0.0) {
        return Err(SpectralError::NonPositivePairing { k, value: p });
    }
    let target = 1.0 / (PI * torus_scale);
    let s = (target / p).sqrt();
    g.iter_mut().for_each(|v| *v *= s);

    let check_pairing = dot(dx, &g, &apply_dense(&l_up, &reflect(&g)));
    let mut ind = inverse_iteration(&gen_up, perturbed_shift(-lambda), &reflect(&start_vector(profile)));
    let t = target / dot(dx, &g, &apply_dense(&l_up, &ind));
    ind.iter_mut().for_each(|v| *v *= t);
    let ind_r = reflect(&ind);
    let gap = g.iter().zip(&ind_r).fold(0.0f64, |m, (a, b)| m.max((a + b).abs()));
    let check_symmetry = gap / max_abs(&g);

    let f_plus = Field1D::from_values(grid, (0..g.len()).map(|j| (-gamma * grid.x(j)).exp() * g[j]).collect())
        .expect("finite eigenfunction");
    let f_minus = f_plus.reflect().scaled(-1.0);
    Ok(LineMode { k, lambda, check_pairing, check_symmetry, f_plus, f_minus })
}

/// Line modes for `k = 1..n0`.
pub fn line_modes(c_star: f64, torus_scale: f64, grid: &Arc<Grid2D>) -> Result<Vec<LineMode>, SpectralError> {
    let profile = soliton(c_star, grid)?;
    let n = n0(c_star, torus_scale)?;
    (1..=n).map(|k| line_mode(&profile, k, torus_scale)).collect()
}
