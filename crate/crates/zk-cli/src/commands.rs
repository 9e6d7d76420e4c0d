use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use zk_decomp::{fit_modulation, DecompError, Decomposer, FitOptions};
use zk_dynamics::snapshot::{read_snapshot, write_snapshot};
use zk_dynamics::{assemble_state, DynError, FullFlow, ModulatedState};
use zk_grid::{energy, h1_norm, mass, Field2D, Grid2D};
use zk_manifold::{random_graph_point, shoot_graph, ManifoldError, ShootConfig, ShootContext, Tube};
use zk_metric::{quasi_axioms_report, random_tube_triple, MetricError, MobileMetric, MobileParams};
use zk_soliton::{soliton, SolitonError};
use zk_spectral::{line_modes, unstable_modes, SpectralData, SpectralError};

use crate::config::{RunConfig, Shape};
use crate::output::{float, Table};
use crate::{CliError, Report};

type Echo = [(String, String)];

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn from_soliton(e: SolitonError) -> CliError {
    CliError::Config(e.to_string())
}

fn from_spectral(e: SpectralError) -> CliError {
    match e {
        SpectralError::Soliton(s) => from_soliton(s),
        SpectralError::TransverseUnresolved { .. } | SpectralError::UnresolvedMode { .. } | SpectralError::ScaleMismatch { .. } => {
            CliError::Config(e.to_string())
        }
        other => numerical(other),
    }
}

impl From<DynError> for CliError {
    fn from(e: DynError) -> Self {
        numerical(e)
    }
}
impl From<ManifoldError> for CliError {
    fn from(e: ManifoldError) -> Self {
        numerical(e)
    }
}
impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        numerical(e)
    }
}
impl From<DecompError> for CliError {
    fn from(e: DecompError) -> Self {
        numerical(e)
    }
}

pub fn grid(cfg: &RunConfig) -> Result<Arc<Grid2D>, CliError> {
    Grid2D::new(cfg.x_half_width, cfg.nx, cfg.torus_scale, cfg.ny).map_err(|e| CliError::Config(e.to_string()))
}

pub fn spectral_data(cfg: &RunConfig, grid: &Arc<Grid2D>) -> Result<Arc<SpectralData>, CliError> {
    unstable_modes(cfg.c_star, cfg.torus_scale, grid).map(Arc::new).map_err(from_spectral)
}

/// `k, λ_k, (F⁺, 𝕃F⁻), max|f⁺(x) + f⁻(−x)| / max|f⁺|` for every unstable
/// transverse mode of the line problem.
pub fn spectrum(cfg: &RunConfig, echo: &Echo) -> Result<Report, CliError> {
    let g = grid(cfg)?;
    let modes = line_modes(cfg.c_star, cfg.torus_scale, &g).map_err(from_spectral)?;
    let mut t = Table::new("spectrum", echo, &["k", "lambda", "check_pairing", "check_symmetry"]);
    for m in &modes {
        // the 1-D pairing (f⁺, 𝓛 g⁺) is normalized to −1/(πL); on ℝ × T_L
        // this is (F⁺, 𝕃F⁻) = 1
        let pairing = -PI * cfg.torus_scale * m.check_pairing;
        t.push(vec![m.k.to_string(), float(m.lambda), float(pairing), float(m.check_symmetry)]);
    }
    let threshold = 4.0 / (5.0 * cfg.torus_scale.powi(2));
    t.note("n0", modes.len().to_string());
    t.note("codimension", (2 * modes.len()).to_string());
    t.note("threshold_speed", float(threshold));
    if modes.is_empty() {
        t.note("note", "stable regime");
    }
    let path = cfg.output_dir.join("spectrum.csv");
    t.write(&path)?;
    let mut values = vec![("n0".to_string(), modes.len().to_string())];
    if let Some(m) = modes.iter().max_by(|a, b| a.lambda.total_cmp(&b.lambda)) {
        values.push(("k_star".into(), float(m.lambda)));
    } else {
        values.push(("note".into(), "stable regime".into()));
    }
    Ok(Report { files: vec![path], values })
}

/// `Q_{c*}` plus the configured perturbation, dealiased.
pub fn initial_field(cfg: &RunConfig, g: &Arc<Grid2D>) -> Result<Field2D, CliError> {
    let mut u = soliton(cfg.c_star, g).map_err(from_soliton)?.q_2d();
    if cfg.perturbation > 0.0 {
        let p = match cfg.shape {
            Shape::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                let v = zk_metric::random_tube_state(&mut rng, g, cfg.c_star, 1.0).v;
                v.scaled(cfg.perturbation / h1_norm(&v))
            }
            Shape::Unstable => {
                let spec = spectral_data(cfg, g)?;
                let f = spec.f_modes.first().ok_or_else(|| {
                    CliError::Config("perturbation_shape = unstable needs an unstable speed".into())
                })?;
                f.plus.scaled(cfg.perturbation)
            }
        };
        u.axpy(1.0, &p);
    }
    Ok(u.dealiased())
}

/// Evolves the configured initial field by the ZK equation, writing
/// snapshots and a time series of conserved quantities and tube distance.
pub fn simulate(cfg: &RunConfig, echo: &Echo) -> Result<Report, CliError> {
    let g = grid(cfg)?;
    let dt = cfg.dt.unwrap_or(1e-2);
    let t_max = cfg.t_max.unwrap_or(10.0);
    let u0 = initial_field(cfg, &g)?;
    let tube = Tube::new(&g, cfg.c_star)?;
    let flow = FullFlow::new(&g, dt);
    let steps = (t_max / dt).round() as usize;
    let snap_every = ((cfg.snapshot_every / dt).round() as usize).max(1);
    let check_every = 10usize.min(snap_every);
    let snap_dir = cfg.output_dir.join("snapshots");
    std::fs::create_dir_all(&snap_dir).map_err(|e| CliError::Io(format!("{}: {e}", snap_dir.display())))?;

    let mut series = Table::new("simulate", echo, &["t", "mass", "energy", "tube_distance", "q_min"]);
    series.note("dt_resolved", float(dt));
    series.note("t_max_resolved", float(t_max));
    let (m0, e0) = (mass(&u0), energy(&u0));
    let mut files = Vec::new();
    let mut index = 0usize;
    let mut record = |n: usize, u: &Field2D, series: &mut Table| -> Result<f64, CliError> {
        let t = n as f64 * dt;
        let d = tube.distance(u);
        series.push(vec![float(t), float(mass(u)), float(energy(u)), float(d.dist), float(d.q_min)]);
        // stored as u = τ_ρ(v + Q_c) with ρ the tube minimizer
        let q = soliton(cfg.c_star, &g).map_err(from_soliton)?.q_2d();
        let mut v = u.translate(-d.q_min);
        v.axpy(-1.0, &q);
        let state = ModulatedState { v, c: cfg.c_star, rho: d.q_min, t };
        let path = snap_dir.join(format!("snap_{index:06}.zks"));
        index += 1;
        let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        write_snapshot(BufWriter::new(file), &state)?;
        files.push(path);
        Ok(d.dist)
    };

    let mut u = u0.clone();
    let mut d_prev = record(0, &u, &mut series)?;
    let mut exit: Option<f64> = if d_prev >= cfg.epsilon { Some(0.0) } else { None };
    let mut n = 0usize;
    while n < steps {
        let to_snap = snap_every - n % snap_every;
        let chunk = check_every.min(to_snap).min(steps - n);
        u = flow.advance(&u, chunk)?;
        n += chunk;
        let d = if n % snap_every == 0 || n == steps { record(n, &u, &mut series)? } else { tube.distance(&u).dist };
        if exit.is_none() && d >= cfg.epsilon {
            let t1 = n as f64 * dt;
            let t0 = t1 - chunk as f64 * dt;
            exit = Some(t0 + (cfg.epsilon - d_prev) / (d - d_prev) * (t1 - t0));
        }
        d_prev = d;
    }
    let ts_path = cfg.output_dir.join("timeseries.csv");
    series.write(&ts_path)?;

    let final_dist = tube.distance(&u).dist;
    let exit_text = exit.map(float).unwrap_or_else(|| "none".into());
    let values = vec![
        ("exit_time".to_string(), exit_text),
        ("final_tube_distance".to_string(), float(final_dist)),
        ("mass_drift".to_string(), float((mass(&u) - m0).abs())),
        ("energy_drift".to_string(), float((energy(&u) - e0).abs())),
        ("steps".to_string(), steps.to_string()),
    ];
    let summary_path = cfg.output_dir.join("summary.csv");
    key_value_table("simulate", echo, &values).write(&summary_path)?;
    let mut all = vec![ts_path, summary_path];
    all.extend(files);
    Ok(Report { files: all, values })
}

fn key_value_table(command: &str, echo: &Echo, values: &[(String, String)]) -> Table {
    let mut t = Table::new(command, echo, &["key", "value"]);
    for (k, v) in values {
        t.push(vec![k.clone(), v.clone()]);
    }
    t
}

/// Fits the modulation parameters of a snapshot (or of the configured
/// initial field) and writes its spectral decomposition.
pub fn decompose(cfg: &RunConfig, echo: &Echo) -> Result<Report, CliError> {
    let (u, g) = match &cfg.input {
        Some(path) => {
            let file = File::open(path).map_err(|e| CliError::Config(format!("input {}: {e}", path.display())))?;
            let state = read_snapshot(std::io::BufReader::new(file))?;
            let g = state.v.grid().clone();
            (assemble_state(&state), g)
        }
        None => {
            let g = grid(cfg)?;
            (initial_field(cfg, &g)?, g)
        }
    };
    let spec = unstable_modes(cfg.c_star, g.torus_scale(), &g).map(Arc::new).map_err(from_spectral)?;
    let fit = fit_modulation(&u, &spec.profile, cfg.c_star, 0.0, &FitOptions::default())?;
    let dec = Decomposer::new(spec.clone());
    let d = dec.decompose(&fit.v)?;
    let mut t = Table::new("decompose", echo, &["component", "k", "j", "value"]);
    for (i, (p, m)) in d.lambda_plus.iter().zip(&d.lambda_minus).enumerate() {
        for j in 0..2 {
            t.push(vec!["lambda_plus".into(), (i + 1).to_string(), j.to_string(), float(p[j])]);
            t.push(vec!["lambda_minus".into(), (i + 1).to_string(), j.to_string(), float(m[j])]);
        }
    }
    let energy_norm = dec.energy_norm_sq_parts(&d, 1.0)?.sqrt();
    let scalars = [
        ("mu1", d.mu1),
        ("mu2", d.mu2),
        ("gamma_h1", h1_norm(&d.gamma)),
        ("gamma_form", dec.gamma_form(&d.gamma)),
        ("energy_norm", energy_norm),
        ("fit_c", fit.c),
        ("fit_rho", fit.rho),
        ("fit_residual", fit.residual),
    ];
    for (name, v) in scalars {
        t.push(vec![name.into(), String::new(), String::new(), float(v)]);
    }
    let path = cfg.output_dir.join("decomposition.csv");
    t.write(&path)?;
    let values = vec![
        ("energy_norm".to_string(), float(energy_norm)),
        ("fit_c".to_string(), float(fit.c)),
        ("fit_rho".to_string(), float(fit.rho)),
    ];
    Ok(Report { files: vec![path], values })
}

/// Short hash identifying the inputs of one shooting run.
pub fn inputs_hash(w: &Field2D, c: f64, shoot: &ShootConfig, t_max: f64) -> String {
    let mut h = Sha256::new();
    let g = w.grid();
    for x in [g.x_half_width(), g.torus_scale(), c, shoot.epsilon, shoot.delta, shoot.dt, t_max] {
        h.update(x.to_le_bytes());
    }
    h.update((g.nx() as u64).to_le_bytes());
    h.update((g.ny() as u64).to_le_bytes());
    for v in w.values() {
        h.update(v.to_le_bytes());
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Shoots `samples` points of the center-stable graph at the configured
/// radius (`w = 0, c = c*` when the radius is zero).
pub fn shoot(cfg: &RunConfig, echo: &Echo) -> Result<Report, CliError> {
    let g = grid(cfg)?;
    let spec = spectral_data(cfg, &g)?;
    if spec.is_stable() {
        return Err(CliError::Config(format!("c_star = {} is in the stable regime; nothing to shoot", cfg.c_star)));
    }
    let ctx = ShootContext::new(spec.clone())?;
    let shoot_cfg = ShootConfig {
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        t_max: cfg.t_max,
        dt: cfg.dt.unwrap_or(2.5e-2),
        ..ShootConfig::default()
    };
    let t_max = ctx.t_max(&shoot_cfg);
    let n = cfg.samples.unwrap_or(1);
    let radius = cfg.radius.unwrap_or(0.0);
    let points: Vec<(Field2D, f64)> = (0..n)
        .map(|i| {
            if radius == 0.0 {
                Ok((Field2D::zeros(&g), cfg.c_star))
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
                random_graph_point(&mut rng, &ctx, radius, &shoot_cfg)
            }
        })
        .collect::<Result<_, _>>()?;
    let results: Vec<_> = points
        .par_iter()
        .map(|(w, c)| shoot_graph(w, *c, &shoot_cfg, &ctx))
        .collect::<Result<_, _>>()?;

    let mut header = vec!["inputs_hash".to_string()];
    let mut modes: Vec<_> = spec.f_modes.iter().map(|f| (f.k, f.j)).collect();
    modes.sort();
    header.extend(modes.iter().map(|(k, j)| format!("a_plus_{k}_{j}")));
    header.extend(["c", "persist_time", "converged", "bracket_width", "iterations"].map(String::from));
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new("shoot", echo, &header_ref);
    t.note("t_max_resolved", float(t_max));
    t.note("dt_resolved", float(shoot_cfg.dt));
    for ((w, c), r) in points.iter().zip(&results) {
        let mut row = vec![inputs_hash(w, *c, &shoot_cfg, t_max)];
        row.extend(r.a_plus.iter().map(|a| float(*a)));
        row.extend([float(*c), float(r.persist_time), r.converged.to_string(), float(r.bracket_width), r.iterations.to_string()]);
        t.push(row);
    }
    let path = cfg.output_dir.join("shoot.csv");
    t.write(&path)?;
    let max_a = results.iter().flat_map(|r| r.a_plus.iter()).fold(0.0f64, |m, a| m.max(a.abs()));
    let min_persist = results.iter().map(|r| r.persist_time).fold(f64::INFINITY, f64::min);
    let values = vec![
        ("max_abs_a_plus".to_string(), float(max_a)),
        ("min_persist_time".to_string(), float(min_persist)),
        ("all_converged".to_string(), results.iter().all(|r| r.converged).to_string()),
    ];
    Ok(Report { files: vec![path], values })
}

/// Quasi-distance axiom report on random tube triples.
pub fn distance(cfg: &RunConfig, echo: &Echo) -> Result<Report, CliError> {
    let g = grid(cfg)?;
    let spec = spectral_data(cfg, &g)?;
    let metric = MobileMetric::from_spectral(spec, MobileParams::new(cfg.delta)?);
    let n = cfg.samples.unwrap_or(100);
    let radius = cfg.radius.unwrap_or(1e-2);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let triples: Vec<_> = (0..n).map(|_| random_tube_triple(&mut rng, &g, cfg.c_star, radius)).collect();
    let report = quasi_axioms_report(&triples, &metric)?;
    let values = vec![
        ("triples".to_string(), report.triples.to_string()),
        ("symmetry_max".to_string(), float(report.symmetry_max)),
        ("identity_max".to_string(), float(report.identity_max)),
        ("min_distinct".to_string(), float(report.min_distinct)),
        ("triangle_constant".to_string(), float(report.triangle_constant)),
        ("lower_constant".to_string(), float(report.lower_constant)),
        ("upper_constant".to_string(), float(report.upper_constant)),
        ("violations".to_string(), report.violations.len().to_string()),
    ];
    let mut t = key_value_table("distance", echo, &values);
    t.note("samples_resolved", n.to_string());
    t.note("radius_resolved", float(radius));
    for (i, v) in report.violations.iter().enumerate() {
        t.note(&format!("violation_{i}"), v.replace('\n', " "));
    }
    let path = cfg.output_dir.join("distance.csv");
    t.write(&path)?;
    if !report.passed() {
        return Err(CliError::Numerical(format!("{} quasi-distance axiom violations", report.violations.len())));
    }
    Ok(Report { files: vec![path], values })
}
