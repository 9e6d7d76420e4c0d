use std::path::PathBuf;

use rayon::prelude::*;

use crate::config::{RawConfig, RunConfig};
use crate::output::Table;
use crate::{run, CliError, Report};

/// Every combination of the sweep axes, in lexicographic axis order with
/// the last axis varying fastest.
pub fn cartesian(axes: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    let mut points = vec![Vec::new()];
    for (key, values) in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

/// Directory name of one sweep point, e.g. `c_star=0.9_L=1`.
pub fn point_dir(point: &[(String, String)]) -> String {
    point
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join("_")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "=._-+".contains(c) { c } else { '_' })
        .collect()
}

/// Runs `sweep_command` at every point of the Cartesian product of the
/// `sweep.<key>` lists, each in its own subdirectory, and writes an index
/// `sweep.csv` with the headline values of every point.
pub fn sweep(cfg: &RunConfig, raw: &RawConfig) -> Result<Report, CliError> {
    let axes = raw.sweep_axes()?;
    if axes.is_empty() {
        return Err(CliError::Config("sweep needs at least one `sweep.<key> = v1, v2, ...` line".into()));
    }
    let points = cartesian(&axes);
    let configs: Vec<(Vec<(String, String)>, PathBuf, RawConfig)> = points
        .into_iter()
        .map(|p| {
            let dir = cfg.output_dir.join(point_dir(&p));
            let sub = raw.at_point(&p, &dir);
            (p, dir, sub)
        })
        .collect();
    // validate every point before spending time on any of them
    for (_, _, sub) in &configs {
        sub.resolve()?;
    }
    let outcomes: Vec<Result<Report, CliError>> =
        configs.par_iter().map(|(_, _, sub)| run(cfg.sweep_command, sub)).collect();

    let mut keys: Vec<String> = Vec::new();
    for r in outcomes.iter().flatten() {
        for (k, _) in &r.values {
            if !keys.contains(k) {
                keys.push(k.clone());
            }
        }
    }
    let mut header: Vec<String> = axes.iter().map(|(k, _)| k.clone()).collect();
    header.extend(["directory".to_string(), "exit_code".to_string()]);
    header.extend(keys.iter().cloned());
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new("sweep", &raw.echo(), &header_ref);
    table.note("sweep_command", cfg.sweep_command.name());
    let mut failures = Vec::new();
    let mut values = Vec::new();
    for ((point, dir, _), outcome) in configs.iter().zip(&outcomes) {
        let mut row: Vec<String> = point.iter().map(|(_, v)| v.clone()).collect();
        row.push(dir.file_name().unwrap_or_default().to_string_lossy().into_owned());
        match outcome {
            Ok(r) => {
                row.push("0".into());
                row.extend(keys.iter().map(|k| r.value(k).unwrap_or("").to_string()));
            }
            Err(e) => {
                row.push(e.exit_code().to_string());
                row.extend(keys.iter().map(|_| String::new()));
                failures.push((point_dir(point), e.exit_code(), e.to_string()));
            }
        }
        table.push(row);
    }
    let path = cfg.output_dir.join("sweep.csv");
    table.write(&path)?;
    values.push(("points".to_string(), configs.len().to_string()));
    values.push(("failures".to_string(), failures.len().to_string()));
    if let Some(worst) = failures.iter().map(|f| f.1).max() {
        let detail: Vec<String> = failures.iter().map(|(d, _, e)| format!("{d}: {e}")).collect();
        let msg = format!("{} sweep point(s) failed: {}", failures.len(), detail.join("; "));
        return Err(if worst == 3 { CliError::Numerical(msg) } else { CliError::Config(msg) });
    }
    Ok(Report { files: vec![path], values })
}
