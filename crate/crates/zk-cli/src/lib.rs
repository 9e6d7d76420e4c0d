//! Command-line front end: configuration, experiment runners and file output.
//!
//! Every command reads a [`RawConfig`], writes CSV files that start with a
//! metadata block echoing the full configuration, and returns a short
//! [`Report`] for the terminal.

pub mod commands;
pub mod config;
pub mod output;
pub mod sweep;

use std::path::PathBuf;

pub use config::{Command, RawConfig, RunConfig, Shape};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    /// 2 for configuration and file-system problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

/// Files written by a command and a few headline values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub values: Vec<(String, String)>,
}

impl Report {
    pub fn value(&self, key: &str) -> Option<&str> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Resolves the configuration, prepares the output directory and runs one
/// command.
pub fn run(command: Command, raw: &RawConfig) -> Result<Report, CliError> {
    let cfg = raw.resolve()?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Config(format!("output_dir {} is not writable: {e}", cfg.output_dir.display())))?;
    let mut echo = raw.echo();
    for (k, v) in echo.iter_mut() {
        if k == "x_half_width" && v == "auto" {
            *v = output::float(cfg.x_half_width);
        }
    }
    match command {
        Command::Spectrum => commands::spectrum(&cfg, &echo),
        Command::Simulate => commands::simulate(&cfg, &echo),
        Command::Decompose => commands::decompose(&cfg, &echo),
        Command::Shoot => commands::shoot(&cfg, &echo),
        Command::Distance => commands::distance(&cfg, &echo),
        Command::Sweep => sweep::sweep(&cfg, raw),
    }
}
