use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zk_cli::{run, Command, RawConfig};

#[derive(Parser)]
#[command(name = "zk", version, about = "Line solitons of the Zakharov–Kuznetsov equation on R × T_L")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Configuration file with one `key = value` per line.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one key; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Unstable transverse eigenvalues and their checks.
    Spectrum,
    /// Evolve a perturbed soliton by the full equation.
    Simulate,
    /// Spectral decomposition of a snapshot or of the initial field.
    Decompose,
    /// Shoot points of the center-stable graph.
    Shoot,
    /// Quasi-distance axiom report on random tube triples.
    Distance,
    /// Run another command over a Cartesian product of parameters.
    Sweep,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Spectrum => Command::Spectrum,
            Sub::Simulate => Command::Simulate,
            Sub::Decompose => Command::Decompose,
            Sub::Shoot => Command::Shoot,
            Sub::Distance => Command::Distance,
            Sub::Sweep => Command::Sweep,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let mut raw = match &cli.config {
            Some(p) => RawConfig::load(p)?,
            None => RawConfig::default(),
        };
        raw.apply_overrides(&cli.set)?;
        run(cli.command.into(), &raw)
    })();
    match result {
        Ok(report) => {
            // a closed stdout (e.g. piped into `head`) is not a failure of the run
            let mut out = std::io::stdout().lock();
            for (k, v) in &report.values {
                let _ = writeln!(out, "{k} = {v}");
            }
            for f in &report.files {
                let _ = writeln!(out, "wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("zk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
