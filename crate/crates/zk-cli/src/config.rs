//! `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Later assignments replace earlier ones, and `--set key=value` overrides
//! are applied after the file. Keys of the form `sweep.<key>` take a
//! comma-separated list of values and are only meaningful for `sweep`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

/// Where an assignment came from, for error messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Default,
    Line { file: PathBuf, line: usize },
    Override(usize),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "default"),
            Origin::Line { file, line } => write!(f, "{}:{line}", file.display()),
            Origin::Override(i) => write!(f, "--set #{}", i + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub raw: String,
    pub origin: Origin,
}

/// Every accepted key with its default, `None` meaning "chosen by the command".
pub const KEYS: &[(&str, Option<&str>)] = &[
    ("c_star", Some("1")),
    ("L", Some("1")),
    ("nx", Some("512")),
    ("ny", Some("8")),
    ("x_half_width", None),
    ("dt", None),
    ("t_max", None),
    ("delta", Some("1e-2")),
    ("epsilon", Some("1e-2")),
    ("seed", Some("0")),
    ("output_dir", Some("out")),
    ("perturbation", Some("0")),
    ("perturbation_shape", Some("random")),
    ("snapshot_every", Some("1")),
    ("samples", None),
    ("radius", None),
    ("input", None),
    ("sweep_command", Some("simulate")),
];

/// Raw assignments, kept verbatim so they can be echoed into outputs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key) || key.strip_prefix("sweep.").is_some_and(|k| KEYS.iter().any(|(n, _)| *n == k))
}

fn split_assignment(text: &str) -> Option<(&str, &str)> {
    let (k, v) = text.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return None;
    }
    Some((k, v))
}

impl RawConfig {
    pub fn parse_str(text: &str, file: &Path) -> Result<Self, CliError> {
        let mut cfg = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let origin = Origin::Line { file: file.to_path_buf(), line: i + 1 };
            let (k, v) = split_assignment(content)
                .ok_or_else(|| CliError::Config(format!("{origin}: expected `key = value`, got `{content}`")))?;
            cfg.insert(k, v, origin)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_str(&text, path)
    }

    pub fn apply_overrides(&mut self, sets: &[String]) -> Result<(), CliError> {
        for (i, s) in sets.iter().enumerate() {
            let origin = Origin::Override(i);
            let (k, v) = split_assignment(s)
                .ok_or_else(|| CliError::Config(format!("{origin}: expected `key=value`, got `{s}`")))?;
            self.insert(k, v, origin)?;
        }
        Ok(())
    }

    pub fn insert(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), CliError> {
        if !known(key) {
            return Err(CliError::Config(format!("{origin}: unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), Entry { raw: value.to_string(), origin });
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &Entry)> {
        self.entries.iter()
    }

    /// Sweep axes in key order, each with its list of raw values.
    pub fn sweep_axes(&self) -> Result<Vec<(String, Vec<String>)>, CliError> {
        let mut axes = Vec::new();
        for (k, e) in &self.entries {
            if let Some(name) = k.strip_prefix("sweep.") {
                let values: Vec<String> = e.raw.split(',').map(|s| s.trim().to_string()).collect();
                if values.iter().any(|v| v.is_empty()) {
                    return Err(CliError::Config(format!("{}: empty value in `{k}`", e.origin)));
                }
                axes.push((name.to_string(), values));
            }
        }
        Ok(axes)
    }

    /// Copy with the sweep keys removed and the given point applied.
    pub fn at_point(&self, point: &[(String, String)], output_dir: &Path) -> Self {
        let mut out = RawConfig {
            entries: self.entries.iter().filter(|(k, _)| !k.starts_with("sweep.")).map(|(k, e)| (k.clone(), e.clone())).collect(),
        };
        for (k, v) in point {
            out.entries.insert(k.clone(), Entry { raw: v.clone(), origin: Origin::Default });
        }
        out.entries.insert(
            "output_dir".into(),
            Entry { raw: output_dir.display().to_string(), origin: Origin::Default },
        );
        out
    }

    fn typed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        let Some(e) = self.entries.get(key) else {
            let default = KEYS.iter().find(|(k, _)| *k == key).and_then(|(_, d)| *d);
            return Ok(default.and_then(|d| d.parse().ok()));
        };
        e.raw
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{}: cannot parse `{key} = {}`", e.origin, e.raw)))
    }

    fn check<T>(&self, key: &str, v: T, ok: impl Fn(&T) -> bool, what: &str) -> Result<T, CliError> {
        if ok(&v) {
            Ok(v)
        } else {
            let origin = self.entries.get(key).map(|e| e.origin.clone()).unwrap_or(Origin::Default);
            Err(CliError::Config(format!("{origin}: `{key}` must be {what}")))
        }
    }

    fn positive(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.typed::<f64>(key)? {
            Some(v) => self.check(key, v, |v| v.is_finite() && *v > 0.0, "positive and finite").map(Some),
            None => Ok(None),
        }
    }

    fn non_negative(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.typed::<f64>(key)? {
            Some(v) => self.check(key, v, |v| v.is_finite() && *v >= 0.0, "non-negative and finite").map(Some),
            None => Ok(None),
        }
    }

    /// Typed view with every value validated.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let c_star = self.positive("c_star")?.unwrap();
        let count = |key: &str| -> Result<usize, CliError> {
            let n: usize = self.typed(key)?.unwrap();
            self.check(key, n, |n| *n >= 8 && n.is_power_of_two(), "a power of two, at least 8")
        };
        let shape = match self.typed::<String>("perturbation_shape")?.unwrap().as_str() {
            "random" => Shape::Random,
            "unstable" => Shape::Unstable,
            other => {
                let origin = self.entries["perturbation_shape"].origin.clone();
                return Err(CliError::Config(format!("{origin}: perturbation_shape `{other}` is not random|unstable")));
            }
        };
        let sweep_command = self.typed::<String>("sweep_command")?.unwrap();
        let sweep_command = match Command::from_name(&sweep_command) {
            Some(c) if c != Command::Sweep => c,
            _ => {
                let origin = self.entries.get("sweep_command").map(|e| e.origin.clone()).unwrap_or(Origin::Default);
                return Err(CliError::Config(format!("{origin}: sweep_command `{sweep_command}` is not a runnable command")));
            }
        };
        let samples = match self.typed::<usize>("samples")? {
            Some(n) => Some(self.check("samples", n, |n| *n >= 1, "at least 1")?),
            None => None,
        };
        Ok(RunConfig {
            c_star,
            torus_scale: self.positive("L")?.unwrap(),
            nx: count("nx")?,
            ny: count("ny")?,
            x_half_width: self.positive("x_half_width")?.unwrap_or(48.0 / c_star.sqrt()),
            dt: self.positive("dt")?,
            t_max: self.positive("t_max")?,
            delta: self.positive("delta")?.unwrap(),
            epsilon: self.positive("epsilon")?.unwrap(),
            seed: self.typed("seed")?.unwrap(),
            output_dir: PathBuf::from(self.typed::<String>("output_dir")?.unwrap()),
            perturbation: self.non_negative("perturbation")?.unwrap(),
            shape,
            snapshot_every: self.positive("snapshot_every")?.unwrap(),
            samples,
            radius: self.non_negative("radius")?,
            input: self.typed::<String>("input")?.map(PathBuf::from),
            sweep_command,
        })
    }

    /// `(key, value)` for every key, defaults included, with raw text for
    /// assigned keys.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = KEYS
            .iter()
            .map(|(k, d)| {
                let v = match self.entries.get(*k) {
                    Some(e) => e.raw.clone(),
                    None => d.unwrap_or("auto").to_string(),
                };
                (k.to_string(), v)
            })
            .collect();
        out.extend(self.entries.iter().filter(|(k, _)| k.starts_with("sweep.")).map(|(k, e)| (k.clone(), e.raw.clone())));
        out
    }
}

/// Initial perturbation used by `simulate` and `decompose`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// Smooth random localized field from the seed.
    Random,
    /// `F_1^{+,0}`.
    Unstable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Simulate,
    Decompose,
    Shoot,
    Distance,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Simulate => "simulate",
            Command::Decompose => "decompose",
            Command::Shoot => "shoot",
            Command::Distance => "distance",
            Command::Sweep => "sweep",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Command::Spectrum, Command::Simulate, Command::Decompose, Command::Shoot, Command::Distance, Command::Sweep]
            .into_iter()
            .find(|c| c.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub c_star: f64,
    pub torus_scale: f64,
    pub nx: usize,
    pub ny: usize,
    pub x_half_width: f64,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub delta: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub perturbation: f64,
    pub shape: Shape,
    pub snapshot_every: f64,
    pub samples: Option<usize>,
    pub radius: Option<f64>,
    pub input: Option<PathBuf>,
    pub sweep_command: Command,
}
