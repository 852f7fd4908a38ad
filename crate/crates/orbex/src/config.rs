//! Flat `key = value` run configuration shared by every subcommand.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use orbex_core::cases::{SILNIKOV_SEED, SILNIKOV_TRANSIENT};
use orbex_core::{Forcing, Matrix3, StateVec3, SystemSpec, Tolerance};

use crate::error::CliError;

/// Transient for the analytic ring flows.
pub const RING_TRANSIENT: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SystemKind {
    Linear,
    Tworing,
    Cubedring,
    Silnikov,
}

impl SystemKind {
    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::Linear => "linear",
            SystemKind::Tworing => "tworing",
            SystemKind::Cubedring => "cubedring",
            SystemKind::Silnikov => "silnikov",
        }
    }
}

impl FromStr for SystemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as clap::ValueEnum>::from_str(s, true)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl Format {
    pub fn name(&self) -> &'static str {
        match self {
            Format::Text => "text",
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as clap::ValueEnum>::from_str(s, true)
    }
}

/// Three comma-separated reals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triple(pub [f64; 3]);

impl FromStr for Triple {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = parse_reals(s)?;
        let arr: [f64; 3] = v.try_into().map_err(|_| format!("expected x,y,z, got `{s}`"))?;
        Ok(Triple(arr))
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

/// Nine comma-separated reals in row-major order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatrixArg(pub Matrix3);

impl FromStr for MatrixArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = parse_reals(s)?;
        if v.len() != 9 {
            return Err(format!("expected nine row-major entries, got {}", v.len()));
        }
        Ok(MatrixArg(Matrix3::from_flat(&v)))
    }
}

impl fmt::Display for MatrixArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flat = self.0.to_flat().map(|v| v.to_string());
        f.write_str(&flat.join(","))
    }
}

fn parse_reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{}`: {e}", p.trim()))).collect()
}

/// Every tunable of a run. Defaults, then the config file, then flags.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub system: SystemKind,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub matrix: Matrix3,
    pub seed: StateVec3,
    pub rtol: f64,
    pub atol: f64,
    /// `None` picks the per-system default.
    pub transient: Option<f64>,
    pub zero_tol: Option<f64>,
    pub le_tol: Option<f64>,
    pub period_rel_tol: Option<f64>,
    pub stability: bool,
    /// `None` picks the per-command default.
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let tol = Tolerance::default();
        RunConfig {
            system: SystemKind::Silnikov,
            a: 1.0,
            b: 0.8,
            alpha: 0.5,
            beta: 1.0,
            matrix: Matrix3::from_diagonal([-1.0, -2.0, -3.0]),
            seed: SILNIKOV_SEED,
            rtol: tol.rtol,
            atol: tol.atol,
            transient: None,
            zero_tol: None,
            le_tol: None,
            period_rel_tol: None,
            stability: true,
            format: None,
            out: None,
            jobs: 1,
        }
    }
}

pub const KEYS: [&str; 17] = [
    "system",
    "a",
    "b",
    "alpha",
    "beta",
    "matrix",
    "seed",
    "rtol",
    "atol",
    "transient",
    "zero_tol",
    "le_tol",
    "period_rel_tol",
    "stability",
    "format",
    "out",
    "jobs",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| CliError::Usage(format!("config key `{key}`: {e}")))
}

fn optional(value: &str) -> Option<&str> {
    match value {
        "" | "-" | "auto" | "none" => None,
        v => Some(v),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "system" => self.system = parse(key, value)?,
            "a" => self.a = parse(key, value)?,
            "b" => self.b = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "matrix" => self.matrix = parse::<MatrixArg>(key, value)?.0,
            "seed" => self.seed = StateVec3(parse::<Triple>(key, value)?.0),
            "rtol" => self.rtol = parse(key, value)?,
            "atol" => self.atol = parse(key, value)?,
            "transient" => self.transient = optional(value).map(|v| parse(key, v)).transpose()?,
            "zero_tol" => self.zero_tol = optional(value).map(|v| parse(key, v)).transpose()?,
            "le_tol" => self.le_tol = optional(value).map(|v| parse(key, v)).transpose()?,
            "period_rel_tol" => self.period_rel_tol = optional(value).map(|v| parse(key, v)).transpose()?,
            "stability" => self.stability = parse(key, value)?,
            "format" => self.format = optional(value).map(|v| parse(key, v)).transpose()?,
            "out" => self.out = optional(value).map(PathBuf::from),
            "jobs" => self.jobs = parse(key, value)?,
            _ => return Err(CliError::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_str(&mut self, text: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_str(&text)
    }

    pub fn get(&self, key: &str) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), tolerance_text);
        match key {
            "system" => self.system.name().to_string(),
            "a" => self.a.to_string(),
            "b" => self.b.to_string(),
            "alpha" => self.alpha.to_string(),
            "beta" => self.beta.to_string(),
            "matrix" => MatrixArg(self.matrix).to_string(),
            "seed" => Triple(self.seed.0).to_string(),
            "rtol" => tolerance_text(self.rtol),
            "atol" => tolerance_text(self.atol),
            "transient" => opt(self.transient),
            "zero_tol" => opt(self.zero_tol),
            "le_tol" => opt(self.le_tol),
            "period_rel_tol" => opt(self.period_rel_tol),
            "stability" => self.stability.to_string(),
            "format" => self.format.map_or("auto", |f| f.name()).to_string(),
            "out" => self.out.as_ref().map_or_else(|| "-".to_string(), |p| p.display().to_string()),
            "jobs" => self.jobs.to_string(),
            _ => String::new(),
        }
    }

    /// The whole configuration in the file format.
    pub fn dump(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {}\n", self.get(k))).collect()
    }

    pub fn tolerance(&self) -> Result<Tolerance, CliError> {
        Tolerance::new(self.rtol, self.atol).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn system_spec(&self) -> Result<SystemSpec, CliError> {
        let spec = match self.system {
            SystemKind::Linear => SystemSpec::linear(self.matrix, Forcing::Zero),
            SystemKind::Tworing => SystemSpec::two_ring_torus(self.alpha, self.beta),
            SystemKind::Cubedring => SystemSpec::cubed_ring(self.beta),
            SystemKind::Silnikov => SystemSpec::silnikov(self.a, self.b),
        };
        spec.map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn transient_for(&self, system: SystemKind) -> f64 {
        self.transient.unwrap_or(match system {
            SystemKind::Silnikov => SILNIKOV_TRANSIENT,
            _ => RING_TRANSIENT,
        })
    }

    /// Relative output paths land under `out_dir` when one is given.
    pub fn resolved_out(&self, out_dir: Option<&Path>) -> Option<PathBuf> {
        self.out.as_ref().map(|p| match out_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.clone(),
        })
    }
}

/// Small magnitudes in exponent notation, e.g. `1e-10`.
fn tolerance_text(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}
