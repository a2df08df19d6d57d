//! Run configuration: command-line flags merged over an optional key=value file.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Ring,
    RingPole,
    #[value(name = "ring-2poles")]
    #[serde(rename = "ring-2poles")]
    Ring2Poles,
    TwoRings,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Flags shared by every subcommand. Field names double as config-file keys.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// key=value file with the same keys as the long flags; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub family: Option<Family>,
    /// Vortices per ring.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
    /// Co-latitude of the first ring, radians.
    #[arg(long, value_parser = parse_angle)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta0: Option<f64>,
    /// Co-latitude of the second ring, radians.
    #[arg(long, value_parser = parse_angle)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta1: Option<f64>,
    /// Polar (ring-pole) or second-ring (two-rings) vorticity ratio.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa: Option<f64>,
    #[arg(long = "kappaN", allow_hyphen_values = true)]
    #[serde(rename = "kappaN", skip_serializing_if = "Option::is_none", default)]
    pub kappa_n: Option<f64>,
    #[arg(long = "kappaS", allow_hyphen_values = true)]
    #[serde(rename = "kappaS", skip_serializing_if = "Option::is_none", default)]
    pub kappa_s: Option<f64>,
    #[arg(long, conflicts_with = "staggered")]
    #[serde(skip_serializing_if = "is_false", default)]
    pub aligned: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false", default)]
    pub staggered: bool,

    /// Grid points per scan axis.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub resolution: Option<usize>,
    /// First scan axis range "min,max" (theta0).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub range1: Option<String>,
    /// Second scan axis range "min,max" (kappa, kappaN or theta1).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub range2: Option<String>,
    /// Also write an SVG next to the CSV.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false", default)]
    pub svg: bool,

    /// Integration time.
    #[arg(long = "T")]
    #[serde(rename = "T", skip_serializing_if = "Option::is_none", default)]
    pub t_end: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dt: Option<f64>,
    /// Initial state file: one "x y z kappa" line per vortex.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub state: Option<PathBuf>,
    /// Perturb the family equilibrium by this ambient amplitude before integrating.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub perturb: Option<f64>,
    /// Estimate the perturbation growth exponent.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false", default)]
    pub growth: bool,
    /// Keep every k-th integration step in the trajectory output.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stride: Option<usize>,

    /// Worker threads for scans (default: all cores).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub threads: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    /// Relative eigenvalue tolerance.
    #[arg(long = "tol-eig")]
    #[serde(rename = "tol-eig", skip_serializing_if = "Option::is_none", default)]
    pub tol_eig: Option<f64>,
    /// Output file (stdout when absent).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 42;

/// Radians only. Values with a degree marker or beyond a full turn are rejected with a hint.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let lower = t.to_lowercase();
    if let Some(num) = ["degrees", "degree", "deg", "°", "d"].iter().find_map(|suf| lower.strip_suffix(suf)) {
        return Err(match num.trim().parse::<f64>() {
            Ok(v) => format!("angles are in radians; {v} degrees is {:.6}", v.to_radians()),
            Err(_) => format!("angles are in radians, got '{s}'"),
        });
    }
    let v: f64 = t.parse().map_err(|_| format!("not a number: '{s}'"))?;
    if !v.is_finite() {
        return Err(format!("angle must be finite, got {v}"));
    }
    if v.abs() > TAU {
        return Err(format!("angle {v} exceeds 2*pi; angles are in radians (if this is degrees, use {:.6})", v.to_radians()));
    }
    Ok(v)
}

pub fn parse_range(s: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = s.split_once(',').ok_or_else(|| CliError::Invalid(format!("range must be \"min,max\", got '{s}'")))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|_| CliError::Invalid(format!("bad range bound '{x}'")));
    let (a, b) = (p(a)?, p(b)?);
    if !(a < b) {
        return Err(CliError::Invalid(format!("range min must be below max, got {a},{b}")));
    }
    Ok((a, b))
}

fn file_value(key: &str, raw: &str) -> Result<Value, CliError> {
    if matches!(key, "theta0" | "theta1") {
        let v = parse_angle(raw).map_err(|e| CliError::Invalid(format!("{key}: {e}")))?;
        return Ok(Value::from(v));
    }
    if let Ok(b) = raw.parse::<bool>() {
        return Ok(Value::Bool(b));
    }
    if let Ok(u) = raw.parse::<u64>() {
        return Ok(Value::from(u));
    }
    if let Ok(f) = raw.parse::<f64>() {
        if let Some(n) = serde_json::Number::from_f64(f) {
            return Ok(Value::Number(n));
        }
    }
    Ok(Value::String(raw.to_string()))
}

/// Parses `key=value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut map = Map::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("{}:{}: expected key=value", path.display(), lineno + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k == "config" {
            return Err(CliError::Invalid(format!("{}:{}: nested config files are not supported", path.display(), lineno + 1)));
        }
        map.insert(k.to_string(), file_value(k, v)?);
    }
    Ok(map)
}

impl Params {
    /// Flags over file values; unknown file keys are an error.
    pub fn resolve(self) -> Result<Params, CliError> {
        let Some(path) = self.config.clone() else { return self.check() };
        let mut merged = read_config_file(&path)?;
        let flags = serde_json::to_value(&self).expect("params serialize");
        if let Value::Object(m) = flags {
            for (k, v) in m {
                merged.insert(k, v);
            }
        }
        if self.aligned {
            merged.remove("staggered");
        }
        if self.staggered {
            merged.remove("aligned");
        }
        let mut p: Params = serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        p.config = Some(path);
        p.check()
    }

    fn check(self) -> Result<Params, CliError> {
        if self.aligned && self.staggered {
            return Err(CliError::Invalid("--aligned and --staggered are mutually exclusive".into()));
        }
        if let Some(t) = self.tol_eig {
            if !(t > 0.0 && t < 1.0) {
                return Err(CliError::Invalid(format!("--tol-eig must lie in (0, 1), got {t}")));
            }
        }
        for (name, v) in [("T", self.t_end), ("dt", self.dt), ("perturb", self.perturb)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Invalid(format!("--{name} must be positive, got {v}")));
                }
            }
        }
        if self.threads == Some(0) || self.stride == Some(0) {
            return Err(CliError::Invalid("--threads and --stride must be at least 1".into()));
        }
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn require<T: Copy>(&self, v: Option<T>, flag: &str) -> Result<T, CliError> {
        v.ok_or_else(|| CliError::Invalid(format!("--{flag} is required for this family")))
    }

    /// Echo of the effective configuration embedded in every output.
    pub fn echo(&self, command: &str) -> Value {
        let mut v = serde_json::to_value(self).expect("params serialize");
        if let Value::Object(m) = &mut v {
            m.insert("command".into(), Value::from(command));
            m.insert("seed".into(), Value::from(self.seed()));
            if let Some(c) = &self.config {
                m.insert("config".into(), Value::from(c.display().to_string()));
            }
        }
        v
    }

    /// The echo as one `run_config={...}` comment-header line.
    pub fn echo_line(&self, command: &str) -> String {
        format!("run_config={}", self.echo(command))
    }
}
