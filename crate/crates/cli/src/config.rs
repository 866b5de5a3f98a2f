//! Run configuration: a `key: value` file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use twocenter_core::verify::default_start;
use twocenter_core::{IntegratorConfig, PhasePoint, Problem, Vec3};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Key-value config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub m_minus: Option<String>,
    #[arg(long)]
    pub m_plus: Option<String>,
    /// Half the distance between the centers.
    #[arg(long)]
    pub a: Option<String>,
    /// Initial position as `x,y,z`.
    #[arg(long, allow_hyphen_values = true)]
    pub q0: Option<String>,
    /// Initial velocity as `x,y,z`.
    #[arg(long, allow_hyphen_values = true)]
    pub p0: Option<String>,
    #[arg(long)]
    pub t_end: Option<String>,
    #[arg(long)]
    pub tau_end: Option<String>,
    #[arg(long)]
    pub rel_tol: Option<String>,
    #[arg(long)]
    pub abs_tol: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub samples: Option<String>,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    pub out: Option<String>,
    /// Path for a JSON summary.
    #[arg(long)]
    pub json: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub m_minus: f64,
    pub m_plus: f64,
    pub a: f64,
    pub q0: Vec3,
    pub p0: Vec3,
    pub t_end: f64,
    pub tau_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub seed: u64,
    pub samples: usize,
    pub out: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let start = default_start();
        let integ = IntegratorConfig::default();
        Self {
            m_minus: 1.0,
            m_plus: 1.0,
            a: 1.0,
            q0: start.q,
            p0: start.p,
            t_end: 50.0,
            tau_end: 5.0,
            rel_tol: integ.rel_tol,
            abs_tol: integ.abs_tol,
            seed: 42,
            samples: 10_000,
            out: None,
            json: None,
        }
    }
}

impl RunConfig {
    pub fn load(overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        if let Some(path) = &overrides.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("m_minus", &overrides.m_minus),
            ("m_plus", &overrides.m_plus),
            ("a", &overrides.a),
            ("q0", &overrides.q0),
            ("p0", &overrides.p0),
            ("t_end", &overrides.t_end),
            ("tau_end", &overrides.tau_end),
            ("rel_tol", &overrides.rel_tol),
            ("abs_tol", &overrides.abs_tol),
            ("seed", &overrides.seed),
            ("samples", &overrides.samples),
            ("out", &overrides.out),
            ("json", &overrides.json),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).map_err(|e| CliError::Config(format!("--{}: {e}", key.replace('_', "-"))))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| format!("line {}: expected `key: value`", n + 1))?;
            self.set(key.trim(), value.trim()).map_err(|e| format!("line {}: {e}", n + 1))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "m_minus" => self.m_minus = number(value)?,
            "m_plus" => self.m_plus = number(value)?,
            "a" => self.a = number(value)?,
            "q0" => self.q0 = vector(value)?,
            "p0" => self.p0 = vector(value)?,
            "t_end" => self.t_end = number(value)?,
            "tau_end" => self.tau_end = number(value)?,
            "rel_tol" => self.rel_tol = number(value)?,
            "abs_tol" => self.abs_tol = number(value)?,
            "seed" => self.seed = value.parse().map_err(|_| format!("seed `{value}` is not an unsigned integer"))?,
            "samples" => {
                self.samples = value.parse().map_err(|_| format!("samples `{value}` is not an unsigned integer"))?
            }
            "out" => self.out = Some(PathBuf::from(value)),
            "json" => self.json = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        self.problem()?;
        self.integrator()?;
        for (name, v) in [("t_end", self.t_end), ("tau_end", self.tau_end)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("{name} must be finite and > 0")));
            }
        }
        if self.samples == 0 {
            return Err(CliError::Config("samples must be at least 1".into()));
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        Problem::new(self.m_minus, self.m_plus, self.a).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, CliError> {
        let cfg = IntegratorConfig { rel_tol: self.rel_tol, abs_tol: self.abs_tol, ..IntegratorConfig::default() };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn start(&self) -> PhasePoint {
        PhasePoint::new(self.q0, self.p0)
    }
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn vector(s: &str) -> Result<Vec3, String> {
    let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("`{s}` is not a 3-vector `x,y,z`"));
    }
    Ok(Vec3::new(number(parts[0])?, number(parts[1])?, number(parts[2])?))
}
