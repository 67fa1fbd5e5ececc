//! Experiment configuration: a flat TOML table of typed keys.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const EXPERIMENTS: [&str; 6] = ["statics", "gamma-probe", "gamma-equiv", "quasistatic", "dynamics", "longtime"];

/// Keys a sweep may vary.
pub const SWEEP_AXES: [&str; 8] = ["eps", "springs", "tau", "horizon", "lambda", "z0", "seed", "t0"];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn key(key: &str, message: impl Into<String>) -> Self {
        Self { key: Some(key.to_string()), message: message.into() }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self { key: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "key `{k}`: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Every recognised key. Which ones are required depends on `experiment`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Option<String>,
    pub output: Option<String>,
    pub seed: Option<u64>,

    /// Lattice spacing `ε = 1/N`; alternatively `springs`.
    pub eps: Option<f64>,
    pub springs: Option<usize>,
    pub eps_list: Option<Vec<f64>>,

    // statics
    pub lambda: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub lambda_step: Option<f64>,
    pub trials: Option<usize>,
    pub magnitude: Option<f64>,

    // functions and loads
    pub initial: Option<String>,
    pub load: Option<String>,
    pub t0: Option<f64>,
    pub density: Option<String>,

    // time stepping
    pub tau: Option<f64>,
    pub horizon: Option<f64>,
    pub dissipation: Option<bool>,

    // dynamics
    pub solver_tol: Option<f64>,
    pub max_newton_iters: Option<usize>,
    pub gamma: Option<f64>,
    pub allow_unstable: Option<bool>,
    pub record_stride: Option<usize>,
    pub flux_stride: Option<usize>,
    pub dump_stride: Option<usize>,

    // longtime
    pub x0: Option<f64>,
    pub x1: Option<f64>,
    pub z0: Option<f64>,
    pub time_scale: Option<f64>,
    pub ode_dt: Option<f64>,

    // sweep
    pub sweep_axis: Option<String>,
    pub sweep_values: Option<Vec<f64>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::general(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::general(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError { message: format!("{}: {}", path.display(), e.message), ..e })
    }

    pub fn experiment(&self) -> Result<&str, ConfigError> {
        let name = self.experiment.as_deref().ok_or_else(|| ConfigError::key("experiment", "missing"))?;
        if !EXPERIMENTS.contains(&name) {
            return Err(ConfigError::key("experiment", format!("unknown experiment '{name}' (expected one of {})", EXPERIMENTS.join(", "))));
        }
        Ok(name)
    }

    pub fn need<T: Clone>(value: &Option<T>, key: &str) -> Result<T, ConfigError> {
        value.clone().ok_or_else(|| ConfigError::key(key, "missing"))
    }

    /// `N` from `springs`, or from `eps` when it is the reciprocal of an integer.
    pub fn springs(&self) -> Result<usize, ConfigError> {
        match (self.springs, self.eps) {
            (Some(_), Some(_)) => Err(ConfigError::key("springs", "give either `springs` or `eps`, not both")),
            (Some(n), None) if n >= 2 => Ok(n),
            (Some(n), None) => Err(ConfigError::key("springs", format!("need at least 2 springs, got {n}"))),
            (None, Some(eps)) => pmlab::energy::springs_for_spacing(eps).map_err(|e| ConfigError::key("eps", e.to_string())),
            (None, None) => Err(ConfigError::key("eps", "missing (or give `springs`)")),
        }
    }

    pub fn eps(&self) -> Result<f64, ConfigError> {
        match (self.eps, self.springs) {
            (Some(e), None) if e > 0.0 && e < 1.0 => Ok(e),
            (Some(e), None) => Err(ConfigError::key("eps", format!("must lie in (0, 1), got {e}"))),
            _ => Ok(1.0 / self.springs()? as f64),
        }
    }

    pub fn positive(value: Option<f64>, key: &str) -> Result<f64, ConfigError> {
        let v = Self::need(&value, key)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(ConfigError::key(key, format!("must be positive, got {v}")))
        }
    }

    /// Returns a copy with one sweep axis set to `value`.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<Self, ConfigError> {
        let mut c = self.clone();
        c.sweep_axis = None;
        c.sweep_values = None;
        let count = |v: f64| {
            if v >= 0.0 && v.fract() == 0.0 && v < 9.007_199_254_740_992e15 {
                Ok(v as u64)
            } else {
                Err(ConfigError::key("sweep_values", format!("{axis} needs integer values, got {v}")))
            }
        };
        match axis {
            "eps" => {
                c.eps = Some(value);
                c.springs = None;
                if c.eps_list.is_some() {
                    c.eps_list = Some(vec![value]);
                }
            }
            "springs" => {
                c.springs = Some(count(value)? as usize);
                c.eps = None;
            }
            "tau" => c.tau = Some(value),
            "horizon" => c.horizon = Some(value),
            "lambda" => {
                c.lambda = Some(value);
                c.lambda_min = None;
                c.lambda_max = None;
                c.lambda_step = None;
            }
            "z0" => c.z0 = Some(value),
            "seed" => c.seed = Some(count(value)?),
            "t0" => c.t0 = Some(value),
            _ => {
                return Err(ConfigError::key(
                    "sweep_axis",
                    format!("unknown axis '{axis}' (expected one of {})", SWEEP_AXES.join(", ")),
                ))
            }
        }
        Ok(c)
    }
}
