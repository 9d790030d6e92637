//! Run configuration: flat `section.key = value` text.
//!
//! ```text
//! # reference model
//! grid.n = 24
//! grid.l = 10
//! model.nonlinearity = log_quartic
//! solver.count_target = 3
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => Err(ConfigError::value("run.format", s, "expected json or csv")),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Self::Json => "json",
            Self::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSection {
    pub n: usize,
    pub l: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub potential: String,
    pub nonlinearity: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSection {
    pub tol: f64,
    pub count_target: usize,
    pub max_restarts: usize,
    pub max_iterations: usize,
    /// K, the number of Schrödinger eigenmodes.
    pub modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSection {
    pub u_max: f64,
    pub u_count: usize,
    pub random_count: usize,
    pub x_stride: usize,
    pub ladder_max: f64,
    pub divergence_threshold: f64,
    pub min_decade_growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySection {
    pub m_samples: usize,
    pub rhos: Vec<f64>,
    pub ring_samples: usize,
    pub ks: Vec<usize>,
    pub rays: usize,
    pub beta_ks: Vec<usize>,
    pub beta_r: f64,
    pub beta_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub seed: u64,
    /// 0 means all available cores; resolved before a run starts.
    pub threads: usize,
    pub out: PathBuf,
    pub format: ReportFormat,
    pub oracle: bool,
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub model: ModelSection,
    pub solver: SolverSection,
    pub check: CheckSection,
    pub geometry: GeometrySection,
    pub run: RunSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridSection {
                n: 24,
                l: 10.0,
                alpha: 1.0,
            },
            model: ModelSection {
                potential: "harmonic".into(),
                nonlinearity: "log_quartic".into(),
            },
            solver: SolverSection {
                tol: 1e-6,
                count_target: 3,
                max_restarts: 8,
                max_iterations: 2000,
                modes: 40,
            },
            check: CheckSection {
                u_max: 50.0,
                u_count: 201,
                random_count: 200,
                x_stride: 2,
                ladder_max: 1e6,
                divergence_threshold: 10.0,
                min_decade_growth: 1.01,
            },
            geometry: GeometrySection {
                m_samples: 500,
                rhos: vec![0.3, 0.5, 0.8],
                ring_samples: 1000,
                ks: vec![2, 4, 6],
                rays: 20,
                beta_ks: vec![5, 10, 20, 35],
                beta_r: 2.0,
                beta_trials: 200,
            },
            run: RunSection {
                seed: 0,
                threads: 0,
                out: PathBuf::from("fracsp-out"),
                format: ReportFormat::Json,
                oracle: false,
                input: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("unknown configuration key '{0}'")]
    UnknownKey(String),
    #[error("bad value '{value}' for {key}: {reason}")]
    Value { key: String, value: String, reason: String },
}

impl ConfigError {
    fn value(key: &str, value: &str, reason: impl Into<String>) -> Self {
        Self::Value {
            key: key.into(),
            value: value.into(),
            reason: reason.into(),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| ConfigError::value(key, v, format!("not a valid {}", std::any::type_name::<T>())))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| num(key, s.trim()))
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Every accepted key, in emission order.
pub const KEYS: &[&str] = &[
    "grid.n",
    "grid.l",
    "grid.alpha",
    "model.potential",
    "model.nonlinearity",
    "solver.tol",
    "solver.count_target",
    "solver.max_restarts",
    "solver.max_iterations",
    "solver.modes",
    "check.u_max",
    "check.u_count",
    "check.random_count",
    "check.x_stride",
    "check.ladder_max",
    "check.divergence_threshold",
    "check.min_decade_growth",
    "geometry.m_samples",
    "geometry.rhos",
    "geometry.ring_samples",
    "geometry.ks",
    "geometry.rays",
    "geometry.beta_ks",
    "geometry.beta_r",
    "geometry.beta_trials",
    "run.seed",
    "run.threads",
    "run.out",
    "run.format",
    "run.oracle",
    "run.input",
];

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "grid.n" => self.grid.n = num(key, v)?,
            "grid.l" => self.grid.l = num(key, v)?,
            "grid.alpha" => self.grid.alpha = num(key, v)?,
            "model.potential" => self.model.potential = v.to_string(),
            "model.nonlinearity" => self.model.nonlinearity = v.to_string(),
            "solver.tol" => self.solver.tol = num(key, v)?,
            "solver.count_target" => self.solver.count_target = num(key, v)?,
            "solver.max_restarts" => self.solver.max_restarts = num(key, v)?,
            "solver.max_iterations" => self.solver.max_iterations = num(key, v)?,
            "solver.modes" => self.solver.modes = num(key, v)?,
            "check.u_max" => self.check.u_max = num(key, v)?,
            "check.u_count" => self.check.u_count = num(key, v)?,
            "check.random_count" => self.check.random_count = num(key, v)?,
            "check.x_stride" => self.check.x_stride = num(key, v)?,
            "check.ladder_max" => self.check.ladder_max = num(key, v)?,
            "check.divergence_threshold" => self.check.divergence_threshold = num(key, v)?,
            "check.min_decade_growth" => self.check.min_decade_growth = num(key, v)?,
            "geometry.m_samples" => self.geometry.m_samples = num(key, v)?,
            "geometry.rhos" => self.geometry.rhos = list(key, v)?,
            "geometry.ring_samples" => self.geometry.ring_samples = num(key, v)?,
            "geometry.ks" => self.geometry.ks = list(key, v)?,
            "geometry.rays" => self.geometry.rays = num(key, v)?,
            "geometry.beta_ks" => self.geometry.beta_ks = list(key, v)?,
            "geometry.beta_r" => self.geometry.beta_r = num(key, v)?,
            "geometry.beta_trials" => self.geometry.beta_trials = num(key, v)?,
            "run.seed" => self.run.seed = num(key, v)?,
            "run.threads" => self.run.threads = num(key, v)?,
            "run.out" => self.run.out = PathBuf::from(v),
            "run.format" => self.run.format = ReportFormat::parse(v)?,
            "run.oracle" => {
                self.run.oracle = match v {
                    "true" => true,
                    "false" => false,
                    _ => return Err(ConfigError::value(key, v, "expected true or false")),
                }
            }
            "run.input" => self.run.input = (!v.is_empty()).then(|| PathBuf::from(v)),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "grid.n" => self.grid.n.to_string(),
            "grid.l" => self.grid.l.to_string(),
            "grid.alpha" => self.grid.alpha.to_string(),
            "model.potential" => self.model.potential.clone(),
            "model.nonlinearity" => self.model.nonlinearity.clone(),
            "solver.tol" => self.solver.tol.to_string(),
            "solver.count_target" => self.solver.count_target.to_string(),
            "solver.max_restarts" => self.solver.max_restarts.to_string(),
            "solver.max_iterations" => self.solver.max_iterations.to_string(),
            "solver.modes" => self.solver.modes.to_string(),
            "check.u_max" => self.check.u_max.to_string(),
            "check.u_count" => self.check.u_count.to_string(),
            "check.random_count" => self.check.random_count.to_string(),
            "check.x_stride" => self.check.x_stride.to_string(),
            "check.ladder_max" => self.check.ladder_max.to_string(),
            "check.divergence_threshold" => self.check.divergence_threshold.to_string(),
            "check.min_decade_growth" => self.check.min_decade_growth.to_string(),
            "geometry.m_samples" => self.geometry.m_samples.to_string(),
            "geometry.rhos" => join(&self.geometry.rhos),
            "geometry.ring_samples" => self.geometry.ring_samples.to_string(),
            "geometry.ks" => join(&self.geometry.ks),
            "geometry.rays" => self.geometry.rays.to_string(),
            "geometry.beta_ks" => join(&self.geometry.beta_ks),
            "geometry.beta_r" => self.geometry.beta_r.to_string(),
            "geometry.beta_trials" => self.geometry.beta_trials.to_string(),
            "run.seed" => self.run.seed.to_string(),
            "run.threads" => self.run.threads.to_string(),
            "run.out" => self.run.out.display().to_string(),
            "run.format" => self.run.format.as_str().to_string(),
            "run.oracle" => self.run.oracle.to_string(),
            "run.input" => self
                .run
                .input
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: raw.to_string(),
                });
            };
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Every key, one per line; `parse(to_text())` round-trips.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut section = "";
        for key in KEYS {
            let sec = key.split('.').next().unwrap_or("");
            if sec != section {
                if !section.is_empty() {
                    s.push('\n');
                }
                section = sec;
            }
            let _ = writeln!(s, "{key} = {}", self.get(key).unwrap_or_default());
        }
        s
    }
}
