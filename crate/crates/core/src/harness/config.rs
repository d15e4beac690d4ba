use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::matrix::ThresholdPolicy;
use crate::spectral::{TorusGrid, MAX_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Vector,
    Matrix,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Vector => "vector",
            Model::Matrix => "matrix",
        })
    }
}

impl FromStr for Model {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vector" => Ok(Model::Vector),
            "matrix" => Ok(Model::Matrix),
            other => Err(HarnessError::Validation(format!("unknown model `{other}`"))),
        }
    }
}

fn default_seed() -> u64 {
    1
}

/// Flat run description, usually read from a TOML file.
///
/// ```toml
/// model = "vector"
/// d = 2
/// n = 64
/// m = 2
/// tau = 1e-4
/// steps = 100
/// ic = "random_direction"
/// seed = 1
/// out_dir = "runs/vector"
/// snapshot_every = 50
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub steps: usize,
    pub ic: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Snapshot cadence in steps; `0` keeps only the initial and final states.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub threshold_policy: ThresholdPolicy,
    /// Amplitude for the initial conditions that take one.
    #[serde(default)]
    pub magnitude: Option<f64>,
    /// Snapshot to continue from instead of building the initial condition.
    #[serde(default)]
    pub resume: Option<PathBuf>,
    /// Log a progress line every this many steps; `0` is silent.
    #[serde(default)]
    pub log_every: usize,
    /// Convergence study: final time and step ladder.
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub ladder: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| HarnessError::Validation(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Validation(msg));
        if !(1..=MAX_DIM).contains(&self.d) {
            return bad(format!("d must be 1, 2 or 3, got {}", self.d));
        }
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return bad(format!("n must be even and at least 4, got {}", self.n));
        }
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return bad(format!("tau must be finite and positive, got {}", self.tau));
        }
        if let Some(mag) = self.magnitude {
            if !(mag.is_finite() && mag >= 0.0) {
                return bad(format!("magnitude must be finite and nonnegative, got {mag}"));
            }
        }
        if self.resume.is_none() {
            InitialCondition::parse(self)?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TorusGrid, HarnessError> {
        TorusGrid::new(self.d, self.n).map_err(|e| HarnessError::Validation(e.to_string()))
    }
}

/// Registered initial conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// Node-wise random directions at a fixed magnitude (default 0.8).
    RandomDirection { magnitude: f64 },
    /// `magnitude · (cos x sin y, sin x cos y)`, default magnitude 0.8; `m = 2`, `d ≥ 2`.
    Trig { magnitude: f64 },
    /// Band-limited multi-mode field, default magnitude 0.8.
    Multimode { magnitude: f64 },
    Zero,
    /// Constant `e₁` for vectors, constant identity for matrices.
    Unit,
    Star,
    Stripe,
    /// Node-wise random matrices with `‖U‖_F = magnitude` (default `√m`).
    RandomMatrix { magnitude: f64 },
}

pub const IC_NAMES: [&str; 8] = [
    "random_direction",
    "trig",
    "multimode",
    "zero",
    "unit",
    "star",
    "stripe",
    "random_matrix",
];

impl InitialCondition {
    pub fn parse(cfg: &RunConfig) -> Result<Self, HarnessError> {
        let mag = |default: f64| cfg.magnitude.unwrap_or(default);
        let ic = match cfg.ic.as_str() {
            "random_direction" => InitialCondition::RandomDirection { magnitude: mag(0.8) },
            "trig" => InitialCondition::Trig { magnitude: mag(0.8) },
            "multimode" => InitialCondition::Multimode { magnitude: mag(0.8) },
            "zero" => InitialCondition::Zero,
            "unit" => InitialCondition::Unit,
            "star" => InitialCondition::Star,
            "stripe" => InitialCondition::Stripe,
            "random_matrix" => InitialCondition::RandomMatrix {
                magnitude: mag((cfg.m as f64).sqrt()),
            },
            other => {
                return Err(HarnessError::Validation(format!(
                    "unknown initial condition `{other}`; known: {}",
                    IC_NAMES.join(", ")
                )))
            }
        };
        let reject = |why: &str| {
            Err(HarnessError::Validation(format!(
                "initial condition `{}` {why}",
                cfg.ic
            )))
        };
        match (ic, cfg.model) {
            (InitialCondition::RandomDirection { .. } | InitialCondition::Trig { .. } | InitialCondition::Multimode { .. }, Model::Matrix) => {
                return reject("is only defined for the vector model")
            }
            (InitialCondition::Star | InitialCondition::Stripe | InitialCondition::RandomMatrix { .. }, Model::Vector) => {
                return reject("is only defined for the matrix model")
            }
            _ => {}
        }
        if matches!(ic, InitialCondition::Trig { .. }) && (cfg.m != 2 || cfg.d < 2) {
            return reject("needs m = 2 and d >= 2");
        }
        if matches!(ic, InitialCondition::Star | InitialCondition::Stripe) && (cfg.m != 2 || cfg.d != 2) {
            return reject("needs m = 2 and d = 2");
        }
        Ok(ic)
    }
}
