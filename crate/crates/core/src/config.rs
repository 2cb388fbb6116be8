//! Run configuration: one JSON document per run, validated before anything
//! executes. Unknown keys are rejected and errors carry the offending field
//! path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::experiments::{DriftConfig, EscapeScanConfig, SStarDecayConfig};
use crate::interval_map::{DEFAULT_GRID, DEFAULT_ROOT_TOL};
use crate::quadrature::DEFAULT_TOL;
use crate::state::SimParams;
use crate::twist::{RuleFamily, TwistRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub sim: SimParams,
    pub events: u64,
    /// Per-event CSV log.
    #[serde(default)]
    pub event_log: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapAnalyzeConfig {
    pub rule: TwistRule,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_root_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmasConfig {
    pub family: RuleFamily,
    pub lambdas: Vec<f64>,
    /// Points on `[0, 1]` for the `F(t)` curve; 0 disables it.
    #[serde(default = "default_t_points")]
    pub t_points: usize,
    #[serde(default = "default_quad_tol")]
    pub tol: f64,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

fn default_root_tol() -> f64 {
    DEFAULT_ROOT_TOL
}

fn default_t_points() -> usize {
    11
}

fn default_quad_tol() -> f64 {
    DEFAULT_TOL
}

impl MapAnalyzeConfig {
    pub fn new(rule: TwistRule) -> Self {
        Self {
            rule,
            grid: DEFAULT_GRID,
            tol: DEFAULT_ROOT_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rule.validate()?;
        if self.grid < 8 {
            return Err(invalid("grid", "need at least 8 points"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        Ok(())
    }
}

impl LemmasConfig {
    pub fn new(family: RuleFamily, lambdas: Vec<f64>) -> Self {
        Self {
            family,
            lambdas,
            t_points: default_t_points(),
            tol: DEFAULT_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !l.is_finite()) {
            return Err(invalid("lambdas", "need at least one finite value"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        Ok(())
    }
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.events == 0 {
            return Err(invalid("events", "must be positive"));
        }
        Ok(())
    }
}

/// Top-level document. Only the block of the subcommand being run is
/// required; `seed` and `workers` override the corresponding fields of that
/// block.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub escape_scan: Option<EscapeScanConfig>,
    #[serde(default)]
    pub drift: Option<DriftConfig>,
    #[serde(default)]
    pub sstar_decay: Option<SStarDecayConfig>,
    #[serde(default)]
    pub map_analyze: Option<MapAnalyzeConfig>,
    #[serde(default)]
    pub lemmas: Option<LemmasConfig>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The block for `name`, or a config error naming the missing key.
    pub fn require<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T> {
        block.as_ref().ok_or_else(|| Error::Config {
            path: name.to_string(),
            message: "block missing from config".into(),
        })
    }
}
