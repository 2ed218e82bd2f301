//! Experiment configuration for `geoptics sweep`.
//!
//! Defaults, all overridable by the file and then by flags:
//!
//! | field          | default                                  |
//! |----------------|------------------------------------------|
//! | `params`       | `gamma = 1.4`, `k = 1`                   |
//! | `u0`           | the model's background state             |
//! | `nu`           | smallest ν with `2^-ν ≤ ε² TV(U¹)`       |
//! | `variant`      | `plain`                                  |
//! | `t_grid`       | `{0.5, 1, 2, 3, 5}·T₀`, tail ratio √2     |
//! | horizon        | `10 T₀`, or `T₀/ε` for `noncompact`      |
//! | `split`        | `coupled` (`δ_r = ε 2^-ν`)               |
//! | `solver`       | `front_cap = 200000`, `delta0 = 0.3`     |
//! | `parallelism`  | 1                                        |
//! | `seed`         | 0                                        |

use std::path::{Path, PathBuf};
use std::sync::Arc;

use geoptics::harness::{Horizon, SplitRule, SweepSettings, Variant};
use geoptics::models::{build_model, ModelParams, SystemModel};
use geoptics::system_ft::FtParams;
use geoptics::PiecewiseConstantFn;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeGrid {
    /// Overrides the computed separation time.
    pub t0: Option<f64>,
    pub multiples: Vec<f64>,
    pub tail_ratio: f64,
    pub horizon: Option<Horizon>,
}

impl Default for TimeGrid {
    fn default() -> Self {
        let s = SweepSettings::default();
        Self { t0: s.t0, multiples: s.t_multiples, tail_ratio: s.tail_ratio, horizon: s.horizon }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    /// Sweep CSV; standard output when absent.
    pub csv: Option<PathBuf>,
    /// Full record as JSON.
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default)]
    pub u0: Option<Vec<f64>>,
    /// Piecewise JSON file, relative to the config file.
    pub u1: PathBuf,
    pub eps: Vec<f64>,
    #[serde(default)]
    pub nu: Option<u32>,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default)]
    pub t_grid: TimeGrid,
    #[serde(default = "default_split")]
    pub split: SplitRule,
    #[serde(default)]
    pub solver: FtParams,
    #[serde(default)]
    pub budget_secs: Option<f64>,
    #[serde(default)]
    pub output: Outputs,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_variant() -> Variant {
    Variant::Plain
}

fn default_split() -> SplitRule {
    SplitRule::Coupled
}

fn default_parallelism() -> usize {
    1
}

/// A config with its files loaded.
pub struct Loaded {
    pub config: ExperimentConfig,
    pub model: Arc<dyn SystemModel>,
    pub u1: PiecewiseConstantFn,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
    }

    pub fn settings(&self) -> SweepSettings {
        SweepSettings {
            variant: self.variant,
            nu: self.nu,
            t0: self.t_grid.t0,
            t_multiples: self.t_grid.multiples.clone(),
            tail_ratio: self.t_grid.tail_ratio,
            horizon: self.t_grid.horizon,
            split: self.split,
            ft: self.solver,
            budget_secs: self.budget_secs,
        }
    }

    /// Checks the invariants and reads `u1` relative to `base`.
    pub fn load(self, base: &Path) -> Result<Loaded, Failure> {
        if self.eps.is_empty() || self.eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Failure::Validation(format!("eps values must lie in (0, 1), got {:?}", self.eps)));
        }
        if self.parallelism == 0 {
            return Err(Failure::Validation("parallelism must be at least 1".into()));
        }
        let model = build_model(&self.model, self.params)?;
        if let Some(u0) = &self.u0 {
            let bg = model.background();
            if u0.len() != bg.len() || u0.iter().zip(bg.iter()).any(|(a, b)| (a - b).abs() > 1e-12) {
                return Err(Failure::Validation(format!("u0 {u0:?} differs from the {} background {:?}", self.model, bg.as_slice())));
            }
        }
        let u1 = read_piecewise(&base.join(&self.u1))?;
        if u1.dim() != model.dim() {
            return Err(Failure::Validation(format!("u1 has dimension {}, model {} needs {}", u1.dim(), self.model, model.dim())));
        }
        Ok(Loaded { config: self, model, u1 })
    }
}

pub fn read_piecewise(path: &Path) -> Result<PiecewiseConstantFn, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}
