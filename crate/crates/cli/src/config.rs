//! JSON run configuration.

use std::path::{Path, PathBuf};

use levy_cumulants::rho_alpha::{RhoAlphaNigModel, ScanParameter, DEFAULT_TIMES};
use levy_cumulants::multiindex::DEFAULT_MAX_ORDER;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// The configuration shipped as `config/default.json`.
pub const DEFAULT_CONFIG_JSON: &str = include_str!("../config/default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub gamma: Vec<f64>,
    pub delta: Vec<f64>,
    pub beta: Vec<f64>,
    /// Correlation matrix of the common Brownian part, row by row.
    pub rho: Vec<Vec<f64>>,
    pub a: f64,
    /// Location drifts. Accepted but not used: they do not affect any
    /// cumulant of order two or more, and the first-order values are reported
    /// without them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// `rho`, `a` or `t`.
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: PathBuf,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    /// Largest total order reported.
    #[serde(default = "default_orders")]
    pub orders: u32,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_num_paths")]
    pub num_paths: usize,
    /// Worker threads; all available cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_orders() -> u32 {
    4
}

fn default_times() -> Vec<f64> {
    DEFAULT_TIMES.to_vec()
}

fn default_seed() -> u64 {
    20_240_601
}

fn default_num_paths() -> usize {
    1_000_000
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_json(DEFAULT_CONFIG_JSON).expect("shipped default config is valid")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn model(&self) -> Result<RhoAlphaNigModel, CliError> {
        let m = &self.model;
        let n = m.gamma.len();
        if m.rho.len() != n || m.rho.iter().any(|row| row.len() != n) {
            return Err(CliError::Input(format!("rho must be a {n}x{n} matrix")));
        }
        let rho = DMatrix::from_fn(n, n, |i, j| m.rho[i][j]);
        Ok(RhoAlphaNigModel::new(
            m.gamma.clone(),
            m.delta.clone(),
            m.beta.clone(),
            rho,
            m.a,
        )?)
    }

    pub fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }

    /// Checks every invariant that does not depend on a command.
    pub fn validate(&self) -> Result<(), CliError> {
        let model = self.model()?;
        if let Some(d) = &self.model.drift {
            if d.len() != model.dim() {
                return Err(CliError::Input(format!(
                    "drift has {} entries, model has {} assets",
                    d.len(),
                    model.dim()
                )));
            }
        }
        if self.orders == 0 {
            return Err(CliError::Input("orders must be at least 1".into()));
        }
        if self.orders > DEFAULT_MAX_ORDER {
            return Err(CliError::Capacity(format!(
                "orders = {} exceeds the order cap {DEFAULT_MAX_ORDER}",
                self.orders
            )));
        }
        if self.times.is_empty() || self.times.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(CliError::Input("times must be a non-empty list of positive numbers".into()));
        }
        if self.workers == Some(0) {
            return Err(CliError::Input("workers must be at least 1".into()));
        }
        if let Some(scan) = &self.scan {
            let param: ScanParameter = scan.param.parse()?;
            check_scan_range(&model, param, scan.from, scan.to)?;
            if scan.steps == 0 {
                return Err(CliError::Input("scan steps must be at least 1".into()));
            }
        }
        Ok(())
    }
}

/// `ρ ∈ [−1, 1]`, `a ∈ (0, a_max]`, `t > 0`.
pub fn check_scan_range(model: &RhoAlphaNigModel, param: ScanParameter, from: f64, to: f64) -> Result<(), CliError> {
    for x in [from, to] {
        let ok = match param {
            ScanParameter::Rho => (-1.0..=1.0).contains(&x),
            ScanParameter::A => x > 0.0 && x <= model.a_max() * (1.0 + 1e-12),
            ScanParameter::T => x > 0.0 && x.is_finite(),
        };
        if !ok {
            let range = match param {
                ScanParameter::Rho => "[-1, 1]".to_string(),
                ScanParameter::A => format!("(0, {}]", model.a_max()),
                ScanParameter::T => "(0, inf)".to_string(),
            };
            return Err(CliError::Input(format!(
                "scan bound {x} for {} outside {range}",
                param.name()
            )));
        }
    }
    Ok(())
}
