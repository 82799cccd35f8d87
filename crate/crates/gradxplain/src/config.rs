//! Run configuration. A JSON file holds any subset of the command-line
//! options under the same (kebab-case) names; flags given on the command
//! line take precedence.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `--hessian-fallback` with or without a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Fallback {
    Enabled(bool),
    Threshold(f64),
}

impl Fallback {
    pub fn threshold(self) -> Option<f64> {
        match self {
            Fallback::Enabled(false) => None,
            Fallback::Enabled(true) => Some(crate::pipeline::DEFAULT_FALLBACK_THRESHOLD),
            Fallback::Threshold(t) => Some(t),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub test_data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub oracle: Option<String>,
    pub explanations: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kernel: Vec<String>,
    pub sigma_grid: Option<String>,
    pub k_grid: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub smooth_window: Option<f64>,
    pub hessian_fallback: Option<Fallback>,
    pub steps: Option<usize>,
    pub step_size: Option<f64>,
    pub grid: Option<String>,
    pub group: Option<PathBuf>,
    pub feature: Option<String>,
    pub bins: Option<usize>,
    pub runs: Option<usize>,
    pub n_train: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RunConfig) -> Self {
        overlay!(self, top; data, test_data, model, oracle, explanations, sigma_grid, k_grid,
            seed, out, smooth_window, hessian_fallback, steps, step_size, grid, group, feature,
            bins, runs, n_train);
        if !top.kernel.is_empty() {
            self.kernel = top.kernel;
        }
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn require<'a, T>(field: &'a Option<T>, flag: &str) -> Result<&'a T> {
        field
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("missing required option --{flag}")))
    }
}
