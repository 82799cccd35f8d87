use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::Label;

/// Which route produced an explanation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplanationSource {
    AnalyticGpc,
    ParzenMimic,
    HessianFallback,
}

impl ExplanationSource {
    pub fn as_str(self) -> &'static str {
        match self {
            ExplanationSource::AnalyticGpc => "analytic-gpc",
            ExplanationSource::ParzenMimic => "parzen-mimic",
            ExplanationSource::HessianFallback => "hessian-fallback",
        }
    }
}

impl core::fmt::Display for ExplanationSource {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for ExplanationSource {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "analytic-gpc" => Ok(ExplanationSource::AnalyticGpc),
            "parzen-mimic" => Ok(ExplanationSource::ParzenMimic),
            "hessian-fallback" => Ok(ExplanationSource::HessianFallback),
            _ => Err(crate::Error::param("source", alloc::format!("unknown source `{s}`"))),
        }
    }
}

/// Gradient of a class-probability function at a query point.
///
/// For the GPC route the gradient is that of `p(y = +1 | x)`. For the Parzen
/// route it is the gradient of `p(y != label | x)` for the label the wrapped
/// classifier assigned, so a positive component means increasing that feature
/// moves the point away from its assigned class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationVector {
    pub query: Vec<f64>,
    pub gradient: Vec<f64>,
    /// `p(y = +1 | x)` for the GPC route, `p(y != label | x)` for the mimic.
    pub predicted_probability: f64,
    pub predicted_label: Label,
    pub source: ExplanationSource,
    /// Set when all kernel densities underflowed and a fallback was used.
    #[serde(default)]
    pub far_field: bool,
}

impl ExplanationVector {
    pub fn dim(&self) -> usize {
        self.query.len()
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm(&self.gradient)
    }
}
