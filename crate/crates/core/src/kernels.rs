//! Kernel functions and their gradients with respect to the first argument.
//!
//! * `rbf`: `k(x, y) = exp(-w |x - y|^2)` (precision-style parameter `w`)
//! * `linear`: `k(x, y) = x . y`
//! * `rational-quadratic`: `k(x, y) = (1 + |x - y|^2 / (2 alpha l^2))^(-alpha)`
//!
//! Parameters that a kind does not use are carried along and ignored.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, sq_dist, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Rbf,
    Linear,
    RationalQuadratic,
}

impl KernelKind {
    /// Stationary kinds depend on `x - y` only.
    pub fn is_stationary(self) -> bool {
        !matches!(self, KernelKind::Linear)
    }
}

impl core::str::FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rbf" => Ok(KernelKind::Rbf),
            "linear" => Ok(KernelKind::Linear),
            "rational-quadratic" | "rq" => Ok(KernelKind::RationalQuadratic),
            other => Err(Error::param("kind", format!("unknown kernel kind `{other}`"))),
        }
    }
}

/// Validated kernel parameters. JSON form:
/// `{"kind": "rbf", "w": 1.0, "alpha": 1.0, "length": 1.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelSpecRepr", into = "KernelSpecRepr")]
pub struct KernelSpec {
    kind: KernelKind,
    w: f64,
    alpha: f64,
    length: f64,
}

#[derive(Serialize, Deserialize)]
struct KernelSpecRepr {
    kind: KernelKind,
    #[serde(default = "one")]
    w: f64,
    #[serde(default = "one")]
    alpha: f64,
    #[serde(default = "one")]
    length: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<KernelSpecRepr> for KernelSpec {
    type Error = String;
    fn try_from(r: KernelSpecRepr) -> core::result::Result<Self, String> {
        KernelSpec::new(r.kind, r.w, r.alpha, r.length).map_err(|e| format!("{e}"))
    }
}

impl From<KernelSpec> for KernelSpecRepr {
    fn from(k: KernelSpec) -> Self {
        KernelSpecRepr {
            kind: k.kind,
            w: k.w,
            alpha: k.alpha,
            length: k.length,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

impl KernelSpec {
    pub fn new(kind: KernelKind, w: f64, alpha: f64, length: f64) -> Result<Self> {
        match kind {
            KernelKind::Rbf => positive("w", w)?,
            KernelKind::RationalQuadratic => {
                positive("alpha", alpha)?;
                positive("length", length)?;
            }
            KernelKind::Linear => {}
        }
        Ok(KernelSpec {
            kind,
            w,
            alpha,
            length,
        })
    }

    pub fn rbf(w: f64) -> Result<Self> {
        Self::new(KernelKind::Rbf, w, 1.0, 1.0)
    }

    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            w: 1.0,
            alpha: 1.0,
            length: 1.0,
        }
    }

    pub fn rational_quadratic(alpha: f64, length: f64) -> Result<Self> {
        Self::new(KernelKind::RationalQuadratic, 1.0, alpha, length)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// `k(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(x.len(), y.len())?;
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Rbf => libm::exp(-self.w * sq_dist(x, y)),
            KernelKind::Linear => dot(x, y),
            KernelKind::RationalQuadratic => {
                let base = 1.0 + sq_dist(x, y) / (2.0 * self.alpha * self.length * self.length);
                libm::pow(base, -self.alpha)
            }
        }
    }

    /// Gradient of `k(., y)` evaluated at `x`.
    pub fn grad_x(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_dim(x.len(), y.len())?;
        let mut g = alloc::vec![0.0; x.len()];
        self.grad_x_into(x, y, &mut g);
        Ok(g)
    }

    /// Writes the gradient of `k(., y)` at `x` into `out`.
    pub(crate) fn grad_x_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        match self.kind {
            KernelKind::Rbf => {
                let k = libm::exp(-self.w * sq_dist(x, y));
                let f = -2.0 * self.w * k;
                for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                    *o = f * (a - b);
                }
            }
            KernelKind::Linear => out.copy_from_slice(y),
            KernelKind::RationalQuadratic => {
                let l2 = self.length * self.length;
                let base = 1.0 + sq_dist(x, y) / (2.0 * self.alpha * l2);
                let f = -libm::pow(base, -self.alpha - 1.0) / l2;
                for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                    *o = f * (a - b);
                }
            }
        }
    }

    /// Gradient of `x -> k(x, x)`. Zero for stationary kinds, `2x` for linear.
    pub fn diag_grad(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            KernelKind::Linear => x.iter().map(|v| 2.0 * v).collect(),
            _ => alloc::vec![0.0; x.len()],
        }
    }

    /// Gram matrix over the rows of `x`.
    pub fn gram(&self, x: &Matrix) -> Matrix {
        let n = x.nrows();
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval_unchecked(x.row(i), x.row(j));
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// Kernel values between `x0` and every row of `x`.
    pub fn cross(&self, x0: &[f64], x: &Matrix) -> Result<Vec<f64>> {
        check_dim(x.ncols(), x0.len())?;
        Ok(x.rows().map(|r| self.eval_unchecked(x0, r)).collect())
    }
}
