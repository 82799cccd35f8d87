//! Binary Gaussian process classification with a probit likelihood, fitted
//! by expectation propagation, and the closed-form gradient of its
//! predictive class probability.
//!
//! With site variances `Sigma = diag(1 / tau)` and site means `mu = nu / tau`
//! the approximate posterior gives, for a query `x0` with `k* = k(x0, X)`:
//!
//! ```text
//! mean(x0) = sum_i alpha_i k(x0, x_i),        alpha = (K + Sigma)^-1 mu
//! var(x0)  = k(x0, x0) - k*^T (K + Sigma)^-1 k*
//! p(x0)    = erfc(-mean / (sqrt 2 sqrt(1 + var))) / 2
//! ```
//!
//! and the explanation vector is
//!
//! ```text
//! grad p = exp(-mean^2 / (2 (1 + var))) / sqrt(2 pi)
//!          * ( grad mean / sqrt(1 + var) - mean (1 + var)^(-3/2) grad var / 2 )
//! grad var = grad_x k(x0, x0) - 2 k*^T (K + Sigma)^-1 grad k*
//! ```
//!
//! Far from the training data (stationary kernels) `k*` vanishes, the mean
//! goes to 0 and the probability to 1/2, so explanation vectors there are
//! tiny and may point away from the data.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::explanation::{ExplanationSource, ExplanationVector};
use crate::kernels::KernelSpec;
use crate::linalg::{dot, Cholesky, Matrix};
use crate::special::{erfc, inverse_mills};
use crate::Label;

/// Lower bound on site precisions. Keeps every site variance finite so that
/// `K + Sigma` can be factorized directly.
const MIN_SITE_PRECISION: f64 = 1e-10;

/// Negative predictive variances down to this value are treated as round-off.
const VARIANCE_TOLERANCE: f64 = 1e-10;

/// Relative jitter added to the Gram diagonal: `1e-8 * trace(K) / n`.
const JITTER_SCALE: f64 = 1e-8;

/// Tolerance on the relative Frobenius error of a reloaded factorization.
const RECONSTRUCTION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpOptions {
    /// Stop once the largest change of any site natural parameter over one
    /// sweep falls below this.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Fraction of the previous site parameters kept at each update, in [0, 1).
    pub damping: f64,
}

impl Default for EpOptions {
    fn default() -> Self {
        EpOptions {
            tol: 1e-6,
            max_sweeps: 100,
            damping: 0.5,
        }
    }
}

/// A fitted classifier. Immutable; prediction methods take `&self` and are
/// safe to call from several threads.
#[derive(Debug, Clone)]
pub struct GpcModel {
    kernel: KernelSpec,
    train_x: Matrix,
    train_y: Vec<Label>,
    site_variance: Vec<f64>,
    alpha: Vec<f64>,
    chol: Cholesky,
    jitter: f64,
    ep_iterations: usize,
    converged: bool,
}

/// Serializable state of a [`GpcModel`]. The factorization is recomputed on
/// load and checked against `K + Sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpcModelParts {
    pub kernel: KernelSpec,
    pub train_x: Vec<Vec<f64>>,
    pub train_y: Vec<Label>,
    pub site_variance: Vec<f64>,
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub ep_iterations: usize,
    #[serde(default = "yes")]
    pub converged: bool,
}

fn yes() -> bool {
    true
}

/// Latent mean and variance at a point, with their input gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGradient {
    pub mean: f64,
    pub variance: f64,
    pub grad_mean: Vec<f64>,
    pub grad_variance: Vec<f64>,
}

fn validate_labels(y: &[Label]) -> Result<()> {
    if let Some(bad) = y.iter().find(|&&v| v != 1 && v != -1) {
        return Err(Error::InvalidLabels(format!(
            "binary labels must be -1 or +1, found {bad}"
        )));
    }
    if !y.contains(&1) || !y.contains(&-1) {
        return Err(Error::InvalidLabels("both classes must be present".into()));
    }
    Ok(())
}

fn gram_with_jitter(kernel: &KernelSpec, x: &Matrix) -> (Matrix, f64) {
    let mut k = kernel.gram(x);
    let n = x.nrows();
    let jitter = JITTER_SCALE * libm::fabs(k.trace()) / n as f64;
    for i in 0..n {
        k[(i, i)] += jitter;
    }
    (k, jitter)
}

/// Posterior covariance `(K^-1 + S)^-1` and mean, computed through
/// `B = I + S^1/2 K S^1/2` as in the standard EP recipe.
fn recompute_posterior(k: &Matrix, tau: &[f64], nu: &[f64]) -> Result<(Matrix, Vec<f64>)> {
    let n = k.nrows();
    let s: Vec<f64> = tau.iter().map(|t| libm::sqrt(*t)).collect();
    let mut b = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] += s[i] * k[(i, j)] * s[j];
        }
    }
    let l = Cholesky::new(&b)?;
    // V = L^-1 S^1/2 K, column by column
    let mut v = Matrix::zeros(n, n);
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| s[i] * k[(i, j)]).collect();
        let sol = l.solve_lower(&col);
        for i in 0..n {
            v[(i, j)] = sol[i];
        }
    }
    let mut sigma = k.clone();
    for i in 0..n {
        for j in 0..=i {
            let mut acc = 0.0;
            for r in 0..n {
                acc += v[(r, i)] * v[(r, j)];
            }
            let val = k[(i, j)] - acc;
            sigma[(i, j)] = val;
            sigma[(j, i)] = val;
        }
    }
    let mu = sigma.matvec(nu)?;
    Ok((sigma, mu))
}

impl GpcModel {
    /// Fits site parameters by sequential, damped EP sweeps in index order.
    ///
    /// Non-convergence is not an error: the model is returned with
    /// [`converged`](Self::converged) unset and a warning is logged.
    pub fn fit(
        train_x: &Matrix,
        train_y: &[Label],
        kernel: KernelSpec,
        options: EpOptions,
    ) -> Result<Self> {
        let n = train_x.nrows();
        check_dim(n, train_y.len())?;
        if n < 2 {
            return Err(Error::Empty("at least two training points are required"));
        }
        if train_x.ncols() == 0 {
            return Err(Error::Empty("training inputs have no features"));
        }
        validate_labels(train_y)?;
        if !(options.tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        if !(0.0..1.0).contains(&options.damping) {
            return Err(Error::param("damping", "must lie in [0, 1)"));
        }
        if options.max_sweeps == 0 {
            return Err(Error::param("max_sweeps", "must be at least one"));
        }

        let (k, jitter) = gram_with_jitter(&kernel, train_x);
        // fail early on a Gram matrix that is not PSD even after jitter
        Cholesky::new(&k)?;

        let y: Vec<f64> = train_y.iter().map(|&v| v as f64).collect();
        let mut tau = vec![MIN_SITE_PRECISION; n];
        let mut nu = vec![0.0; n];
        let (mut sigma, mut mu) = recompute_posterior(&k, &tau, &nu)?;

        let keep = options.damping;
        let mut converged = false;
        let mut sweeps = 0;
        while sweeps < options.max_sweeps {
            sweeps += 1;
            let mut max_change: f64 = 0.0;
            for i in 0..n {
                let sii = sigma[(i, i)];
                let tau_cav = 1.0 / sii - tau[i];
                if !(tau_cav > 0.0) {
                    // improper cavity; leave this site untouched this sweep
                    continue;
                }
                let nu_cav = mu[i] / sii - nu[i];
                let var_cav = 1.0 / tau_cav;
                let mean_cav = nu_cav * var_cav;

                let denom = libm::sqrt(1.0 + var_cav);
                let z = y[i] * mean_cav / denom;
                let ratio = inverse_mills(z);
                let mean_hat = mean_cav + y[i] * var_cav * ratio / denom;
                let var_hat = var_cav - var_cav * var_cav * ratio / (1.0 + var_cav) * (z + ratio);
                if !(var_hat > 0.0) {
                    continue;
                }

                let tau_target = 1.0 / var_hat - tau_cav;
                let nu_target = mean_hat / var_hat - nu_cav;
                let tau_new =
                    ((1.0 - keep) * tau_target + keep * tau[i]).max(MIN_SITE_PRECISION);
                let nu_new = (1.0 - keep) * nu_target + keep * nu[i];

                let d_tau = tau_new - tau[i];
                max_change = max_change
                    .max(libm::fabs(d_tau))
                    .max(libm::fabs(nu_new - nu[i]));
                tau[i] = tau_new;
                nu[i] = nu_new;

                // rank-one update of the posterior covariance
                let c = d_tau / (1.0 + d_tau * sii);
                let si: Vec<f64> = (0..n).map(|r| sigma[(r, i)]).collect();
                for r in 0..n {
                    let a = c * si[r];
                    if a == 0.0 {
                        continue;
                    }
                    let row = sigma.row_mut(r);
                    for (dst, &b) in row.iter_mut().zip(&si) {
                        *dst -= a * b;
                    }
                }
                mu = sigma.matvec(&nu)?;
            }
            let (s, m) = recompute_posterior(&k, &tau, &nu)?;
            sigma = s;
            mu = m;
            if max_change < options.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            log::warn!(
                "EP did not converge within {} sweeps; returning the last iterate",
                options.max_sweeps
            );
        }

        let site_variance: Vec<f64> = tau.iter().map(|t| 1.0 / t).collect();
        let site_mean: Vec<f64> = nu.iter().zip(&tau).map(|(v, t)| v / t).collect();
        let mut kps = k;
        for i in 0..n {
            kps[(i, i)] += site_variance[i];
        }
        let chol = Cholesky::new(&kps)?;
        let alpha = chol.solve(&site_mean)?;

        Ok(GpcModel {
            kernel,
            train_x: train_x.clone(),
            train_y: train_y.to_vec(),
            site_variance,
            alpha,
            chol,
            jitter,
            ep_iterations: sweeps,
            converged,
        })
    }

    /// Rebuilds a model from stored parts, refactorizing `K + Sigma`.
    pub fn from_parts(parts: GpcModelParts) -> Result<Self> {
        let train_x = Matrix::from_rows(&parts.train_x)?;
        let n = train_x.nrows();
        check_dim(n, parts.train_y.len())?;
        check_dim(n, parts.site_variance.len())?;
        check_dim(n, parts.alpha.len())?;
        if n == 0 {
            return Err(Error::Empty("model has no training points"));
        }
        validate_labels(&parts.train_y)?;
        if let Some(v) = parts.site_variance.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::param("site_variance", format!("entries must be finite and >= 0, found {v}")));
        }
        if parts.alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::param("alpha", "entries must be finite"));
        }
        let (mut kps, jitter) = gram_with_jitter(&parts.kernel, &train_x);
        for i in 0..n {
            kps[(i, i)] += parts.site_variance[i];
        }
        let chol = Cholesky::new(&kps)?;
        let model = GpcModel {
            kernel: parts.kernel,
            train_x,
            train_y: parts.train_y,
            site_variance: parts.site_variance,
            alpha: parts.alpha,
            chol,
            jitter,
            ep_iterations: parts.ep_iterations,
            converged: parts.converged,
        };
        let err = model.reconstruction_error();
        if !(err < RECONSTRUCTION_TOLERANCE) {
            return Err(Error::param(
                "site_variance",
                format!("factorization reconstructs K + Sigma with relative error {err:e}"),
            ));
        }
        Ok(model)
    }

    pub fn to_parts(&self) -> GpcModelParts {
        GpcModelParts {
            kernel: self.kernel,
            train_x: self.train_x.rows().map(|r| r.to_vec()).collect(),
            train_y: self.train_y.clone(),
            site_variance: self.site_variance.clone(),
            alpha: self.alpha.clone(),
            ep_iterations: self.ep_iterations,
            converged: self.converged,
        }
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn train_x(&self) -> &Matrix {
        &self.train_x
    }

    pub fn train_y(&self) -> &[Label] {
        &self.train_y
    }

    pub fn site_variance(&self) -> &[f64] {
        &self.site_variance
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Cholesky factor of `K + Sigma` (with the diagonal jitter folded into `K`).
    pub fn chol_factor(&self) -> &Cholesky {
        &self.chol
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn ep_iterations(&self) -> usize {
        self.ep_iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn dim(&self) -> usize {
        self.train_x.ncols()
    }

    /// `K + Sigma` as used by the factorization.
    pub fn k_plus_sigma(&self) -> Matrix {
        let (mut k, _) = gram_with_jitter(&self.kernel, &self.train_x);
        for (i, v) in self.site_variance.iter().enumerate() {
            k[(i, i)] += v;
        }
        k
    }

    /// Relative Frobenius error of `L L^T` against `K + Sigma`.
    pub fn reconstruction_error(&self) -> f64 {
        let a = self.k_plus_sigma();
        let r = self.chol.reconstruct();
        let n = a.nrows();
        let mut diff = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = a[(i, j)] - r[(i, j)];
                diff += d * d;
            }
        }
        libm::sqrt(diff) / a.frobenius_norm()
    }

    fn clamp_variance(raw: f64) -> Result<f64> {
        if raw >= 0.0 {
            Ok(raw)
        } else if raw >= -VARIANCE_TOLERANCE {
            Ok(0.0)
        } else {
            Err(Error::NegativeVariance(raw))
        }
    }

    /// Latent mean and variance at `x0`.
    pub fn predict_latent(&self, x0: &[f64]) -> Result<(f64, f64)> {
        let kstar = self.kernel.cross(x0, &self.train_x)?;
        let mean = dot(&self.alpha, &kstar);
        let v = self.chol.solve_lower(&kstar);
        let var = Self::clamp_variance(self.kernel.eval_unchecked(x0, x0) - dot(&v, &v))?;
        Ok((mean, var))
    }

    /// Latent mean and variance together with their gradients at `x0`.
    pub fn grad_latent(&self, x0: &[f64]) -> Result<LatentGradient> {
        let kstar = self.kernel.cross(x0, &self.train_x)?;
        let d = x0.len();
        let mean = dot(&self.alpha, &kstar);
        let beta = self.chol.solve(&kstar)?;
        let variance =
            Self::clamp_variance(self.kernel.eval_unchecked(x0, x0) - dot(&kstar, &beta))?;

        let mut grad_mean = vec![0.0; d];
        let mut grad_variance = self.kernel.diag_grad(x0);
        let mut dk = vec![0.0; d];
        for (i, xi) in self.train_x.rows().enumerate() {
            self.kernel.grad_x_into(x0, xi, &mut dk);
            let a = self.alpha[i];
            let b = 2.0 * beta[i];
            for j in 0..d {
                grad_mean[j] += a * dk[j];
                grad_variance[j] -= b * dk[j];
            }
        }
        Ok(LatentGradient {
            mean,
            variance,
            grad_mean,
            grad_variance,
        })
    }

    /// `p(y = +1 | x0)`.
    pub fn predict_proba(&self, x0: &[f64]) -> Result<f64> {
        let (mean, var) = self.predict_latent(x0)?;
        Ok(probit_probability(mean, var))
    }

    /// `+1` when `p >= 1/2`, else `-1`.
    pub fn predict_label(&self, x0: &[f64]) -> Result<Label> {
        Ok(label_of(self.predict_proba(x0)?))
    }

    /// Explanation vector: the gradient of `p(y = +1 | x)` at `x0`.
    pub fn explain(&self, x0: &[f64]) -> Result<ExplanationVector> {
        let lat = self.grad_latent(x0)?;
        let s = 1.0 + lat.variance;
        let prefactor = libm::exp(-lat.mean * lat.mean / (2.0 * s)) / libm::sqrt(2.0 * PI);
        let a = 1.0 / libm::sqrt(s);
        let b = 0.5 * lat.mean / (s * libm::sqrt(s));
        let gradient = lat
            .grad_mean
            .iter()
            .zip(&lat.grad_variance)
            .map(|(gm, gv)| prefactor * (gm * a - b * gv))
            .collect();
        let p = probit_probability(lat.mean, lat.variance);
        Ok(ExplanationVector {
            query: x0.to_vec(),
            gradient,
            predicted_probability: p,
            predicted_label: label_of(p),
            source: ExplanationSource::AnalyticGpc,
            far_field: false,
        })
    }
}

/// `erfc(-mean / (sqrt 2 sqrt(1 + var))) / 2`.
pub fn probit_probability(mean: f64, variance: f64) -> f64 {
    0.5 * erfc(-mean / (SQRT_2 * libm::sqrt(1.0 + variance)))
}

fn label_of(p: f64) -> Label {
    if p >= 0.5 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;

    fn two_point() -> GpcModel {
        let x = Matrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        GpcModel::fit(&x, &[-1, 1], KernelSpec::rbf(1.0).unwrap(), EpOptions::default()).unwrap()
    }

    #[test]
    fn symmetric_two_point_problem() {
        let m = two_point();
        assert!(m.converged());
        assert!((m.alpha()[0] + m.alpha()[1]).abs() < 1e-6);
        assert!(m.alpha()[1] > 0.0);
        let (mean, _) = m.predict_latent(&[0.0]).unwrap();
        // sequential sweeps break exact symmetry, down to the convergence tolerance
        assert!(mean.abs() < 1e-6);
        assert!((m.predict_proba(&[0.0]).unwrap() - 0.5).abs() < 1e-6);
        let e = m.explain(&[0.0]).unwrap();
        assert!(e.gradient[0] > 0.0);
        assert_eq!(m.predict_label(&[0.5]).unwrap(), 1);
        assert_eq!(e.source, ExplanationSource::AnalyticGpc);
    }

    #[test]
    fn far_field_is_uninformative() {
        let m = two_point();
        let (mean, var) = m.predict_latent(&[50.0]).unwrap();
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
        assert!((m.predict_proba(&[50.0]).unwrap() - 0.5).abs() < 1e-12);
        let g = m.grad_latent(&[50.0]).unwrap();
        assert!(crate::linalg::norm(&g.grad_mean) < 1e-6);
        assert!(crate::linalg::norm(&g.grad_variance) < 1e-6);
    }

    #[test]
    fn probit_values() {
        assert_eq!(probit_probability(0.0, 0.7), 0.5);
        // Phi(1)
        assert!((probit_probability(1.0, 0.0) - 0.841_344_746_068_542_9).abs() < 1e-14);
    }

    #[test]
    fn variance_matches_dense_inverse() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.2], [0.3, 0.9], [1.2, 1.1]]).unwrap();
        let m = GpcModel::fit(&x, &[-1, 1, -1, 1], KernelSpec::rbf(0.8).unwrap(), EpOptions::default()).unwrap();
        let inv = gauss_jordan_inverse(&m.k_plus_sigma());
        for q in [[0.5, 0.5], [2.0, -1.0], [0.0, 0.1]] {
            let ks = m.kernel().cross(&q, m.train_x()).unwrap();
            let w = inv.matvec(&ks).unwrap();
            let oracle = 1.0 - dot(&ks, &w);
            let (_, var) = m.predict_latent(&q).unwrap();
            assert!((var - oracle).abs() < 1e-8, "{var} vs {oracle}");
        }
    }

    /// Dense inverse by Gauss-Jordan with partial pivoting (test oracle).
    fn gauss_jordan_inverse(a: &Matrix) -> Matrix {
        let n = a.nrows();
        let mut m = a.clone();
        let mut inv = Matrix::identity(n);
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| m[(i, c)].abs().total_cmp(&m[(j, c)].abs())).unwrap();
            for j in 0..n {
                let t = m[(c, j)];
                m[(c, j)] = m[(p, j)];
                m[(p, j)] = t;
                let t = inv[(c, j)];
                inv[(c, j)] = inv[(p, j)];
                inv[(p, j)] = t;
            }
            let piv = m[(c, c)];
            for j in 0..n {
                m[(c, j)] /= piv;
                inv[(c, j)] /= piv;
            }
            for i in 0..n {
                if i != c {
                    let f = m[(i, c)];
                    for j in 0..n {
                        m[(i, j)] -= f * m[(c, j)];
                        inv[(i, j)] -= f * inv[(c, j)];
                    }
                }
            }
        }
        inv
    }

    #[test]
    fn contradictory_evidence() {
        let x = Matrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap();
        let m = GpcModel::fit(&x, &[1, -1], KernelSpec::rbf(1.0).unwrap(), EpOptions::default()).unwrap();
        let p = m.predict_proba(&[0.5, 0.5]).unwrap();
        assert!(!m.converged() || (p - 0.5).abs() < 1e-6, "p = {p}");
    }

    #[test]
    fn input_validation() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let k = KernelSpec::rbf(1.0).unwrap();
        let o = EpOptions::default();
        assert!(matches!(GpcModel::fit(&x, &[1, 1], k, o), Err(Error::InvalidLabels(_))));
        assert!(matches!(GpcModel::fit(&x, &[0, 1], k, o), Err(Error::InvalidLabels(_))));
        assert!(GpcModel::fit(&x, &[1], k, o).is_err());
        let bad = EpOptions { damping: 1.0, ..o };
        assert!(GpcModel::fit(&x, &[-1, 1], k, bad).is_err());
        let m = GpcModel::fit(&x, &[-1, 1], k, o).unwrap();
        assert!(matches!(m.predict_proba(&[0.0, 1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn parts_round_trip() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.2], [0.3, 0.9]]).unwrap();
        let m = GpcModel::fit(&x, &[-1, 1, 1], KernelSpec::rbf(0.5).unwrap(), EpOptions::default()).unwrap();
        assert!(m.reconstruction_error() < 1e-8);
        assert!(m.site_variance().iter().all(|v| *v >= 0.0));
        let back = GpcModel::from_parts(m.to_parts()).unwrap();
        for q in [[0.1, 0.4], [0.9, 0.9]] {
            assert_eq!(m.predict_proba(&q).unwrap(), back.predict_proba(&q).unwrap());
        }
        let mut broken = m.to_parts();
        broken.site_variance[0] = -1.0;
        assert!(GpcModel::from_parts(broken).is_err());
    }
}
