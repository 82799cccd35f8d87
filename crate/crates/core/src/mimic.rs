//! Parzen-window mimic of an arbitrary classifier `g`.
//!
//! Reference points `x_i` carry the labels `g(x_i)`. With the Gaussian window
//! `k_s(z) = exp(-z.z / (2 s^2)) / sqrt(2 pi s^2)` the mimic estimates
//!
//! ```text
//! p(x, y = c) = (1/m) sum_{i in I_c} k_s(x - x_i)
//! p(y = c | x) = sum_{i in I_c} k_s(x - x_i) / sum_i k_s(x - x_i)
//! ```
//!
//! The window keeps its one-dimensional normalization for any input
//! dimension, so `p(x, y = c)` is not a normalized d-dimensional density. The
//! constant cancels in the posterior and in the explanation vector.
//!
//! The explanation of a point `z` labelled `g(z)` is the gradient of
//! `p(y != g(z) | x)` at `x = z`:
//!
//! ```text
//! ( S_out * sum_{in} k_i (z - x_i) - S_in * sum_{out} k_i (z - x_i) ) / (s^2 S^2)
//! ```
//!
//! where `S_in`/`S_out` sum the kernels inside/outside `I_g(z)` and `S` is
//! their total. All sums are computed relative to the nearest reference so
//! that ratios survive small widths; a query is "far-field" only when the
//! unscaled total density underflows to zero.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::explanation::{ExplanationSource, ExplanationVector};
use crate::linalg::{sq_dist, symmetric_eigen, Matrix};
use crate::Label;

/// A value together with the far-field flag of the query that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub far_field: bool,
}

#[derive(Debug, Clone)]
pub struct ParzenMimic {
    ref_x: Matrix,
    ref_labels: Vec<Label>,
    sigma: f64,
    /// Sorted distinct labels.
    classes: Vec<Label>,
    /// Position in `classes` of each reference label.
    class_of: Vec<usize>,
}

/// Serializable form: reference points, their labels and the window width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParzenMimicParts {
    pub ref_x: Vec<Vec<f64>>,
    pub ref_labels: Vec<Label>,
    pub sigma: f64,
}

/// Kernel weights at a query, scaled by `exp(min_i e_i)`.
struct Weights {
    k: Vec<f64>,
    far_field: bool,
}

fn validate_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::param("sigma", alloc::format!("must be positive and finite, got {sigma}")))
    }
}

fn distinct_classes(labels: &[Label]) -> (Vec<Label>, Vec<usize>) {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let class_of = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    (classes, class_of)
}

/// Scaled Gaussian weights `exp(-(e_i - e_min))` with `e_i = |x - x_i|^2 / (2 s^2)`.
/// `skip` excludes one reference (leave-one-out).
fn scaled_weights<'a>(
    sq: impl Iterator<Item = f64> + Clone + 'a,
    sigma: f64,
    skip: Option<usize>,
) -> Weights {
    let inv = 1.0 / (2.0 * sigma * sigma);
    let e_min = sq
        .clone()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, d)| d * inv)
        .fold(f64::INFINITY, f64::min);
    let far_field = !(libm::exp(-e_min) > 0.0);
    let k = sq
        .enumerate()
        .map(|(i, d)| {
            if Some(i) == skip {
                0.0
            } else {
                libm::exp(-(d * inv - e_min))
            }
        })
        .collect();
    Weights { k, far_field }
}

impl ParzenMimic {
    pub fn new(ref_x: Matrix, ref_labels: Vec<Label>, sigma: f64) -> Result<Self> {
        check_dim(ref_x.nrows(), ref_labels.len())?;
        if ref_x.nrows() == 0 {
            return Err(Error::Empty("mimic needs at least one reference point"));
        }
        validate_sigma(sigma)?;
        let (classes, class_of) = distinct_classes(&ref_labels);
        Ok(ParzenMimic {
            ref_x,
            ref_labels,
            sigma,
            classes,
            class_of,
        })
    }

    pub fn from_parts(parts: ParzenMimicParts) -> Result<Self> {
        Self::new(Matrix::from_rows(&parts.ref_x)?, parts.ref_labels, parts.sigma)
    }

    pub fn to_parts(&self) -> ParzenMimicParts {
        ParzenMimicParts {
            ref_x: self.ref_x.rows().map(|r| r.to_vec()).collect(),
            ref_labels: self.ref_labels.clone(),
            sigma: self.sigma,
        }
    }

    /// Same references and labels, different width.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        validate_sigma(sigma)?;
        Ok(ParzenMimic {
            sigma,
            ..self.clone()
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn ref_x(&self) -> &Matrix {
        &self.ref_x
    }

    pub fn ref_labels(&self) -> &[Label] {
        &self.ref_labels
    }

    pub fn dim(&self) -> usize {
        self.ref_x.ncols()
    }

    /// Distinct reference labels in ascending order.
    pub fn classes(&self) -> &[Label] {
        &self.classes
    }

    /// `I_c`: indices of the references labelled `c` (empty for unknown `c`).
    pub fn index_set(&self, c: Label) -> Vec<usize> {
        self.ref_labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == c)
            .map(|(i, _)| i)
            .collect()
    }

    fn weights(&self, x: &[f64]) -> Result<Weights> {
        check_dim(self.dim(), x.len())?;
        Ok(scaled_weights(
            self.ref_x.rows().map(move |r| sq_dist(x, r)),
            self.sigma,
            None,
        ))
    }

    /// `p(x, y = c)`, with the window's one-dimensional normalization.
    pub fn joint(&self, x: &[f64], c: Label) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        let norm = libm::sqrt(2.0 * core::f64::consts::PI * self.sigma * self.sigma);
        let m = self.ref_x.nrows() as f64;
        let s: f64 = self
            .ref_x
            .rows()
            .zip(&self.ref_labels)
            .filter(|(_, l)| **l == c)
            .map(|(r, _)| libm::exp(-sq_dist(x, r) * inv))
            .sum();
        Ok(s / norm / m)
    }

    fn prior(&self, c: Label) -> f64 {
        self.ref_labels.iter().filter(|l| **l == c).count() as f64 / self.ref_labels.len() as f64
    }

    /// `p(y = c | x)`. In the far field the class prior `|I_c| / m` is returned.
    pub fn posterior(&self, x: &[f64], c: Label) -> Result<Flagged<f64>> {
        let w = self.weights(x)?;
        if w.far_field {
            return Ok(Flagged {
                value: self.prior(c),
                far_field: true,
            });
        }
        let (inside, total) = split_sums(&w.k, &self.ref_labels, c);
        Ok(Flagged {
            value: inside / total,
            far_field: false,
        })
    }

    /// `p(y != c | x)`, defined as `1 - p(y = c | x)` so the two add up
    /// exactly.
    pub fn posterior_not(&self, x: &[f64], c: Label) -> Result<Flagged<f64>> {
        let p = self.posterior(x, c)?;
        Ok(Flagged {
            value: 1.0 - p.value,
            far_field: p.far_field,
        })
    }

    /// Posterior of every class in [`classes`](Self::classes) order.
    pub fn posteriors(&self, x: &[f64]) -> Result<Flagged<Vec<f64>>> {
        let w = self.weights(x)?;
        if w.far_field {
            return Ok(Flagged {
                value: self.classes.iter().map(|&c| self.prior(c)).collect(),
                far_field: true,
            });
        }
        let mut sums = vec![0.0; self.classes.len()];
        for (k, &ci) in w.k.iter().zip(&self.class_of) {
            sums[ci] += k;
        }
        let total: f64 = sums.iter().sum();
        Ok(Flagged {
            value: sums.into_iter().map(|s| s / total).collect(),
            far_field: false,
        })
    }

    /// Class with the largest posterior; ties go to the lowest label. In the
    /// far field the majority class is returned.
    pub fn predict(&self, x: &[f64]) -> Result<Flagged<Label>> {
        let w = self.weights(x)?;
        Ok(self.predict_from_weights(&w, None))
    }

    fn predict_from_weights(&self, w: &Weights, skip: Option<usize>) -> Flagged<Label> {
        let mut sums = vec![0.0; self.classes.len()];
        if w.far_field {
            for (i, &ci) in self.class_of.iter().enumerate() {
                if Some(i) != skip {
                    sums[ci] += 1.0;
                }
            }
        } else {
            for (k, &ci) in w.k.iter().zip(&self.class_of) {
                sums[ci] += k;
            }
        }
        let mut best = 0;
        for (ci, s) in sums.iter().enumerate() {
            if *s > sums[best] {
                best = ci;
            }
        }
        Flagged {
            value: self.classes[best],
            far_field: w.far_field,
        }
    }

    /// Estimated explanation vector at `z` for the label `g_label` assigned
    /// by the wrapped classifier: the gradient of `p(y != g_label | x)` at `z`.
    pub fn explain(&self, z: &[f64], g_label: Label) -> Result<ExplanationVector> {
        let w = self.weights(z)?;
        let d = z.len();
        if w.far_field {
            return Ok(ExplanationVector {
                query: z.to_vec(),
                gradient: vec![0.0; d],
                predicted_probability: 1.0 - self.prior(g_label),
                predicted_label: g_label,
                source: ExplanationSource::ParzenMimic,
                far_field: true,
            });
        }
        let mut s_in = 0.0;
        let mut s_out = 0.0;
        let mut m_in = vec![0.0; d];
        let mut m_out = vec![0.0; d];
        for ((k, r), l) in w.k.iter().zip(self.ref_x.rows()).zip(&self.ref_labels) {
            let (s, m) = if *l == g_label {
                (&mut s_in, &mut m_in)
            } else {
                (&mut s_out, &mut m_out)
            };
            *s += k;
            for j in 0..d {
                m[j] += k * (z[j] - r[j]);
            }
        }
        let total = s_in + s_out;
        let denom = self.sigma * self.sigma * total * total;
        let gradient = m_in
            .iter()
            .zip(&m_out)
            .map(|(a, b)| (s_out * a - s_in * b) / denom)
            .collect();
        Ok(ExplanationVector {
            query: z.to_vec(),
            gradient,
            predicted_probability: 1.0 - s_in / total,
            predicted_label: g_label,
            source: ExplanationSource::ParzenMimic,
            far_field: false,
        })
    }

    /// `p(y != c | x)` as the ratio of the outside sum to the total, which
    /// keeps full relative precision when the value is tiny.
    fn complement_ratio(&self, x: &[f64], c: Label) -> f64 {
        let w = match self.weights(x) {
            Ok(w) => w,
            Err(_) => return f64::NAN,
        };
        if w.far_field {
            return 1.0 - self.prior(c);
        }
        let (inside, total) = split_sums(&w.k, &self.ref_labels, c);
        let outside: f64 = w
            .k
            .iter()
            .zip(&self.ref_labels)
            .filter(|(_, l)| **l != c)
            .map(|(k, _)| k)
            .sum();
        debug_assert!(inside <= total);
        outside / total
    }

    /// Central finite-difference Hessian of `p(y != g_label | x)` at `z`,
    /// step `1e-4 * sigma`.
    pub fn hessian(&self, z: &[f64], g_label: Label) -> Result<Matrix> {
        check_dim(self.dim(), z.len())?;
        Ok(fd_hessian(|x| self.complement_ratio(x, g_label), z, HESSIAN_STEP * self.sigma))
    }

    /// Most informative orientation-free direction at `z` when the explanation
    /// vector vanishes: the top eigenvector of the Hessian of
    /// `p(y != g_label | x)`.
    ///
    /// The Hessian counts as zero when no entry exceeds the rounding noise of
    /// the second differences, `64 eps |p| / h^2`.
    pub fn hessian_direction(&self, z: &[f64], g_label: Label) -> Result<HessianDirection> {
        let h = self.hessian(z, g_label)?;
        let step = HESSIAN_STEP * self.sigma;
        let p = self.complement_ratio(z, g_label);
        let noise = 64.0 * f64::EPSILON * libm::fabs(p) / (step * step);
        principal_direction(&h, noise)
    }
}

const HESSIAN_STEP: f64 = 1e-4;

fn split_sums(k: &[f64], labels: &[Label], c: Label) -> (f64, f64) {
    let mut inside = 0.0;
    let mut total = 0.0;
    for (k, l) in k.iter().zip(labels) {
        total += k;
        if *l == c {
            inside += k;
        }
    }
    (inside, total)
}

/// Result of [`ParzenMimic::hessian_direction`].
#[derive(Debug, Clone, PartialEq)]
pub struct HessianDirection {
    /// Unit vector, sign fixed so that its first non-negligible component is positive.
    pub direction: Vec<f64>,
    /// Largest eigenvalue.
    pub eigenvalue: f64,
    /// Full spectrum, descending.
    pub spectrum: Vec<f64>,
}

/// Central finite-difference Hessian of `f` at `z` with step `h`.
pub fn fd_hessian<F: Fn(&[f64]) -> f64>(f: F, z: &[f64], h: f64) -> Matrix {
    let d = z.len();
    let mut hess = Matrix::zeros(d, d);
    let f0 = f(z);
    let mut x = z.to_vec();
    for i in 0..d {
        x[i] = z[i] + h;
        let fp = f(&x);
        x[i] = z[i] - h;
        let fm = f(&x);
        x[i] = z[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let mut eval = |si: f64, sj: f64| {
                x[i] = z[i] + si * h;
                x[j] = z[j] + sj * h;
                let v = f(&x);
                x[i] = z[i];
                x[j] = z[j];
                v
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

/// Top eigenpair of a symmetric matrix, erroring when its largest entry is
/// below `zero_threshold`.
pub fn principal_direction(h: &Matrix, zero_threshold: f64) -> Result<HessianDirection> {
    let max_abs = h.as_slice().iter().fold(0.0f64, |a, v| a.max(libm::fabs(*v)));
    if !(max_abs > zero_threshold) {
        return Err(Error::NoInformativeDirection);
    }
    let eig = symmetric_eigen(h)?;
    let mut direction = eig.vectors[0].clone();
    let n = crate::linalg::norm(&direction);
    for v in direction.iter_mut() {
        *v /= n;
    }
    if let Some(first) = direction.iter().find(|v| libm::fabs(**v) > 1e-12) {
        if *first < 0.0 {
            for v in direction.iter_mut() {
                *v = -*v;
            }
        }
    }
    Ok(HessianDirection {
        direction,
        eigenvalue: eig.values[0],
        spectrum: eig.values,
    })
}

/// Probe set used to score candidate widths.
#[derive(Debug, Clone, Copy)]
pub enum Probes<'a> {
    /// Each reference point is scored by a mimic built from all other references.
    LeaveOneOut,
    /// Extra points labelled by the wrapped classifier.
    External { x: &'a Matrix, labels: &'a [Label] },
}

/// Outcome of [`select_width`].
#[derive(Debug, Clone, PartialEq)]
pub struct WidthSelection {
    pub sigma: f64,
    /// Disagreement count of each candidate, in candidate order.
    pub disagreements: Vec<usize>,
    pub probe_count: usize,
}

/// Picks the width whose mimic disagrees least with the wrapped classifier
/// on the probes. Ties go to the larger width: on separable data the count
/// is flat down to arbitrarily small widths, where explanations vanish.
/// Candidates are scored independently, so the result does not depend on
/// their order.
pub fn select_width(
    ref_x: &Matrix,
    ref_labels: &[Label],
    probes: Probes<'_>,
    candidates: &[f64],
) -> Result<WidthSelection> {
    check_dim(ref_x.nrows(), ref_labels.len())?;
    if ref_x.nrows() == 0 {
        return Err(Error::Empty("no reference points"));
    }
    if candidates.is_empty() {
        return Err(Error::Empty("no candidate widths"));
    }
    let valid: Vec<(usize, f64)> = candidates
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, s)| *s > 0.0 && s.is_finite())
        .collect();
    if valid.is_empty() {
        return Err(Error::param("candidate_sigmas", "no positive candidate"));
    }
    // any width works as a template; only the references matter
    let mimic = ParzenMimic::new(ref_x.clone(), ref_labels.to_vec(), valid[0].1)?;

    // squared distances probe x reference, computed once
    let (sq, probe_labels, loo): (Vec<Vec<f64>>, Vec<Label>, bool) = match probes {
        Probes::LeaveOneOut => {
            if ref_x.nrows() < 2 {
                return Err(Error::Empty("leave-one-out needs two references"));
            }
            let sq = ref_x
                .rows()
                .map(|p| ref_x.rows().map(|r| sq_dist(p, r)).collect())
                .collect();
            (sq, ref_labels.to_vec(), true)
        }
        Probes::External { x, labels } => {
            check_dim(x.nrows(), labels.len())?;
            check_dim(ref_x.ncols(), x.ncols())?;
            if x.nrows() == 0 {
                return Err(Error::Empty("no probe points"));
            }
            let sq = x
                .rows()
                .map(|p| ref_x.rows().map(|r| sq_dist(p, r)).collect())
                .collect();
            (sq, labels.to_vec(), false)
        }
    };

    let mut disagreements = vec![usize::MAX; candidates.len()];
    for &(ci, sigma) in &valid {
        let mut count = 0;
        for (j, row) in sq.iter().enumerate() {
            let skip = if loo { Some(j) } else { None };
            let w = scaled_weights(row.iter().copied(), sigma, skip);
            if mimic.predict_from_weights(&w, skip).value != probe_labels[j] {
                count += 1;
            }
        }
        disagreements[ci] = count;
    }
    let (_, sigma) = valid
        .iter()
        .copied()
        .min_by(|a, b| {
            disagreements[a.0]
                .cmp(&disagreements[b.0])
                .then(b.1.total_cmp(&a.1))
        })
        .expect("nonempty");
    Ok(WidthSelection {
        sigma,
        disagreements,
        probe_count: probe_labels.len(),
    })
}

/// Median of all pairwise Euclidean distances between rows.
pub fn median_pairwise_distance(x: &Matrix) -> f64 {
    let n = x.nrows();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in 0..i {
            d.push(libm::sqrt(sq_dist(x.row(i), x.row(j))));
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    }
}

/// `count` log-spaced widths spanning `[1e-2, 1e2]` times the median pairwise
/// distance (25 values by default in the pipelines).
pub fn default_sigma_grid(x: &Matrix, count: usize) -> Vec<f64> {
    let scale = median_pairwise_distance(x);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    log_space(1e-2 * scale, 1e2 * scale, count)
}

pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (libm::log(lo), libm::log(hi));
            (0..count)
                .map(|i| libm::exp(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

/// Sliding-window smoothing: every gradient becomes the mean of all
/// gradients whose query lies in the axis-aligned cube of half-width
/// `halfwidth` centred on its own query.
pub fn smooth_gradients(
    queries: &[Vec<f64>],
    gradients: &[Vec<f64>],
    halfwidth: f64,
) -> Result<Vec<Vec<f64>>> {
    check_dim(queries.len(), gradients.len())?;
    if !(halfwidth >= 0.0) {
        return Err(Error::param("window_halfwidth", "must be non-negative"));
    }
    let mut out = Vec::with_capacity(gradients.len());
    for q in queries {
        let mut acc = vec![0.0; gradients.first().map_or(0, Vec::len)];
        let mut count = 0usize;
        for (p, g) in queries.iter().zip(gradients) {
            check_dim(q.len(), p.len())?;
            let inside = q.iter().zip(p).all(|(a, b)| libm::fabs(a - b) <= halfwidth);
            if inside {
                check_dim(acc.len(), g.len())?;
                for (a, v) in acc.iter_mut().zip(g) {
                    *a += v;
                }
                count += 1;
            }
        }
        for a in acc.iter_mut() {
            *a /= count as f64;
        }
        out.push(acc);
    }
    Ok(out)
}
