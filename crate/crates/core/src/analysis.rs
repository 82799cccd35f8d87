//! Population-level summaries of per-instance explanations: mean-gradient
//! feature ranking, histograms, and two-group comparisons via the two-sample
//! Kolmogorov-Smirnov test and a symmetrized Kullback-Leibler divergence.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::explanation::ExplanationVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub names: Vec<String>,
    pub mean_gradient: Vec<f64>,
    /// 1-based rank of each feature; 1 is the largest mean.
    pub rank: Vec<usize>,
}

impl FeatureRanking {
    /// Feature indices ordered from rank 1 downwards.
    pub fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.rank.len()).collect();
        idx.sort_by_key(|&i| self.rank[i]);
        idx
    }
}

/// Ranks features by the mean of their gradient components, descending.
/// Equal means keep feature order.
pub fn rank_features(explanations: &[ExplanationVector], names: &[String]) -> Result<FeatureRanking> {
    let first = explanations.first().ok_or(Error::Empty("no explanations to rank"))?;
    let d = first.dim();
    check_dim(d, names.len())?;
    let mut sums = vec![0.0; d];
    for e in explanations {
        check_dim(d, e.gradient.len())?;
        for (s, g) in sums.iter_mut().zip(&e.gradient) {
            *s += g;
        }
    }
    let n = explanations.len() as f64;
    let mean_gradient: Vec<f64> = sums.into_iter().map(|s| s / n).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| mean_gradient[b].total_cmp(&mean_gradient[a]).then(a.cmp(&b)));
    let mut rank = vec![0; d];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r + 1;
    }
    Ok(FeatureRanking {
        names: names.to_vec(),
        mean_gradient,
        rank,
    })
}

/// Equal-width binning of `[lo, hi]` plus the pseudo-count used for
/// divergence estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    bin_count: usize,
    lo: f64,
    hi: f64,
    epsilon: f64,
}

impl HistogramSpec {
    pub fn new(bin_count: usize, lo: f64, hi: f64, epsilon: f64) -> Result<Self> {
        if bin_count < 2 {
            return Err(Error::param("bin_count", "need at least two bins"));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::param("range", alloc::format!("degenerate range [{lo}, {hi}]")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::param("epsilon", "must be positive"));
        }
        Ok(HistogramSpec {
            bin_count,
            lo,
            hi,
            epsilon,
        })
    }

    /// `bin_count` bins over `mean +- 4 stddev` of `values`, one pseudo-count
    /// per bin. A constant sample gets a unit-wide range around its value.
    pub fn around(values: &[f64], bin_count: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("no values to bin"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = libm::sqrt(var);
        let half = if sd > 0.0 { 4.0 * sd } else { 0.5 };
        Self::new(bin_count, mean - half, mean + half, 1.0)
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn edges(&self) -> Vec<f64> {
        let w = (self.hi - self.lo) / self.bin_count as f64;
        (0..=self.bin_count)
            .map(|i| if i == self.bin_count { self.hi } else { self.lo + w * i as f64 })
            .collect()
    }

    /// Bin of an in-range value; `None` outside `[lo, hi]`.
    fn bin_of(&self, v: f64) -> Option<usize> {
        if !(v >= self.lo && v <= self.hi) {
            return None;
        }
        let w = (self.hi - self.lo) / self.bin_count as f64;
        let b = libm::floor((v - self.lo) / w) as usize;
        Some(b.min(self.bin_count - 1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub spec: HistogramSpec,
    pub counts: Vec<u64>,
    /// Values below `lo`, counted in the first bin.
    pub clipped_low: u64,
    /// Values above `hi`, counted in the last bin.
    pub clipped_high: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn clipped(&self) -> u64 {
        self.clipped_low + self.clipped_high
    }

    /// `(counts + epsilon)` normalized to frequencies.
    pub fn smoothed_frequencies(&self, epsilon: f64) -> Vec<f64> {
        let total: f64 = self.counts.iter().map(|&c| c as f64 + epsilon).sum();
        self.counts.iter().map(|&c| (c as f64 + epsilon) / total).collect()
    }
}

/// Left-closed, right-open bins with the last bin closed. Out-of-range values
/// are counted in the boundary bins and tallied as clipped; NaNs are dropped.
pub fn histogram(values: &[f64], spec: HistogramSpec) -> Histogram {
    let mut counts = vec![0u64; spec.bin_count];
    let mut clipped_low = 0;
    let mut clipped_high = 0;
    for &v in values {
        match spec.bin_of(v) {
            Some(b) => counts[b] += 1,
            None if v < spec.lo => {
                counts[0] += 1;
                clipped_low += 1;
            }
            None if v > spec.hi => {
                counts[spec.bin_count - 1] += 1;
                clipped_high += 1;
            }
            None => {}
        }
    }
    Histogram {
        spec,
        counts,
        clipped_low,
        clipped_high,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// `sup |F_a - F_b|`.
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test. The p-value is the asymptotic
/// Kolmogorov tail `Q(sqrt(n_e) D)` with `n_e = n_a n_b / (n_a + n_b)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("both samples must be nonempty"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let v = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < na && a[i] <= v {
            i += 1;
        }
        while j < nb && b[j] <= v {
            j += 1;
        }
        d = d.max(libm::fabs(i as f64 / na as f64 - j as f64 / nb as f64));
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(libm::sqrt(ne) * d),
    })
}

/// Kolmogorov survival function `Q(x) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 x^2)`.
///
/// For small `x` the alternating series converges slowly, so the equivalent
/// theta-function form `1 - sqrt(2 pi)/x sum exp(-(2j-1)^2 pi^2 / (8 x^2))`
/// is used there. Both series stop after 100 terms or a term below 1e-10.
pub fn kolmogorov_sf(x: f64) -> f64 {
    use core::f64::consts::PI;
    if !(x > 0.0) {
        return 1.0;
    }
    let q = if x < 1.0 {
        let mut s = 0.0;
        for j in 1..=100 {
            let k = (2 * j - 1) as f64;
            let t = libm::exp(-k * k * PI * PI / (8.0 * x * x));
            s += t;
            if t < 1e-10 {
                break;
            }
        }
        1.0 - libm::sqrt(2.0 * PI) / x * s
    } else {
        let mut s = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let t = libm::exp(-2.0 * jf * jf * x * x);
            s += if j % 2 == 1 { t } else { -t };
            if t < 1e-10 {
                break;
            }
        }
        2.0 * s
    };
    q.clamp(0.0, 1.0)
}

/// `(KL(P, Q) + KL(Q, P)) / 2` on histograms smoothed by `epsilon` per bin.
pub fn sym_kld(a: &Histogram, b: &Histogram, epsilon: f64) -> Result<f64> {
    if a.spec.bin_count != b.spec.bin_count || a.spec.lo != b.spec.lo || a.spec.hi != b.spec.hi {
        return Err(Error::BinningMismatch);
    }
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be positive"));
    }
    let p = a.smoothed_frequencies(epsilon);
    let q = b.smoothed_frequencies(epsilon);
    let mut kl_pq = 0.0;
    let mut kl_qp = 0.0;
    for (pi, qi) in p.iter().zip(&q) {
        let l = libm::log(pi / qi);
        kl_pq += pi * l;
        kl_qp -= qi * l;
    }
    Ok(0.5 * (kl_pq + kl_qp))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub feature: usize,
    pub n_in: usize,
    pub n_out: usize,
    pub hist_in: Histogram,
    pub hist_out: Histogram,
    pub ks: KsResult,
    pub sym_kld: f64,
}

/// Compares one gradient component between the explanations inside and
/// outside `group_mask`. Without a spec, 30 bins over the pooled
/// `mean +- 4 stddev` with one pseudo-count per bin are used.
pub fn compare_groups(
    explanations: &[ExplanationVector],
    feature: usize,
    group_mask: &[bool],
    spec: Option<HistogramSpec>,
) -> Result<GroupComparison> {
    check_dim(explanations.len(), group_mask.len())?;
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (e, &m) in explanations.iter().zip(group_mask) {
        let v = *e.gradient.get(feature).ok_or(Error::DimensionMismatch {
            expected: feature + 1,
            found: e.gradient.len(),
        })?;
        if m {
            inside.push(v);
        } else {
            outside.push(v);
        }
    }
    if inside.is_empty() || outside.is_empty() {
        return Err(Error::Empty("the group mask must leave both groups nonempty"));
    }
    let spec = match spec {
        Some(s) => s,
        None => {
            let pooled: Vec<f64> = inside.iter().chain(&outside).copied().collect();
            HistogramSpec::around(&pooled, 30)?
        }
    };
    let hist_in = histogram(&inside, spec);
    let hist_out = histogram(&outside, spec);
    let ks = ks_two_sample(&inside, &outside)?;
    let kld = sym_kld(&hist_in, &hist_out, spec.epsilon)?;
    Ok(GroupComparison {
        feature,
        n_in: inside.len(),
        n_out: outside.len(),
        hist_in,
        hist_out,
        ks,
        sym_kld: kld,
    })
}
