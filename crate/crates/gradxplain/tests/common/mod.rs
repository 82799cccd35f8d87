#![allow(dead_code)]

use gradxplain_core::linalg::Matrix;
use rand::Rng;

/// Central differences of `f` at `x` with step `h`.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|j| {
            p[j] = x[j] + h;
            let fp = f(&p);
            p[j] = x[j] - h;
            let fm = f(&p);
            p[j] = x[j];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    d / (norm(a) * norm(b))
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn uniform_points<R: Rng>(rng: &mut R, n: usize, d: usize, lo: f64, hi: f64) -> Matrix {
    let v = (0..n * d).map(|_| rng.random_range(lo..hi)).collect();
    Matrix::from_row_major(n, d, v).unwrap()
}

/// Kernel sum over the references whose label is (`inside`) or is not `c`,
/// divided by the total. Weights are shifted by the smallest exponent.
pub fn naive_ratio(refs: &Matrix, labels: &[i64], sigma: f64, x: &[f64], c: i64, inside: bool) -> f64 {
    let e: Vec<f64> = refs
        .rows()
        .map(|r| r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * sigma * sigma))
        .collect();
    let m = e.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = e.iter().map(|v| (-(v - m)).exp()).collect();
    let total: f64 = w.iter().sum();
    let part: f64 = w.iter().zip(labels).filter(|(_, l)| (**l == c) == inside).map(|(k, _)| k).sum();
    part / total
}

/// Central differences of `p(y != c | x)`. Near 1 the ratio `out / total`
/// is within rounding of 1 and differencing it cancels most digits, so the
/// small side `-in / total` is differenced there instead.
pub fn fd_complement(refs: &Matrix, labels: &[i64], sigma: f64, z: &[f64], c: i64, h: f64) -> Vec<f64> {
    if naive_ratio(refs, labels, sigma, z, c, false) > 0.5 {
        fd_gradient(|x| -naive_ratio(refs, labels, sigma, x, c, true), z, h)
    } else {
        fd_gradient(|x| naive_ratio(refs, labels, sigma, x, c, false), z, h)
    }
}
