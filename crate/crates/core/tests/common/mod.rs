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

pub fn uniform_points<R: Rng>(rng: &mut R, n: usize, d: usize, lo: f64, hi: f64) -> Matrix {
    let v = (0..n * d).map(|_| rng.random_range(lo..hi)).collect();
    Matrix::from_row_major(n, d, v).unwrap()
}

/// Kernel weights `exp(-|x - x_i|^2 / (2 s^2))`, shifted by the smallest
/// exponent so nothing underflows.
pub fn shifted_weights(refs: &Matrix, x: &[f64], sigma: f64) -> Vec<f64> {
    let e: Vec<f64> = refs
        .rows()
        .map(|r| r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * sigma * sigma))
        .collect();
    let m = e.iter().cloned().fold(f64::INFINITY, f64::min);
    e.iter().map(|v| (-(v - m)).exp()).collect()
}

/// `p(y != c | x)` as the outside sum over the total sum.
pub fn naive_complement(refs: &Matrix, labels: &[i64], sigma: f64, x: &[f64], c: i64) -> f64 {
    let w = shifted_weights(refs, x, sigma);
    let total: f64 = w.iter().sum();
    let out: f64 = w.iter().zip(labels).filter(|(_, l)| **l != c).map(|(k, _)| k).sum();
    out / total
}

/// Fourth-order five-point stencil of `f` at `x` with step `h`.
pub fn fd_gradient5<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    let mut at = |j: usize, t: f64| {
        p[j] = x[j] + t;
        let v = f(&p);
        p[j] = x[j];
        v
    };
    (0..x.len())
        .map(|j| (8.0 * (at(j, h) - at(j, -h)) - (at(j, 2.0 * h) - at(j, -2.0 * h))) / (12.0 * h))
        .collect()
}
