//! Datasets: normalization, seeded splits, the bundled Iris measurements and
//! generators for the two-dimensional toy problems.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{sq_dist, Matrix};
use crate::Label;

/// Seeded generator used by every randomized routine in the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-feature affine transform `x -> (x - mean) / std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: f64,
    pub std: f64,
    /// The training column had zero spread; `std` was set to 1.
    #[serde(default, skip_serializing_if = "is_false")]
    pub constant: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl FeatureStats {
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn invert(&self, v: f64) -> f64 {
        v * self.std + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<Label>,
    pub feature_names: Vec<String>,
    pub row_ids: Vec<usize>,
    /// Present when `features` holds normalized values.
    pub norm_stats: Option<Vec<FeatureStats>>,
}

impl Dataset {
    /// Builds a dataset with ids `0..n`. Names default to `x0, x1, ...`.
    pub fn new(features: Matrix, labels: Vec<Label>, feature_names: Option<Vec<String>>) -> Result<Self> {
        check_dim(features.nrows(), labels.len())?;
        let d = features.ncols();
        let feature_names = match feature_names {
            Some(names) => {
                check_dim(d, names.len())?;
                names
            }
            None => (0..d).map(|j| format!("x{j}")).collect(),
        };
        if let Some(pos) = features.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: pos / d.max(1),
                column: feature_names[pos % d.max(1)].clone(),
                reason: "non-finite value".to_string(),
            });
        }
        let row_ids = (0..labels.len()).collect();
        Ok(Dataset {
            features,
            labels,
            feature_names,
            row_ids,
            norm_stats: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<Label> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn class_counts(&self) -> BTreeMap<Label, usize> {
        let mut m = BTreeMap::new();
        for &l in &self.labels {
            *m.entry(l).or_insert(0) += 1;
        }
        m
    }

    /// Rows `idx` in the given order, keeping their ids and stats.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            row_ids: idx.iter().map(|&i| self.row_ids[i]).collect(),
            norm_stats: self.norm_stats.clone(),
        }
    }

    /// Replaces labels through `f`.
    pub fn relabel<F: Fn(Label) -> Label>(&self, f: F) -> Dataset {
        let mut out = self.clone();
        out.labels.iter_mut().for_each(|l| *l = f(*l));
        out
    }

    /// Features in original units.
    pub fn raw_features(&self) -> Matrix {
        let mut m = self.features.clone();
        if let Some(stats) = &self.norm_stats {
            for i in 0..m.nrows() {
                for (v, s) in m.row_mut(i).iter_mut().zip(stats) {
                    *v = s.invert(*v);
                }
            }
        }
        m
    }

    /// Applies `stats` to raw features and records them.
    pub fn with_stats(&self, stats: &[FeatureStats]) -> Result<Dataset> {
        check_dim(self.dim(), stats.len())?;
        let mut out = self.clone();
        for i in 0..out.features.nrows() {
            for (v, s) in out.features.row_mut(i).iter_mut().zip(stats) {
                *v = s.apply(*v);
            }
        }
        // compose with any transform already applied
        let composed = match &self.norm_stats {
            None => stats.to_vec(),
            Some(prev) => prev
                .iter()
                .zip(stats)
                .map(|(p, s)| FeatureStats {
                    mean: p.mean + p.std * s.mean,
                    std: p.std * s.std,
                    constant: p.constant || s.constant,
                })
                .collect(),
        };
        out.norm_stats = Some(composed);
        Ok(out)
    }
}

/// Column means and population standard deviations. A column with zero
/// spread keeps scale 1 and is flagged constant.
pub fn fit_stats(x: &Matrix) -> Result<Vec<FeatureStats>> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::Empty("cannot fit normalization on zero rows"));
    }
    let nf = n as f64;
    Ok((0..x.ncols())
        .map(|j| {
            let col = x.column(j);
            let mean = col.iter().sum::<f64>() / nf;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
            let std = libm::sqrt(var);
            if std > 0.0 {
                FeatureStats {
                    mean,
                    std,
                    constant: false,
                }
            } else {
                FeatureStats {
                    mean,
                    std: 1.0,
                    constant: true,
                }
            }
        })
        .collect())
}

/// Standardizes `train` by its own mean and standard deviation and applies
/// the same transform to each of `others`.
pub fn normalize_fit_apply(train: &Dataset, others: &[&Dataset]) -> Result<(Dataset, Vec<Dataset>)> {
    let stats = fit_stats(&train.features)?;
    for (j, s) in stats.iter().enumerate() {
        if s.constant {
            log::warn!("feature `{}` is constant on the training set", train.feature_names[j]);
        }
    }
    let t = train.with_stats(&stats)?;
    let o = others
        .iter()
        .map(|d| d.with_stats(&stats))
        .collect::<Result<Vec<_>>>()?;
    Ok((t, o))
}

/// Options for [`split_stratified`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SplitOptions<'a> {
    /// Train class counts differ by at most one.
    pub balance_classes: bool,
    /// Keep the share of flagged rows equal in train and test (per class
    /// when balancing).
    pub preserve_group: Option<&'a [bool]>,
}

/// Seeded train/test split. Without options the train set is a uniformly
/// random subset of size `n_train`. Both parts keep the original row order.
pub fn split_stratified(
    data: &Dataset,
    n_train: usize,
    seed: u64,
    opts: SplitOptions<'_>,
) -> Result<(Dataset, Dataset)> {
    let n = data.len();
    if n_train == 0 || n_train >= n {
        return Err(Error::InfeasibleSplit(format!(
            "n_train must lie in 1..{n}, got {n_train}"
        )));
    }
    if let Some(mask) = opts.preserve_group {
        check_dim(n, mask.len())?;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng(seed));

    let in_group = |i: usize| opts.preserve_group.is_some_and(|m| m[i]);
    // strata: (class or a single bucket, group flag), each with a quota
    let buckets: Vec<Option<Label>> = if opts.balance_classes {
        data.classes().into_iter().map(Some).collect()
    } else {
        vec![None]
    };
    let bucket_quota: Vec<usize> = {
        let b = buckets.len();
        (0..b).map(|k| n_train / b + usize::from(k < n_train % b)).collect()
    };
    let mut take = vec![false; n];
    for (bucket, &quota) in buckets.iter().zip(&bucket_quota) {
        let members: Vec<usize> = perm
            .iter()
            .copied()
            .filter(|&i| bucket.is_none_or(|c| data.labels[i] == c))
            .collect();
        if members.len() < quota {
            return Err(Error::InfeasibleSplit(format!(
                "class {:?} has {} rows but needs {quota} in train",
                bucket,
                members.len()
            )));
        }
        let (grp, rest): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| in_group(i));
        let q_grp = if opts.preserve_group.is_some() {
            let share = quota as f64 * grp.len() as f64 / members.len() as f64;
            let lo = quota.saturating_sub(rest.len());
            (libm::round(share) as usize).clamp(lo, grp.len().min(quota))
        } else {
            0
        };
        let q_rest = quota - q_grp;
        if opts.preserve_group.is_some() {
            grp.iter().take(q_grp).for_each(|&i| take[i] = true);
            rest.iter().take(q_rest).for_each(|&i| take[i] = true);
        } else {
            members.iter().take(quota).for_each(|&i| take[i] = true);
        }
    }
    let train: Vec<usize> = (0..n).filter(|&i| take[i]).collect();
    let test: Vec<usize> = (0..n).filter(|&i| !take[i]).collect();
    Ok((data.subset(&train), data.subset(&test)))
}

const IRIS_CSV: &str = include_str!("../data/iris.csv");

/// Species ids used by [`load_iris`].
pub const SETOSA: Label = 0;
pub const VERSICOLOR: Label = 1;
pub const VIRGINICA: Label = 2;

/// Fisher's Iris measurements (150 x 4, centimetres) with species labels
/// setosa = 0, versicolor = 1, virginica = 2.
pub fn load_iris() -> Dataset {
    let mut lines = IRIS_CSV.lines();
    let header: Vec<String> = lines
        .next()
        .expect("bundled file has a header")
        .split(',')
        .map(str::to_string)
        .collect();
    let names = header[..4].to_vec();
    let mut values = Vec::with_capacity(600);
    let mut labels = Vec::with_capacity(150);
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        for c in &cells[..4] {
            values.push(c.trim().parse::<f64>().expect("bundled file is numeric"));
        }
        labels.push(match cells[4].trim() {
            "setosa" => SETOSA,
            "versicolor" => VERSICOLOR,
            "virginica" => VIRGINICA,
            other => panic!("unexpected species `{other}` in bundled data"),
        });
    }
    let x = Matrix::from_row_major(labels.len(), 4, values).expect("4 columns");
    Dataset::new(x, labels, Some(names)).expect("bundled data is finite")
}

/// Binary relabeling: versicolor becomes class 0, setosa and virginica 1.
pub fn versicolor_vs_rest(species: &Dataset) -> Dataset {
    species.relabel(|l| if l == VERSICOLOR { 0 } else { 1 })
}

/// Triangle-vs-surround problem on the unit square.
///
/// The positive class occupies the right triangle with vertices (0.25, 0.25),
/// (0.75, 0.25) and (0.25, 0.75). Points are drawn uniformly from the square
/// and kept if they lie at least [`TRIANGLE_MARGIN`] inside the triangle
/// (label +1) or outside it (label -1), until each class has `n_per_class`.
pub fn gen_triangle(n_per_class: usize, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(Error::param("n_per_class", "must be positive"));
    }
    let mut r = rng(seed);
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    while pos.len() < n_per_class || neg.len() < n_per_class {
        let p = [r.random::<f64>(), r.random::<f64>()];
        let s = triangle_depth(p);
        if s >= TRIANGLE_MARGIN && pos.len() < n_per_class {
            pos.push(p);
        } else if s <= -TRIANGLE_MARGIN && neg.len() < n_per_class {
            neg.push(p);
        }
    }
    let mut rows = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    // interleave so prefixes stay balanced
    for (a, b) in pos.into_iter().zip(neg) {
        rows.push(a);
        labels.push(1);
        rows.push(b);
        labels.push(-1);
    }
    Dataset::new(Matrix::from_rows(&rows)?, labels, None)
}

/// Width of the empty band around the triangle's edges.
pub const TRIANGLE_MARGIN: f64 = 0.03;

/// Minimum distance to the three edge lines, signed positive inside the
/// triangle. Outside it is a lower bound on the true distance.
pub fn triangle_depth(p: [f64; 2]) -> f64 {
    let a = p[0] - 0.25;
    let b = p[1] - 0.25;
    let c = (1.0 - p[0] - p[1]) / core::f64::consts::SQRT_2;
    a.min(b).min(c)
}

pub fn in_triangle(p: [f64; 2]) -> bool {
    triangle_depth(p) >= 0.0
}

/// Cluster centers on the first axis for [`gen_three_clusters`].
pub const CLUSTER_CENTERS: [f64; 3] = [-2.0, 0.0, 2.0];
/// Per-coordinate standard deviation: a quarter of the center spacing.
pub const CLUSTER_STD: f64 = 0.5;

/// Three isotropic Gaussian clusters on the first axis; the middle one is
/// labeled +1, the outer two -1. Only the first coordinate separates the
/// classes.
///
/// Samples are generated in mirrored groups so the point set is symmetric
/// under `x1 -> -x1` and `x2 -> -x2`; the middle cluster center is then an
/// exact stationary point of any symmetric estimate. The outer clusters get
/// `n / 3` points each and the middle one the rest. Also returns the cluster
/// id (0, 1, 2 from left to right) of each point.
pub fn gen_three_clusters(n: usize, seed: u64) -> Result<(Dataset, Vec<usize>)> {
    if n < 3 {
        return Err(Error::param("n", "need at least three points"));
    }
    let normal = Normal::new(0.0, CLUSTER_STD).map_err(|e| Error::param("std", e.to_string()))?;
    let mut r = rng(seed);
    let outer = n / 3;
    let middle = n - 2 * outer;
    let mut rows: Vec<[f64; 2]> = Vec::with_capacity(n);
    let mut cluster = Vec::with_capacity(n);

    // middle cluster: (+-a, +-b) quartets, then remainders on the axes
    for _ in 0..middle / 4 {
        let (a, b) = (normal.sample(&mut r), normal.sample(&mut r));
        rows.extend([[a, b], [-a, b], [a, -b], [-a, -b]]);
    }
    if middle % 4 >= 2 {
        let a = normal.sample(&mut r);
        rows.extend([[a, 0.0], [-a, 0.0]]);
    }
    if middle % 2 == 1 {
        rows.push([0.0, 0.0]);
    }
    cluster.resize(rows.len(), 1);

    // outer clusters: left sample (c + a, +-b), right one is its mirror
    let mut left = Vec::with_capacity(outer);
    for _ in 0..outer / 2 {
        let (a, b) = (normal.sample(&mut r), normal.sample(&mut r));
        left.extend([[CLUSTER_CENTERS[0] + a, b], [CLUSTER_CENTERS[0] + a, -b]]);
    }
    if outer % 2 == 1 {
        left.push([CLUSTER_CENTERS[0] + normal.sample(&mut r), 0.0]);
    }
    for p in &left {
        rows.push(*p);
        cluster.push(0);
    }
    for p in &left {
        rows.push([-p[0], p[1]]);
        cluster.push(2);
    }
    let labels = cluster.iter().map(|&c| if c == 1 { 1 } else { -1 }).collect();
    Ok((Dataset::new(Matrix::from_rows(&rows)?, labels, None)?, cluster))
}

/// Center and radius of the negative disk in [`gen_nonlinear`].
pub const DISK_CENTER: [f64; 2] = [0.3, 0.5];
pub const DISK_RADIUS: f64 = 0.18;
/// First coordinate of the ridge of isolated positives.
pub const RIDGE_X: f64 = 0.8;
/// Boundary between the positive left part and the negative right part.
pub const REGION_SPLIT: f64 = 0.6;
/// Number of ridge points.
pub const RIDGE_POINTS: usize = 9;

/// Locally non-linear problem on the unit square.
///
/// The left part `x1 < 0.6` is positive except for a negative disk. The right
/// part is negative except for a vertical ridge of isolated positive points at
/// `x1 = 0.8`, `x2 = 0.1, 0.2, ..., 0.9`. Region points keep a margin of 0.03
/// from the disk edge and the region split. Returns `n` points in total,
/// `n >= 40`, the first nine being the ridge.
pub fn gen_nonlinear(n: usize, seed: u64) -> Result<Dataset> {
    if n < 40 {
        return Err(Error::param("n", "need at least 40 points"));
    }
    let margin = 0.03;
    let mut r = rng(seed);
    let mut rows: Vec<[f64; 2]> = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for k in 1..=RIDGE_POINTS {
        rows.push([RIDGE_X, k as f64 / 10.0]);
        labels.push(1);
    }
    while rows.len() < n {
        let p = [r.random::<f64>(), r.random::<f64>()];
        let label = match nonlinear_region(p) {
            Some((l, depth)) if depth >= margin => l,
            _ => continue,
        };
        // keep region points clear of the ridge line
        if (p[0] - RIDGE_X).abs() < margin {
            continue;
        }
        rows.push(p);
        labels.push(label);
    }
    Dataset::new(Matrix::from_rows(&rows)?, labels, None)
}

/// Region label of a point in [`gen_nonlinear`] (ignoring the ridge) and its
/// distance to the nearest region boundary.
pub fn nonlinear_region(p: [f64; 2]) -> Option<(Label, f64)> {
    if !(0.0..=1.0).contains(&p[0]) || !(0.0..=1.0).contains(&p[1]) {
        return None;
    }
    if p[0] < REGION_SPLIT {
        let r = libm::sqrt(sq_dist(&p, &DISK_CENTER));
        let to_split = REGION_SPLIT - p[0];
        if r < DISK_RADIUS {
            Some((-1, (DISK_RADIUS - r).min(to_split)))
        } else {
            Some((1, (r - DISK_RADIUS).min(to_split)))
        }
    } else {
        Some((-1, p[0] - REGION_SPLIT))
    }
}

/// Flips the labels of `count` randomly chosen binary-labeled points whose
/// `neighbours` nearest neighbours all share their label, so each flipped
/// point sits inside the other class's region. Returns the corrupted data and
/// the flipped indices in ascending order.
pub fn inject_outliers(
    data: &Dataset,
    count: usize,
    neighbours: usize,
    seed: u64,
) -> Result<(Dataset, Vec<usize>)> {
    let classes = data.classes();
    if classes.len() != 2 {
        return Err(Error::InvalidLabels(format!(
            "outlier injection needs two classes, found {}",
            classes.len()
        )));
    }
    let n = data.len();
    if neighbours == 0 || neighbours >= n {
        return Err(Error::param("neighbours", format!("must lie in 1..{n}")));
    }
    let x = &data.features;
    let interior: Vec<usize> = (0..n)
        .filter(|&i| {
            let mut d: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(x.row(i), x.row(j)), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.iter().take(neighbours).all(|&(_, j)| data.labels[j] == data.labels[i])
        })
        .collect();
    if interior.len() < count {
        return Err(Error::param(
            "count",
            format!("only {} interior points available, asked for {count}", interior.len()),
        ));
    }
    let mut chosen = interior;
    chosen.shuffle(&mut rng(seed));
    chosen.truncate(count);
    chosen.sort_unstable();
    let mut out = data.clone();
    for &i in &chosen {
        out.labels[i] = if out.labels[i] == classes[0] { classes[1] } else { classes[0] };
    }
    Ok((out, chosen))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iris_shape_and_species() {
        let d = load_iris();
        assert_eq!((d.len(), d.dim()), (150, 4));
        let c = d.class_counts();
        assert_eq!(c.values().copied().collect::<Vec<_>>(), vec![50, 50, 50]);
        let b = versicolor_vs_rest(&d);
        assert_eq!(b.class_counts()[&0], 50);
        assert_eq!(d.feature_names[2], "petal_length");
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = load_iris();
        let (tr, te) = split_stratified(&d, 100, 7, SplitOptions::default()).unwrap();
        assert_eq!((tr.len(), te.len()), (100, 50));
        let (tr2, _) = split_stratified(&d, 100, 7, SplitOptions::default()).unwrap();
        assert_eq!(tr.row_ids, tr2.row_ids);
        let mut all: Vec<usize> = tr.row_ids.iter().chain(&te.row_ids).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..150).collect::<Vec<_>>());
    }

    #[test]
    fn balanced_split_counts() {
        let d = versicolor_vs_rest(&load_iris());
        let opts = SplitOptions {
            balance_classes: true,
            preserve_group: None,
        };
        let (tr, _) = split_stratified(&d, 61, 3, opts).unwrap();
        let c = tr.class_counts();
        assert!(c[&0].abs_diff(c[&1]) <= 1);
        // 120 rows needs 60 versicolor; there are only 50
        assert!(matches!(
            split_stratified(&d, 120, 3, opts),
            Err(Error::InfeasibleSplit(_))
        ));
        assert!(split_stratified(&d, 150, 3, SplitOptions::default()).is_err());
    }

    #[test]
    fn group_share_preserved() {
        let d = load_iris();
        let mask: Vec<bool> = (0..150).map(|i| i % 5 == 0).collect();
        let opts = SplitOptions {
            balance_classes: false,
            preserve_group: Some(&mask),
        };
        let (tr, te) = split_stratified(&d, 100, 11, opts).unwrap();
        let g_tr = tr.row_ids.iter().filter(|&&i| mask[i]).count();
        let g_te = te.row_ids.iter().filter(|&&i| mask[i]).count();
        assert_eq!(g_tr + g_te, 30);
        assert!((g_tr as f64 - 20.0).abs() <= 1.0);
    }

    #[test]
    fn normalization_stats() {
        let d = load_iris();
        let (n, others) = normalize_fit_apply(&d, &[&d]).unwrap();
        for j in 0..4 {
            let col = n.features.column(j);
            let m = col.iter().sum::<f64>() / 150.0;
            let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 150.0;
            assert!(m.abs() < 1e-10);
            assert!((v.sqrt() - 1.0).abs() < 1e-10);
        }
        assert_eq!(others[0].features, n.features);
        let raw = n.raw_features();
        for (a, b) in raw.as_slice().iter().zip(d.features.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
        // idempotent on already normalized data
        let (nn, _) = normalize_fit_apply(&n, &[]).unwrap();
        for (a, b) in nn.features.as_slice().iter().zip(n.features.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_column_flagged() {
        let x = Matrix::from_rows(&[[1.0, 3.0], [2.0, 3.0], [3.0, 3.0]]).unwrap();
        let d = Dataset::new(x, vec![0, 1, 0], None).unwrap();
        let (n, _) = normalize_fit_apply(&d, &[]).unwrap();
        let s = n.norm_stats.as_ref().unwrap();
        assert!(s[1].constant && s[1].std == 1.0 && !s[0].constant);
        assert_eq!(n.features.column(1), vec![0.0; 3]);
    }

    #[test]
    fn non_finite_rejected() {
        let x = Matrix::from_rows(&[[1.0, f64::NAN]]).unwrap();
        assert!(matches!(
            Dataset::new(x, vec![0], None),
            Err(Error::Parse { row: 0, .. })
        ));
    }

    #[test]
    fn triangle_generator() {
        let d = gen_triangle(60, 1).unwrap();
        assert_eq!(d.len(), 120);
        for (r, &l) in d.features.rows().zip(&d.labels) {
            let p = [r[0], r[1]];
            assert_eq!(in_triangle(p), l == 1);
            assert!(triangle_depth(p).abs() >= TRIANGLE_MARGIN);
        }
        assert_eq!(gen_triangle(60, 1).unwrap(), d);
    }

    #[test]
    fn three_clusters_symmetric() {
        for n in [3, 10, 31, 300] {
            let (d, cl) = gen_three_clusters(n, 5).unwrap();
            assert_eq!(d.len(), n);
            let mut pts: Vec<(u64, u64)> = d
                .features
                .rows()
                .map(|r| (r[0].to_bits(), r[1].to_bits()))
                .collect();
            pts.sort_unstable();
            let mut mirrored: Vec<(u64, u64)> = d
                .features
                .rows()
                .map(|r| ((-r[0]).to_bits(), r[1].to_bits()))
                .collect();
            mirrored.sort_unstable();
            // +0.0 and -0.0 differ in bits; compare values instead
            let as_f = |v: &[(u64, u64)]| -> Vec<(f64, f64)> {
                let mut w: Vec<(f64, f64)> = v.iter().map(|&(a, b)| (f64::from_bits(a) + 0.0, f64::from_bits(b) + 0.0)).collect();
                w.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
                w
            };
            assert_eq!(as_f(&pts), as_f(&mirrored));
            for (&c, &l) in cl.iter().zip(&d.labels) {
                assert_eq!(l, if c == 1 { 1 } else { -1 });
            }
        }
    }

    #[test]
    fn nonlinear_regions() {
        let d = gen_nonlinear(300, 2).unwrap();
        assert_eq!(d.len(), 300);
        for (i, (r, &l)) in d.features.rows().zip(&d.labels).enumerate() {
            if i < RIDGE_POINTS {
                assert_eq!(l, 1);
                assert_eq!(r[0], RIDGE_X);
            } else {
                assert_eq!(nonlinear_region([r[0], r[1]]).unwrap().0, l);
            }
        }
    }

    #[test]
    fn outliers_flip_interior_points() {
        let d = gen_triangle(80, 3).unwrap();
        let (o, idx) = inject_outliers(&d, 4, 8, 9).unwrap();
        assert_eq!(idx.len(), 4);
        for i in 0..d.len() {
            assert_eq!(o.labels[i] != d.labels[i], idx.contains(&i));
        }
        assert!(inject_outliers(&d, 1000, 8, 9).is_err());
    }
}
