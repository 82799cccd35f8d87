//! Experiment pipelines shared by the command-line tool and the tests.

use std::str::FromStr;

use gradxplain_core::analysis::{self, FeatureRanking, GroupComparison, Histogram, HistogramSpec};
use gradxplain_core::classifiers::{KnnClassifier, LabelOracle, LooReport, TableOracle};
use gradxplain_core::data::{
    self, fit_stats, load_iris, normalize_fit_apply, split_stratified, versicolor_vs_rest, Dataset,
    FeatureStats, SplitOptions,
};
use gradxplain_core::gpc::{EpOptions, GpcModel};
use gradxplain_core::linalg::Matrix;
use gradxplain_core::mimic::{
    default_sigma_grid, median_pairwise_distance, select_width, smooth_gradients, ParzenMimic, Probes,
    WidthSelection,
};
use gradxplain_core::{ExplanationSource, ExplanationVector, KernelKind, KernelSpec, Label};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::ExplanationRow;
use crate::metrics::{error_rate, roc_auc};

/// Parses `rbf:w=20`, `rq:alpha=1,length=0.15`, `linear`, or a JSON object
/// such as `{"kind":"rbf","w":20}`.
pub fn parse_kernel(s: &str) -> Result<KernelSpec> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| Error::Config(format!("kernel `{s}`: {e}")));
    }
    let (kind, params) = s.split_once(':').unwrap_or((s, ""));
    let kind = KernelKind::from_str(kind)?;
    let (mut w, mut alpha, mut length) = (1.0, 1.0, 1.0);
    for kv in params.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("kernel parameter `{kv}` is not key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("kernel parameter `{kv}` is not a number")))?;
        match k.trim() {
            "w" => w = v,
            "alpha" => alpha = v,
            "length" => length = v,
            other => return Err(Error::Config(format!("unknown kernel parameter `{other}`"))),
        }
    }
    Ok(KernelSpec::new(kind, w, alpha, length)?)
}

/// Short text form accepted by [`parse_kernel`].
pub fn kernel_label(k: &KernelSpec) -> String {
    match k.kind() {
        KernelKind::Rbf => format!("rbf:w={}", k.w()),
        KernelKind::Linear => "linear".into(),
        KernelKind::RationalQuadratic => format!("rq:alpha={},length={}", k.alpha(), k.length()),
    }
}

/// RBF kernels with length scales `{0.05, 0.1, 0.2, 0.4, 0.8}` times the
/// median pairwise distance, `w = 1 / (2 l^2)`.
pub fn default_kernel_grid(x: &Matrix) -> Vec<KernelSpec> {
    let m = median_pairwise_distance(x);
    let m = if m > 0.0 { m } else { 1.0 };
    [0.05, 0.1, 0.2, 0.4, 0.8]
        .iter()
        .map(|f| {
            let l = f * m;
            KernelSpec::rbf(1.0 / (2.0 * l * l)).expect("positive width")
        })
        .collect()
}

/// Candidate widths for the mimic.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaGrid {
    /// `n` log-spaced values over `[1e-2, 1e2]` times the median pairwise distance.
    Auto(usize),
    Values(Vec<f64>),
}

impl Default for SigmaGrid {
    fn default() -> Self {
        SigmaGrid::Auto(25)
    }
}

impl FromStr for SigmaGrid {
    type Err = Error;

    /// `auto`, `auto:N`, or a comma-separated list of widths.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "auto" {
            return Ok(SigmaGrid::Auto(25));
        }
        if let Some(n) = s.strip_prefix("auto:") {
            let n = n
                .parse()
                .map_err(|_| Error::Config(format!("bad sigma grid size `{n}`")))?;
            return Ok(SigmaGrid::Auto(n));
        }
        s.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad sigma value `{v}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(SigmaGrid::Values)
    }
}

impl SigmaGrid {
    pub fn candidates(&self, x: &Matrix) -> Vec<f64> {
        match self {
            SigmaGrid::Auto(n) => default_sigma_grid(x, *n),
            SigmaGrid::Values(v) => v.clone(),
        }
    }
}

/// Parses `1-15` or `1,3,5`.
pub fn parse_k_grid(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("bad k grid `{s}`"));
    if let Some((a, b)) = s.split_once('-') {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a == 0 || b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect()
}

/// Root mean square of the per-feature standard deviations.
pub fn data_scale(x: &Matrix) -> Result<f64> {
    let stats: Vec<FeatureStats> = fit_stats(x)?;
    let ms = stats
        .iter()
        .map(|s| if s.constant { 0.0 } else { s.std * s.std })
        .sum::<f64>()
        / stats.len().max(1) as f64;
    Ok(ms.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelScore {
    pub kernel: String,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub seed: u64,
    pub kernel: KernelSpec,
    pub grid: Vec<KernelScore>,
    pub train_error: f64,
    pub test_error: Option<f64>,
    pub test_auc: Option<f64>,
    pub train_auc: Option<f64>,
    pub ep_sweeps: usize,
    pub converged: bool,
}

/// Fits a classifier, choosing the kernel by validation accuracy when the
/// grid has more than one entry.
///
/// For grid search the training data is split 75/25 by `seed`; the winner
/// (ties go to the earlier grid entry) is refitted on all of `train`.
pub fn fit_gpc(
    train: &Dataset,
    test: Option<&Dataset>,
    grid: &[KernelSpec],
    seed: u64,
) -> Result<(GpcModel, FitReport)> {
    if grid.is_empty() {
        return Err(Error::Config("empty kernel grid".into()));
    }
    let opts = EpOptions::default();
    let mut scores = Vec::new();
    let kernel = if grid.len() == 1 {
        grid[0]
    } else {
        let n_fit = (train.len() * 3 / 4).max(2);
        let (fit, val) = split_stratified(train, n_fit, seed, SplitOptions::default())?;
        let accs: Vec<f64> = grid
            .par_iter()
            .map(|k| -> Result<f64> {
                let m = GpcModel::fit(&fit.features, &fit.labels, *k, opts)?;
                let pred: Vec<Label> = val
                    .features
                    .rows()
                    .map(|r| m.predict_label(r))
                    .collect::<gradxplain_core::Result<_>>()?;
                Ok(1.0 - error_rate(&pred, &val.labels))
            })
            .collect::<Result<_>>()?;
        for (k, a) in grid.iter().zip(&accs) {
            scores.push(KernelScore {
                kernel: kernel_label(k),
                validation_accuracy: *a,
            });
        }
        let best = (0..grid.len())
            .fold(0, |b, i| if accs[i] > accs[b] { i } else { b });
        grid[best]
    };
    let model = GpcModel::fit(&train.features, &train.labels, kernel, opts)?;
    let eval = |d: &Dataset| -> Result<(f64, Option<f64>)> {
        let p: Vec<f64> = d
            .features
            .rows()
            .map(|r| model.predict_proba(r))
            .collect::<gradxplain_core::Result<_>>()?;
        let pred: Vec<Label> = p.iter().map(|&v| if v >= 0.5 { 1 } else { -1 }).collect();
        Ok((error_rate(&pred, &d.labels), roc_auc(&p, &d.labels, 1)))
    };
    let (train_error, train_auc) = eval(train)?;
    let (test_error, test_auc) = match test {
        Some(t) => {
            let (e, a) = eval(t)?;
            (Some(e), a)
        }
        None => (None, None),
    };
    let report = FitReport {
        seed,
        kernel,
        grid: scores,
        train_error,
        test_error,
        test_auc,
        train_auc,
        ep_sweeps: model.ep_iterations(),
        converged: model.converged(),
    };
    Ok((model, report))
}

/// Analytic explanations at every row of `queries`, in row order.
pub fn explain_gpc(model: &GpcModel, queries: &Matrix) -> Result<Vec<ExplanationVector>> {
    let rows: Vec<&[f64]> = queries.rows().collect();
    Ok(rows
        .par_iter()
        .map(|r| model.explain(r))
        .collect::<gradxplain_core::Result<_>>()?)
}

/// The classifier whose labels the mimic reproduces.
#[derive(Debug, Clone)]
pub enum Oracle {
    Table(TableOracle),
    Knn(KnnClassifier),
}

impl LabelOracle for Oracle {
    fn predict(&self, x: &[f64]) -> gradxplain_core::Result<Label> {
        match self {
            Oracle::Table(t) => t.predict(x),
            Oracle::Knn(k) => k.predict(x),
        }
    }
}

impl Oracle {
    /// Labels of the rows of `data`; table lookups go by row position.
    pub fn labels_for(&self, data: &Dataset) -> Result<Vec<Label>> {
        match self {
            Oracle::Table(t) => Ok((0..data.len()).map(|i| t.predict_id(i)).collect::<gradxplain_core::Result<_>>()?),
            Oracle::Knn(k) => Ok(k.predict_all(&data.features)?),
        }
    }
}

/// How to obtain the wrapped classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleSpec {
    /// Prediction table `id,label` keyed by the data's row ids.
    Table(std::path::PathBuf),
    /// k-NN on the data's own labels; `None` picks k by leave-one-out.
    Knn(Option<usize>),
}

impl FromStr for OracleSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "knn" {
            return Ok(OracleSpec::Knn(None));
        }
        if let Some(k) = s.strip_prefix("knn:") {
            let k = k.parse().map_err(|_| Error::Config(format!("bad k in `{s}`")))?;
            return Ok(OracleSpec::Knn(Some(k)));
        }
        Ok(OracleSpec::Table(s.into()))
    }
}

/// Default `k` candidates: `1..=15`, capped by the data size.
pub fn default_k_grid(n: usize) -> Vec<usize> {
    (1..=15.min(n.saturating_sub(1)).max(1)).collect()
}

pub fn build_oracle(spec: &OracleSpec, data: &Dataset, k_grid: &[usize]) -> Result<(Oracle, Option<LooReport>)> {
    match spec {
        OracleSpec::Table(path) => {
            let entries = crate::io::read_predictions(path)?;
            let mut classes: Vec<Label> = entries.iter().map(|e| e.1).collect();
            classes.sort_unstable();
            classes.dedup();
            let t = TableOracle::new(data.features.clone(), &entries, &classes)?;
            Ok((Oracle::Table(t), None))
        }
        OracleSpec::Knn(Some(k)) => Ok((
            Oracle::Knn(KnnClassifier::new(data.features.clone(), data.labels.clone(), *k)?),
            None,
        )),
        OracleSpec::Knn(None) => {
            let (c, rep) = KnnClassifier::fit_loo(data.features.clone(), data.labels.clone(), k_grid)?;
            Ok((Oracle::Knn(c), Some(rep)))
        }
    }
}

/// Mimic on `refs` labelled by the wrapped classifier, width chosen by
/// leave-one-out disagreement.
pub fn fit_mimic(refs: &Matrix, g_labels: &[Label], grid: &SigmaGrid) -> Result<(ParzenMimic, WidthSelection)> {
    let candidates = grid.candidates(refs);
    let sel = select_width(refs, g_labels, Probes::LeaveOneOut, &candidates)?;
    let mimic = ParzenMimic::new(refs.clone(), g_labels.to_vec(), sel.sigma)?;
    Ok((mimic, sel))
}

/// Explanations for gradients at or below this norm are replaced by the
/// Hessian direction when the fallback is enabled.
pub const DEFAULT_FALLBACK_THRESHOLD: f64 = 1e-6;

/// Estimated explanations at `queries` for the labels `g_labels` assigned by
/// the wrapped classifier, in row order.
pub fn explain_mimic(
    mimic: &ParzenMimic,
    queries: &Matrix,
    g_labels: &[Label],
    hessian_fallback: Option<f64>,
) -> Result<Vec<ExplanationVector>> {
    if queries.nrows() != g_labels.len() {
        return Err(gradxplain_core::Error::DimensionMismatch {
            expected: queries.nrows(),
            found: g_labels.len(),
        }
        .into());
    }
    let rows: Vec<(&[f64], Label)> = queries.rows().zip(g_labels.iter().copied()).collect();
    rows.par_iter()
        .map(|(z, g)| -> Result<ExplanationVector> {
            let mut e = mimic.explain(z, *g)?;
            if let Some(threshold) = hessian_fallback {
                if !e.far_field && e.norm() <= threshold {
                    match mimic.hessian_direction(z, *g) {
                        Ok(h) => {
                            e.gradient = h.direction;
                            e.source = ExplanationSource::HessianFallback;
                        }
                        Err(gradxplain_core::Error::NoInformativeDirection) => {
                            log::warn!("no informative direction at {z:?}; keeping the zero gradient");
                        }
                        Err(err) => return Err(err.into()),
                    }
                }
            }
            Ok(e)
        })
        .collect()
}

/// Replaces each gradient by the mean of the gradients whose queries fall in
/// the cube of half-width `halfwidth` around it.
pub fn smooth(explanations: &[ExplanationVector], halfwidth: f64) -> Result<Vec<ExplanationVector>> {
    let q: Vec<Vec<f64>> = explanations.iter().map(|e| e.query.clone()).collect();
    let g: Vec<Vec<f64>> = explanations.iter().map(|e| e.gradient.clone()).collect();
    let s = smooth_gradients(&q, &g, halfwidth)?;
    Ok(explanations
        .iter()
        .zip(s)
        .map(|(e, g)| ExplanationVector {
            gradient: g,
            ..e.clone()
        })
        .collect())
}

/// Regular grid over a rectangle of the first two features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Bounding box of the data widened by 10% on each side, 25 x 25 nodes.
    pub fn around(x: &Matrix) -> Result<Self> {
        if x.ncols() != 2 {
            return Err(gradxplain_core::Error::DimensionMismatch {
                expected: 2,
                found: x.ncols(),
            }
            .into());
        }
        if x.nrows() == 0 {
            return Err(gradxplain_core::Error::Empty("no data to span a grid").into());
        }
        let range = |c: Vec<f64>| {
            let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let pad = 0.1 * (hi - lo).max(1e-12);
            (lo - pad, hi + pad)
        };
        let (x_min, x_max) = range(x.column(0));
        let (y_min, y_max) = range(x.column(1));
        Ok(GridSpec {
            x_min,
            x_max,
            y_min,
            y_max,
            nx: 25,
            ny: 25,
        })
    }

    /// `x_min,x_max,y_min,y_max,nx,ny`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::Config(format!("grid `{s}` must be x_min,x_max,y_min,y_max,nx,ny"));
        if parts.len() != 6 {
            return Err(bad());
        }
        let f = |i: usize| parts[i].parse::<f64>().map_err(|_| bad());
        let u = |i: usize| parts[i].parse::<usize>().map_err(|_| bad());
        let g = GridSpec {
            x_min: f(0)?,
            x_max: f(1)?,
            y_min: f(2)?,
            y_max: f(3)?,
            nx: u(4)?,
            ny: u(5)?,
        };
        if g.nx < 2 || g.ny < 2 || !(g.x_min < g.x_max) || !(g.y_min < g.y_max) {
            return Err(bad());
        }
        Ok(g)
    }

    /// Nodes in row-major order: `iy` outer, `ix` inner.
    pub fn nodes(&self) -> Vec<(usize, usize, [f64; 2])> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for iy in 0..self.ny {
            let y = self.y_min + (self.y_max - self.y_min) * iy as f64 / (self.ny - 1) as f64;
            for ix in 0..self.nx {
                let x = self.x_min + (self.x_max - self.x_min) * ix as f64 / (self.nx - 1) as f64;
                out.push((ix, iy, [x, y]));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldNode {
    pub ix: usize,
    pub iy: usize,
    pub explanation: ExplanationVector,
}

/// Evaluates `explain` at every node of `grid`.
pub fn vector_field<F>(grid: &GridSpec, explain: F) -> Result<Vec<FieldNode>>
where
    F: Fn(&[f64]) -> Result<ExplanationVector> + Sync,
{
    grid.nodes()
        .par_iter()
        .map(|(ix, iy, p)| {
            Ok(FieldNode {
                ix: *ix,
                iy: *iy,
                explanation: explain(p)?,
            })
        })
        .collect()
}

/// One point of a morphing trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorphStep {
    pub id: usize,
    pub step: usize,
    pub point: Vec<f64>,
    pub probability: f64,
    pub label: Label,
    pub flipped: bool,
}

/// What a trajectory needs from a model: its explanation at the start and
/// the probability and label anywhere.
pub trait Morphable: Sync {
    fn start(&self, x: &[f64]) -> Result<ExplanationVector>;
    fn probability(&self, x: &[f64]) -> Result<f64>;
    fn label(&self, x: &[f64]) -> Result<Label>;
    /// Sign applied to the explanation so that the walk leaves the class
    /// predicted at the start.
    fn away_from(&self, _label: Label) -> f64 {
        1.0
    }
}

impl Morphable for GpcModel {
    fn start(&self, x: &[f64]) -> Result<ExplanationVector> {
        Ok(self.explain(x)?)
    }
    fn probability(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_proba(x)?)
    }
    fn label(&self, x: &[f64]) -> Result<Label> {
        Ok(self.predict_label(x)?)
    }
    // the explanation is the gradient of p(y = +1)
    fn away_from(&self, label: Label) -> f64 {
        if label == 1 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Mimic morphing for a fixed wrapped-classifier label; the probability is
/// that of leaving that label's class.
pub struct MimicMorph<'a> {
    pub mimic: &'a ParzenMimic,
    pub g_label: Label,
}

impl Morphable for MimicMorph<'_> {
    fn start(&self, x: &[f64]) -> Result<ExplanationVector> {
        Ok(self.mimic.explain(x, self.g_label)?)
    }
    fn probability(&self, x: &[f64]) -> Result<f64> {
        Ok(self.mimic.posterior_not(x, self.g_label)?.value)
    }
    fn label(&self, x: &[f64]) -> Result<Label> {
        Ok(self.mimic.predict(x)?.value)
    }
}

/// Walks from `x0` in `steps` equal steps of length `step_size` along the
/// unit explanation vector at `x0`, without recomputing the direction.
/// For the GPC the direction is reversed at points predicted `+1`.
/// Stops after the first step whose label differs from the starting label.
/// A zero explanation vector yields only the starting point.
pub fn morph<M: Morphable + ?Sized>(
    model: &M,
    id: usize,
    x0: &[f64],
    steps: usize,
    step_size: f64,
) -> Result<Vec<MorphStep>> {
    let e = model.start(x0)?;
    let label0 = model.label(x0)?;
    let mut out = vec![MorphStep {
        id,
        step: 0,
        point: x0.to_vec(),
        probability: model.probability(x0)?,
        label: label0,
        flipped: false,
    }];
    let n = e.norm();
    if !(n > 0.0) {
        return Ok(out);
    }
    let sign = model.away_from(label0);
    let dir: Vec<f64> = e.gradient.iter().map(|g| sign * g / n).collect();
    for s in 1..=steps {
        let t = s as f64 * step_size;
        let p: Vec<f64> = x0.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
        let label = model.label(&p)?;
        let flipped = label != label0;
        out.push(MorphStep {
            id,
            step: s,
            probability: model.probability(&p)?,
            point: p,
            label,
            flipped,
        });
        if flipped {
            break;
        }
    }
    Ok(out)
}

/// [`morph`] for several rows, trajectories concatenated in row order.
pub fn morph_all<M: Morphable + ?Sized>(
    model: &M,
    ids: &[usize],
    queries: &Matrix,
    steps: usize,
    step_size: f64,
) -> Result<Vec<Vec<MorphStep>>> {
    let rows: Vec<(usize, &[f64])> = ids.iter().copied().zip(queries.rows()).collect();
    rows.par_iter()
        .map(|(id, x)| morph(model, *id, x, steps, step_size))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankOutput {
    pub ranking: FeatureRanking,
    pub histograms: Vec<Histogram>,
}

/// Mean-gradient ranking plus one histogram per feature (`bins` bins over
/// mean +- 4 stddev of that feature's gradient components).
pub fn rank(explanations: &[ExplanationVector], names: &[String], bins: usize) -> Result<RankOutput> {
    let ranking = analysis::rank_features(explanations, names)?;
    let histograms = (0..names.len())
        .map(|j| {
            let v: Vec<f64> = explanations.iter().map(|e| e.gradient[j]).collect();
            let spec = HistogramSpec::around(&v, bins)?;
            Ok(analysis::histogram(&v, spec))
        })
        .collect::<Result<_>>()?;
    Ok(RankOutput { ranking, histograms })
}

/// Group comparison of one feature's gradient components.
pub fn compare(
    explanations: &[ExplanationVector],
    feature: usize,
    mask: &[bool],
    bins: Option<usize>,
) -> Result<GroupComparison> {
    let spec = match bins {
        None => None,
        Some(b) => {
            let v: Vec<f64> = explanations.iter().map(|e| e.gradient.get(feature).copied().unwrap_or(0.0)).collect();
            Some(HistogramSpec::around(&v, b)?)
        }
    };
    Ok(analysis::compare_groups(explanations, feature, mask, spec)?)
}

/// Settings of one Iris run.
#[derive(Debug, Clone, PartialEq)]
pub struct IrisOptions {
    pub seed: u64,
    pub n_train: usize,
    pub k_grid: Vec<usize>,
    pub sigma_grid: SigmaGrid,
}

impl Default for IrisOptions {
    fn default() -> Self {
        IrisOptions {
            seed: 0,
            n_train: 100,
            k_grid: (1..=10).collect(),
            sigma_grid: SigmaGrid::default(),
        }
    }
}

/// Test-set record of an Iris run.
#[derive(Debug, Clone, PartialEq)]
pub struct IrisPoint {
    pub id: usize,
    pub species: Label,
    pub class: Label,
    pub predicted: Label,
    pub explanation: ExplanationVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrisMetrics {
    pub seed: u64,
    pub k: usize,
    pub k_candidates: Vec<usize>,
    pub loo_errors: Vec<usize>,
    pub train_error: f64,
    pub test_error: f64,
    pub sigma: f64,
    pub sigma_candidates: Vec<f64>,
    pub sigma_disagreements: Vec<usize>,
    /// Share of training points where the mimic reproduces the k-NN label.
    pub mimic_agreement: f64,
}

#[derive(Debug, Clone)]
pub struct IrisRun {
    pub metrics: IrisMetrics,
    pub stats: Vec<FeatureStats>,
    pub feature_names: Vec<String>,
    pub test: Vec<IrisPoint>,
    pub mimic: ParzenMimic,
}

/// Versicolor-vs-rest pipeline on the bundled Iris data: random split,
/// normalization by training statistics, k-NN with leave-one-out `k`, mimic
/// fitted to the k-NN's training labels, and explanations for the test set.
pub fn iris_run(opts: &IrisOptions) -> Result<IrisRun> {
    let species = load_iris();
    let binary = versicolor_vs_rest(&species);
    let (train, test) = split_stratified(&binary, opts.n_train, opts.seed, SplitOptions::default())?;
    let (train, others) = normalize_fit_apply(&train, &[&test])?;
    let test = others.into_iter().next().expect("one held-out set");

    let (knn, loo) = KnnClassifier::fit_loo(train.features.clone(), train.labels.clone(), &opts.k_grid)?;
    let train_pred = knn.predict_all(&train.features)?;
    let test_pred = knn.predict_all(&test.features)?;

    let candidates = opts.sigma_grid.candidates(&train.features);
    let sel = select_width(&train.features, &train_pred, Probes::LeaveOneOut, &candidates)?;
    let mimic = ParzenMimic::new(train.features.clone(), train_pred.clone(), sel.sigma)?;
    let mimic_pred: Vec<Label> = train
        .features
        .rows()
        .map(|r| mimic.predict(r).map(|f| f.value))
        .collect::<gradxplain_core::Result<_>>()?;

    let explanations = explain_mimic(&mimic, &test.features, &test_pred, None)?;
    let test_points = test
        .row_ids
        .iter()
        .zip(&test.labels)
        .zip(&test_pred)
        .zip(explanations)
        .map(|(((&id, &class), &predicted), explanation)| IrisPoint {
            id,
            species: species.labels[id],
            class,
            predicted,
            explanation,
        })
        .collect();

    Ok(IrisRun {
        metrics: IrisMetrics {
            seed: opts.seed,
            k: knn.k(),
            k_candidates: loo.candidates,
            loo_errors: loo.errors,
            train_error: error_rate(&train_pred, &train.labels),
            test_error: error_rate(&test_pred, &test.labels),
            sigma: sel.sigma,
            sigma_candidates: candidates,
            sigma_disagreements: sel.disagreements,
            mimic_agreement: 1.0 - error_rate(&mimic_pred, &train_pred),
        },
        stats: train.norm_stats.clone().expect("normalized"),
        feature_names: train.feature_names.clone(),
        test: test_points,
        mimic,
    })
}

/// Rows of explanations paired with dataset ids.
pub fn with_ids(ids: &[usize], explanations: Vec<ExplanationVector>) -> Vec<ExplanationRow> {
    ids.iter()
        .zip(explanations)
        .map(|(&id, explanation)| ExplanationRow { id, explanation })
        .collect()
}

pub use data::rng;

/// On-disk form of a fitted classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub feature_names: Vec<String>,
    pub gpc: gradxplain_core::gpc::GpcModelParts,
}

impl ModelFile {
    pub fn new(model: &GpcModel, feature_names: &[String]) -> Self {
        ModelFile {
            feature_names: feature_names.to_vec(),
            gpc: model.to_parts(),
        }
    }

    pub fn load(path: &std::path::Path) -> Result<(GpcModel, Vec<String>)> {
        let f: ModelFile = crate::io::read_json(path)?;
        Ok((GpcModel::from_parts(f.gpc)?, f.feature_names))
    }
}
