//! Command-line surface. Every command reads its options from flags and an
//! optional JSON config file and writes CSV/JSON files into `--out`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gradxplain_core::classifiers::LabelOracle;
use gradxplain_core::data::Dataset;
use gradxplain_core::gpc::GpcModel;
use gradxplain_core::linalg::Matrix;
use gradxplain_core::mimic::{ParzenMimic, WidthSelection};
use gradxplain_core::{ExplanationVector, Label};
use serde::Serialize;

use crate::config::{Fallback, RunConfig};
use crate::error::{Error, Result};
use crate::io::{self, fmt_f64, CsvSchema};
use crate::pipeline::{self, GridSpec, MimicMorph, ModelFile, Oracle, OracleSpec, SigmaGrid};

#[derive(Debug, Parser)]
#[command(name = "gradxplain", version, about = "Local explanation vectors for classifier decisions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a Gaussian process classifier; writes model.json and metrics.json.
    FitGpc(Flags),
    /// Explanation vectors at every row of --data; writes explanations.csv and explain.json.
    Explain(Flags),
    /// Probabilities and explanations on a 2-D grid; writes vector_field.csv.
    VectorField(Flags),
    /// Walk each row of --data along its explanation; writes morph.csv.
    Morph(Flags),
    /// Rank features by mean explanation; writes ranking.csv and histograms.csv.
    Rank(Flags),
    /// Compare one explanation component between two groups; writes compare.json.
    Compare(Flags),
    /// Versicolor-vs-rest k-NN pipeline on the bundled Iris data.
    Iris(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON file with any of the options below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset CSV (`id` column optional, `label` column, all other columns are features).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Held-out dataset for fit-gpc.
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    /// Fitted model from fit-gpc.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Labels of the classifier to explain: a CSV `id,label`, `knn`, or `knn:K`.
    #[arg(long)]
    pub oracle: Option<String>,
    /// Explanations CSV written by `explain`.
    #[arg(long)]
    pub explanations: Option<PathBuf>,
    /// Kernel candidate, e.g. `rbf:w=20`, `rq:alpha=1,length=0.15`, `linear`. Repeatable.
    #[arg(long)]
    pub kernel: Vec<String>,
    /// Mimic widths: `auto`, `auto:N`, or a comma-separated list.
    #[arg(long)]
    pub sigma_grid: Option<String>,
    /// Candidate k for k-NN: `1-15` or `1,3,5`.
    #[arg(long)]
    pub k_grid: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Half-width of the smoothing cube.
    #[arg(long)]
    pub smooth_window: Option<f64>,
    /// Replace vanishing mimic gradients by the top Hessian direction; optional norm threshold.
    #[arg(long, num_args = 0..=1, default_missing_value = "1e-6")]
    pub hessian_fallback: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub step_size: Option<f64>,
    /// `x_min,x_max,y_min,y_max,nx,ny`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Group table `id,group` for compare.
    #[arg(long)]
    pub group: Option<PathBuf>,
    /// Feature name for compare.
    #[arg(long)]
    pub feature: Option<String>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Number of seeds for iris, starting at --seed.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Training set size for iris.
    #[arg(long)]
    pub n_train: Option<usize>,
}

impl Flags {
    fn into_config(self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(RunConfig {
            data: self.data,
            test_data: self.test_data,
            model: self.model,
            oracle: self.oracle,
            explanations: self.explanations,
            kernel: self.kernel,
            sigma_grid: self.sigma_grid,
            k_grid: self.k_grid,
            seed: self.seed,
            out: self.out,
            smooth_window: self.smooth_window,
            hessian_fallback: self.hessian_fallback.map(Fallback::Threshold),
            steps: self.steps,
            step_size: self.step_size,
            grid: self.grid,
            group: self.group,
            feature: self.feature,
            bins: self.bins,
            runs: self.runs,
            n_train: self.n_train,
        }))
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Help and version requests print and return `Ok`.
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(Error::Usage(e.render().to_string().trim_end().to_string()));
        }
    };
    run(cli.command)
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::FitGpc(f) => fit_gpc(&f.into_config()?),
        Command::Explain(f) => explain(&f.into_config()?),
        Command::VectorField(f) => vector_field(&f.into_config()?),
        Command::Morph(f) => morph(&f.into_config()?),
        Command::Rank(f) => rank(&f.into_config()?),
        Command::Compare(f) => compare(&f.into_config()?),
        Command::Iris(f) => iris(&f.into_config()?),
    }
}

fn read_binary(path: &Path) -> Result<Dataset> {
    io::read_dataset(
        path,
        &CsvSchema {
            classes: Some(vec![-1, 1]),
            ..Default::default()
        },
    )
}

fn read_any(path: &Path) -> Result<Dataset> {
    io::read_dataset(path, &CsvSchema::default())
}

fn check_names(expected: &[String], found: &[String], what: &Path) -> Result<()> {
    if expected != found {
        return Err(Error::Config(format!(
            "{}: features {found:?} do not match the model's {expected:?}",
            what.display()
        )));
    }
    Ok(())
}

pub fn fit_gpc(cfg: &RunConfig) -> Result<()> {
    let train = read_binary(RunConfig::require(&cfg.data, "data")?)?;
    let test = cfg.test_data.as_deref().map(read_binary).transpose()?;
    if let Some(t) = &test {
        check_names(&train.feature_names, &t.feature_names, cfg.test_data.as_deref().unwrap())?;
    }
    let grid = if cfg.kernel.is_empty() {
        pipeline::default_kernel_grid(&train.features)
    } else {
        cfg.kernel.iter().map(|k| pipeline::parse_kernel(k)).collect::<Result<_>>()?
    };
    let (model, report) = pipeline::fit_gpc(&train, test.as_ref(), &grid, cfg.seed())?;
    let out = cfg.out_dir();
    io::write_json(&out.join("model.json"), &ModelFile::new(&model, &train.feature_names))?;
    io::write_json(&out.join("metrics.json"), &report)?;
    log::info!("kernel {}, train error {}", pipeline::kernel_label(&report.kernel), report.train_error);
    Ok(())
}

/// Either a fitted GPC or a mimic of a label oracle.
enum Route {
    Gpc(GpcModel),
    Mimic {
        mimic: ParzenMimic,
        oracle: Oracle,
        selection: WidthSelection,
        k: Option<usize>,
        fallback: Option<f64>,
    },
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct RouteInfo {
    route: &'static str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_candidates: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_disagreements: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    smooth_window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hessian_fallback: Option<f64>,
    rows: usize,
}

impl Route {
    /// Uses `--model` when given, otherwise a mimic of `--oracle` built on `data`.
    fn build(cfg: &RunConfig, data: &Dataset) -> Result<(Route, Option<Vec<f64>>)> {
        if let Some(m) = &cfg.model {
            let (model, names) = ModelFile::load(m)?;
            check_names(&names, &data.feature_names, cfg.data.as_deref().unwrap_or(m))?;
            return Ok((Route::Gpc(model), None));
        }
        let spec: OracleSpec = RunConfig::require(&cfg.oracle, "oracle")
            .map_err(|_| Error::Usage("either --model or --oracle is required".into()))?
            .parse()?;
        let k_grid = match &cfg.k_grid {
            Some(s) => pipeline::parse_k_grid(s)?,
            None => pipeline::default_k_grid(data.len()),
        };
        let (oracle, _) = pipeline::build_oracle(&spec, data, &k_grid)?;
        let k = match &oracle {
            Oracle::Knn(c) => Some(c.k()),
            Oracle::Table(_) => None,
        };
        let g = oracle.labels_for(data)?;
        let grid: SigmaGrid = match &cfg.sigma_grid {
            Some(s) => s.parse()?,
            None => SigmaGrid::default(),
        };
        let candidates = grid.candidates(&data.features);
        let (mimic, selection) = pipeline::fit_mimic(&data.features, &g, &SigmaGrid::Values(candidates.clone()))?;
        Ok((
            Route::Mimic {
                mimic,
                oracle,
                selection,
                k,
                fallback: cfg.hessian_fallback.and_then(Fallback::threshold),
            },
            Some(candidates),
        ))
    }

    fn info(&self, cfg: &RunConfig, candidates: Option<Vec<f64>>, rows: usize) -> RouteInfo {
        let mut info = RouteInfo {
            route: "analytic-gpc",
            seed: cfg.seed(),
            sigma: None,
            sigma_candidates: None,
            sigma_disagreements: None,
            k: None,
            smooth_window: cfg.smooth_window,
            hessian_fallback: None,
            rows,
        };
        if let Route::Mimic {
            selection, k, fallback, ..
        } = self
        {
            info.route = "parzen-mimic";
            info.sigma = Some(selection.sigma);
            info.sigma_candidates = candidates;
            info.sigma_disagreements = Some(selection.disagreements.clone());
            info.k = *k;
            info.hessian_fallback = *fallback;
        }
        info
    }

    /// Explanations at the rows of `data`; mimic labels come from the oracle.
    fn explain_rows(&self, data: &Dataset) -> Result<Vec<ExplanationVector>> {
        match self {
            Route::Gpc(m) => pipeline::explain_gpc(m, &data.features),
            Route::Mimic {
                mimic,
                oracle,
                fallback,
                ..
            } => {
                let g = oracle.labels_for(data)?;
                pipeline::explain_mimic(mimic, &data.features, &g, *fallback)
            }
        }
    }

    /// Explanation at an arbitrary point. A table oracle cannot label new
    /// points, so the mimic's own label stands in for it there.
    fn explain_point(&self, x: &[f64]) -> Result<ExplanationVector> {
        match self {
            Route::Gpc(m) => Ok(m.explain(x)?),
            Route::Mimic {
                mimic,
                oracle,
                fallback,
                ..
            } => {
                let g = match oracle.predict(x) {
                    Ok(l) => l,
                    Err(gradxplain_core::Error::UnknownQuery) => mimic.predict(x)?.value,
                    Err(e) => return Err(e.into()),
                };
                let q = Matrix::from_row_major(1, x.len(), x.to_vec())?;
                Ok(pipeline::explain_mimic(mimic, &q, &[g], *fallback)?.remove(0))
            }
        }
    }
}

pub fn explain(cfg: &RunConfig) -> Result<()> {
    let data = read_any(RunConfig::require(&cfg.data, "data")?)?;
    let (route, candidates) = Route::build(cfg, &data)?;
    let mut ex = route.explain_rows(&data)?;
    if let Some(w) = cfg.smooth_window {
        ex = pipeline::smooth(&ex, w)?;
    }
    let out = cfg.out_dir();
    let info = route.info(cfg, candidates, ex.len());
    io::write_explanations(
        &out.join("explanations.csv"),
        &data.feature_names,
        &pipeline::with_ids(&data.row_ids, ex),
    )?;
    io::write_json(&out.join("explain.json"), &info)
}

pub fn vector_field(cfg: &RunConfig) -> Result<()> {
    let data = read_any(RunConfig::require(&cfg.data, "data")?)?;
    let (route, _) = Route::build(cfg, &data)?;
    let grid = match &cfg.grid {
        Some(g) => GridSpec::parse(g)?,
        None => GridSpec::around(&data.features)?,
    };
    if data.dim() != 2 {
        return Err(Error::Config(format!("vector-field needs 2 features, the data has {}", data.dim())));
    }
    let nodes = pipeline::vector_field(&grid, |p| route.explain_point(p))?;
    let n = &data.feature_names;
    let header: Vec<String> = vec![
        "ix".into(),
        "iy".into(),
        format!("x_{}", n[0]),
        format!("x_{}", n[1]),
        "probability".into(),
        format!("grad_{}", n[0]),
        format!("grad_{}", n[1]),
        "predicted_label".into(),
        "source".into(),
    ];
    let rows: Vec<Vec<String>> = nodes
        .iter()
        .map(|node| {
            let e = &node.explanation;
            vec![
                node.ix.to_string(),
                node.iy.to_string(),
                fmt_f64(e.query[0]),
                fmt_f64(e.query[1]),
                fmt_f64(e.predicted_probability),
                fmt_f64(e.gradient[0]),
                fmt_f64(e.gradient[1]),
                e.predicted_label.to_string(),
                e.source.to_string(),
            ]
        })
        .collect();
    io::write_table(&cfg.out_dir().join("vector_field.csv"), &header, &rows)
}

pub fn morph(cfg: &RunConfig) -> Result<()> {
    let data = read_any(RunConfig::require(&cfg.data, "data")?)?;
    let (route, _) = Route::build(cfg, &data)?;
    let steps = cfg.steps.unwrap_or(50);
    let step_size = match cfg.step_size {
        Some(s) => s,
        None => 0.1 * pipeline::data_scale(&data.features)?,
    };
    if !(step_size > 0.0) || !step_size.is_finite() {
        return Err(Error::Config(format!("step size must be positive, got {step_size}")));
    }
    let paths = match &route {
        Route::Gpc(m) => pipeline::morph_all(m, &data.row_ids, &data.features, steps, step_size)?,
        Route::Mimic { mimic, oracle, .. } => {
            let g: Vec<Label> = oracle.labels_for(&data)?;
            data.features
                .rows()
                .zip(&data.row_ids)
                .zip(g)
                .map(|((x, &id), g_label)| pipeline::morph(&MimicMorph { mimic, g_label }, id, x, steps, step_size))
                .collect::<Result<_>>()?
        }
    };
    let mut header = vec!["id".to_string(), "step".to_string()];
    header.extend(data.feature_names.iter().map(|n| format!("x_{n}")));
    header.extend(["probability", "label", "flipped"].map(String::from));
    let rows: Vec<Vec<String>> = paths
        .iter()
        .flatten()
        .map(|s| {
            let mut r = vec![s.id.to_string(), s.step.to_string()];
            r.extend(s.point.iter().map(|v| fmt_f64(*v)));
            r.push(fmt_f64(s.probability));
            r.push(s.label.to_string());
            r.push(s.flipped.to_string());
            r
        })
        .collect();
    io::write_table(&cfg.out_dir().join("morph.csv"), &header, &rows)
}

fn explanations_path(cfg: &RunConfig) -> Result<&Path> {
    cfg.explanations
        .as_deref()
        .ok_or_else(|| Error::Usage("missing required option --explanations".into()))
}

pub fn rank(cfg: &RunConfig) -> Result<()> {
    let (names, rows) = io::read_explanations(explanations_path(cfg)?)?;
    let ex: Vec<ExplanationVector> = rows.into_iter().map(|r| r.explanation).collect();
    let out = pipeline::rank(&ex, &names, cfg.bins.unwrap_or(30))?;
    let dir = cfg.out_dir();
    let r = &out.ranking;
    let ranking: Vec<Vec<String>> = r
        .order()
        .into_iter()
        .map(|j| vec![r.rank[j].to_string(), r.names[j].clone(), fmt_f64(r.mean_gradient[j])])
        .collect();
    io::write_table(
        &dir.join("ranking.csv"),
        &["rank", "feature", "mean_gradient"].map(String::from),
        &ranking,
    )?;
    let mut hist_rows = Vec::new();
    for (name, h) in names.iter().zip(&out.histograms) {
        let edges = h.spec.edges();
        for (b, c) in h.counts.iter().enumerate() {
            hist_rows.push(vec![
                name.clone(),
                b.to_string(),
                fmt_f64(edges[b]),
                fmt_f64(edges[b + 1]),
                c.to_string(),
            ]);
        }
    }
    io::write_table(
        &dir.join("histograms.csv"),
        &["feature", "bin", "lo", "hi", "count"].map(String::from),
        &hist_rows,
    )
}

pub fn compare(cfg: &RunConfig) -> Result<()> {
    let (names, rows) = io::read_explanations(explanations_path(cfg)?)?;
    let group_path = RunConfig::require(&cfg.group, "group")?;
    let groups = io::read_groups(group_path)?;
    let feature = RunConfig::require(&cfg.feature, "feature")?;
    let j = names
        .iter()
        .position(|n| n == feature)
        .ok_or_else(|| Error::Config(format!("unknown feature `{feature}`; available: {names:?}")))?;
    let mask: Vec<bool> = rows
        .iter()
        .map(|r| {
            groups.get(&r.id).copied().ok_or_else(|| {
                Error::Config(format!("{}: no group for id {}", group_path.display(), r.id))
            })
        })
        .collect::<Result<_>>()?;
    let ex: Vec<ExplanationVector> = rows.into_iter().map(|r| r.explanation).collect();
    let cmp = pipeline::compare(&ex, j, &mask, cfg.bins)?;
    let path = cfg.out_dir().join("compare.json");
    let body = serde_json::to_value(&cmp).map_err(|e| Error::json(&path, e))?;
    let mut doc = serde_json::json!({ "feature": feature, "feature_index": j });
    if let (Some(m), serde_json::Value::Object(rest)) = (doc.as_object_mut(), body) {
        m.extend(rest.into_iter().filter(|(k, _)| k != "feature"));
    }
    io::write_json(&path, &doc)
}

pub fn iris(cfg: &RunConfig) -> Result<()> {
    let runs = cfg.runs.unwrap_or(1);
    let k_grid = match &cfg.k_grid {
        Some(s) => pipeline::parse_k_grid(s)?,
        None => pipeline::IrisOptions::default().k_grid,
    };
    let sigma_grid: SigmaGrid = match &cfg.sigma_grid {
        Some(s) => s.parse()?,
        None => SigmaGrid::default(),
    };
    let mut metrics = Vec::new();
    let mut scatter = Vec::new();
    let mut names = Vec::new();
    for r in 0..runs as u64 {
        let opts = pipeline::IrisOptions {
            seed: cfg.seed() + r,
            n_train: cfg.n_train.unwrap_or(100),
            k_grid: k_grid.clone(),
            sigma_grid: sigma_grid.clone(),
        };
        let run = pipeline::iris_run(&opts)?;
        names = run.feature_names.clone();
        for p in &run.test {
            let mut row = vec![
                opts.seed.to_string(),
                p.id.to_string(),
                p.species.to_string(),
                p.class.to_string(),
                p.predicted.to_string(),
            ];
            row.extend(p.explanation.query.iter().map(|v| fmt_f64(*v)));
            row.extend(p.explanation.gradient.iter().map(|v| fmt_f64(*v)));
            row.push(fmt_f64(p.explanation.predicted_probability));
            scatter.push(row);
        }
        let mut m = serde_json::to_value(&run.metrics).expect("plain struct");
        m["norm-stats"] = io::norm_stats_json(&run.feature_names, &run.stats);
        metrics.push(m);
    }
    let mut header: Vec<String> = ["seed", "id", "species", "class", "predicted"].map(String::from).to_vec();
    header.extend(names.iter().map(|n| format!("x_{n}")));
    header.extend(names.iter().map(|n| format!("grad_{n}")));
    header.push("probability".into());
    let dir = cfg.out_dir();
    io::write_table(&dir.join("iris_scatter.csv"), &header, &scatter)?;
    io::write_json(&dir.join("iris_metrics.json"), &metrics)
}
