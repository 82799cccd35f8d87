mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use gradxplain::io::{self, CsvSchema};
use gradxplain::pipeline::{self, ModelFile, SigmaGrid};
use gradxplain_core::classifiers::{KnnClassifier, LabelOracle};
use gradxplain_core::data::{gen_three_clusters, gen_triangle};
use gradxplain_core::ExplanationSource;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gradxplain"))
}

fn run_ok(args: &[&str]) {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_triangle(dir: &Path, n: usize, seed: u64) -> std::path::PathBuf {
    let p = dir.join("tri.csv");
    io::write_dataset(&p, &gen_triangle(n, seed).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gpc_explain_matches_library_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_triangle(dir.path(), 40, 1);
    let out = dir.path().join("out");
    run_ok(&["fit-gpc", "--data", s(&data), "--kernel", "rbf:w=20", "--out", s(&out)]);
    run_ok(&["explain", "--data", s(&data), "--model", s(&out.join("model.json")), "--out", s(&out)]);

    let d = io::read_dataset(&data, &CsvSchema::default()).unwrap();
    let (model, _) = ModelFile::load(&out.join("model.json")).unwrap();
    let lib = pipeline::explain_gpc(&model, &d.features).unwrap();
    let (_, rows) = io::read_explanations(&out.join("explanations.csv")).unwrap();
    assert_eq!(rows.len(), d.len());
    for (r, e) in rows.iter().zip(&lib) {
        assert_eq!(&r.explanation, e);
        assert_eq!(r.explanation.source, ExplanationSource::AnalyticGpc);
    }
    // the stored model is the one the library fits
    let direct = gradxplain_core::gpc::GpcModel::fit(
        &d.features,
        &d.labels,
        gradxplain_core::KernelSpec::rbf(20.0).unwrap(),
        Default::default(),
    )
    .unwrap();
    assert_eq!(direct.to_parts(), model.to_parts());
}

#[test]
fn mimic_explain_matches_library_and_reports_width() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_triangle(dir.path(), 30, 2);
    let out = dir.path().join("out");
    run_ok(&["explain", "--data", s(&data), "--oracle", "knn:3", "--sigma-grid", "auto:9", "--out", s(&out)]);
    let d = io::read_dataset(&data, &CsvSchema::default()).unwrap();
    let knn = KnnClassifier::new(d.features.clone(), d.labels.clone(), 3).unwrap();
    let g = knn.predict_all(&d.features).unwrap();
    let (mimic, sel) = pipeline::fit_mimic(&d.features, &g, &SigmaGrid::Auto(9)).unwrap();
    let lib = pipeline::explain_mimic(&mimic, &d.features, &g, None).unwrap();
    let (_, rows) = io::read_explanations(&out.join("explanations.csv")).unwrap();
    for (r, e) in rows.iter().zip(&lib) {
        assert_eq!(&r.explanation, e);
        assert_eq!(r.explanation.source, ExplanationSource::ParzenMimic);
    }
    let info: serde_json::Value = io::read_json(&out.join("explain.json")).unwrap();
    assert_eq!(info["route"], "parzen-mimic");
    assert_eq!(info["sigma"].as_f64().unwrap(), sel.sigma);
    assert_eq!(info["k"], 3);
}

#[test]
fn table_oracle_matches_knn_labels() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_triangle(dir.path(), 25, 3);
    let d = io::read_dataset(&data, &CsvSchema::default()).unwrap();
    let knn = KnnClassifier::new(d.features.clone(), d.labels.clone(), 5).unwrap();
    let labels = knn.predict_all(&d.features).unwrap();
    let table = dir.path().join("pred.csv");
    io::write_predictions(&table, &labels.iter().copied().enumerate().collect::<Vec<_>>()).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(&["explain", "--data", s(&data), "--oracle", s(&table), "--out", s(&a)]);
    run_ok(&["explain", "--data", s(&data), "--oracle", "knn:5", "--out", s(&b)]);
    assert_eq!(
        fs::read(a.join("explanations.csv")).unwrap(),
        fs::read(b.join("explanations.csv")).unwrap()
    );
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_triangle(dir.path(), 30, 4);
    for out in ["r1", "r2"] {
        let o = dir.path().join(out);
        run_ok(&["fit-gpc", "--data", s(&data), "--seed", "7", "--out", s(&o)]);
        run_ok(&["morph", "--data", s(&data), "--model", s(&o.join("model.json")), "--steps", "5", "--out", s(&o)]);
        run_ok(&["iris", "--seed", "3", "--runs", "2", "--out", s(&o)]);
    }
    for f in ["model.json", "metrics.json", "morph.csv", "iris_metrics.json", "iris_scatter.csv"] {
        assert_eq!(
            fs::read(dir.path().join("r1").join(f)).unwrap(),
            fs::read(dir.path().join("r2").join(f)).unwrap(),
            "{f}"
        );
    }
    let metrics: serde_json::Value = io::read_json(&dir.path().join("r1/metrics.json")).unwrap();
    assert_eq!(metrics["seed"], 7);
    assert_eq!(metrics["grid"].as_array().unwrap().len(), 5);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_triangle(dir.path(), 20, 5);
    let cfg = dir.path().join("run.json");
    let out_file = dir.path().join("from_file");
    fs::write(
        &cfg,
        serde_json::json!({"data": data, "kernel": ["linear"], "seed": 1, "out": out_file}).to_string(),
    )
    .unwrap();
    let out_flag = dir.path().join("from_flag");
    run_ok(&["fit-gpc", "--config", s(&cfg), "--kernel", "rbf:w=5", "--out", s(&out_flag)]);
    assert!(!out_file.exists());
    let m: serde_json::Value = io::read_json(&out_flag.join("metrics.json")).unwrap();
    assert_eq!(m["kernel"]["kind"], "rbf");
    assert_eq!(m["seed"], 1);
}

#[test]
fn failures_exit_nonzero_with_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x0,x1,label\n0.1,0.2,1\n0.3,oops,-1\n").unwrap();
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["fit-gpc", "--data", s(&bad)], "parse"),
        (vec!["fit-gpc"], "usage"),
        (vec!["explain", "--data", "/nonexistent/file.csv", "--oracle", "knn"], "csv"),
        (vec!["frobnicate"], "usage"),
        (vec!["fit-gpc", "--data", s(&bad), "--kernel", "cubic"], "parse"),
    ];
    for (args, kind) in cases {
        let out = bin().args(&args).output().unwrap();
        assert!(!out.status.success(), "{args:?}");
        let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap_or_else(|e| {
            panic!("{args:?}: stderr is not JSON ({e}): {}", String::from_utf8_lossy(&out.stderr))
        });
        assert!(err["error"]["message"].is_string());
        if kind != "parse" || args.len() == 3 {
            assert_eq!(err["error"]["kind"], kind, "{args:?}");
        }
    }
    let help = bin().arg("--help").output().unwrap();
    assert!(help.status.success());
}

#[test]
fn vector_field_agrees_with_explanations_at_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_triangle(dir.path(), 30, 6);
    let out = dir.path().join("out");
    run_ok(&["fit-gpc", "--data", s(&data), "--kernel", "rbf:w=20", "--out", s(&out)]);
    let model = out.join("model.json");
    run_ok(&["vector-field", "--data", s(&data), "--model", s(&model), "--grid", "0,1,0,1,7,5", "--out", s(&out)]);
    let (m, _) = ModelFile::load(&model).unwrap();
    let mut rdr = csv::Reader::from_path(out.join("vector_field.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 35);
    for r in &rows {
        let f = |i: usize| r[i].parse::<f64>().unwrap();
        let p = f(4);
        assert!((0.0..=1.0).contains(&p));
        let e = m.explain(&[f(2), f(3)]).unwrap();
        assert_eq!(e.predicted_probability, p);
        assert_eq!(e.gradient, vec![f(5), f(6)]);
    }
    assert_eq!(&rows[1][0], "1");
    assert_eq!(&rows[1][1], "0");
}

#[test]
fn morph_trajectories_start_at_the_input_and_stop_at_a_flip() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_triangle(dir.path(), 30, 7);
    let out = dir.path().join("out");
    run_ok(&["fit-gpc", "--data", s(&data), "--kernel", "rbf:w=20", "--out", s(&out)]);
    run_ok(&["morph", "--data", s(&data), "--model", s(&out.join("model.json")), "--step-size", "0.02", "--out", s(&out)]);
    let d = io::read_dataset(&data, &CsvSchema::default()).unwrap();
    let mut rdr = csv::Reader::from_path(out.join("morph.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let (model, _) = ModelFile::load(&out.join("model.json")).unwrap();
    let mut starts = 0;
    let mut flips_from = std::collections::BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let id: usize = r[0].parse().unwrap();
        let step: usize = r[1].parse().unwrap();
        let x = [r[2].parse::<f64>().unwrap(), r[3].parse::<f64>().unwrap()];
        let p: f64 = r[4].parse().unwrap();
        assert_eq!(model.predict_proba(&x).unwrap(), p);
        if step == 0 {
            starts += 1;
            assert_eq!(x, [d.features.row(id)[0], d.features.row(id)[1]]);
        }
        if &r[6] == "true" {
            // the flip is the last step and p crossed 0.5 on it
            let prev: f64 = rows[i - 1][4].parse().unwrap();
            assert!((prev - 0.5) * (p - 0.5) <= 0.0);
            assert!(rows.get(i + 1).is_none_or(|n| &n[1] == "0"));
            *flips_from.entry(rows[i - 1][5].to_string()).or_insert(0) += 1;
        }
    }
    assert_eq!(starts, d.len());
    // both classes can be walked out of
    assert!(flips_from.len() == 2, "{flips_from:?}");

    let zero = dir.path().join("zero");
    run_ok(&["morph", "--data", s(&data), "--model", s(&out.join("model.json")), "--steps", "0", "--out", s(&zero)]);
    let rows = csv::Reader::from_path(zero.join("morph.csv")).unwrap().records().count();
    assert_eq!(rows, d.len());
}

#[test]
fn rank_and_compare_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (d, clusters) = gen_three_clusters(90, 3).unwrap();
    let data = dir.path().join("c.csv");
    io::write_dataset(&data, &d).unwrap();
    let out = dir.path().join("out");
    run_ok(&["fit-gpc", "--data", s(&data), "--kernel", "rbf:w=0.5", "--out", s(&out)]);
    run_ok(&["explain", "--data", s(&data), "--model", s(&out.join("model.json")), "--out", s(&out)]);
    let ex = out.join("explanations.csv");
    run_ok(&["rank", "--explanations", s(&ex), "--bins", "10", "--out", s(&out)]);
    let ranking = fs::read_to_string(out.join("ranking.csv")).unwrap();
    assert!(ranking.starts_with("rank,feature,mean_gradient\n1,"));
    let hist_rows = csv::Reader::from_path(out.join("histograms.csv")).unwrap().records().count();
    assert_eq!(hist_rows, 2 * 10);

    let groups = dir.path().join("g.csv");
    let table: String = clusters
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{i},{}\n", u8::from(*c == 0)))
        .collect();
    fs::write(&groups, format!("id,group\n{table}")).unwrap();
    run_ok(&["compare", "--explanations", s(&ex), "--group", s(&groups), "--feature", "x0", "--out", s(&out)]);
    let c: serde_json::Value = io::read_json(&out.join("compare.json")).unwrap();
    assert_eq!(c["feature"], "x0");
    assert_eq!(c["feature_index"], 0);
    assert_eq!(c["n_in"], 30);
    assert!(c["ks"]["p_value"].as_f64().unwrap() < 0.01);
    let bad = bin()
        .args(["compare", "--explanations", s(&ex), "--group", s(&groups), "--feature", "nope", "--out", s(&out)])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

#[test]
fn hessian_fallback_flag_switches_the_source() {
    let dir = tempfile::tempdir().unwrap();
    let (d, _) = gen_three_clusters(90, 4).unwrap();
    // the exact middle-cluster center is a stationary point
    let mut rows: Vec<Vec<f64>> = d.features.rows().map(|r| r.to_vec()).collect();
    rows.push(vec![0.0, 0.0]);
    let mut labels = d.labels.clone();
    labels.push(1);
    let x = gradxplain_core::linalg::Matrix::from_rows(&rows).unwrap();
    let data = dir.path().join("c.csv");
    io::write_dataset(&data, &gradxplain_core::data::Dataset::new(x, labels, None).unwrap()).unwrap();
    let out = dir.path().join("out");
    run_ok(&["explain", "--data", s(&data), "--oracle", "knn:1", "--hessian-fallback", "--out", s(&out)]);
    let (_, rows) = io::read_explanations(&out.join("explanations.csv")).unwrap();
    let last = &rows.last().unwrap().explanation;
    assert_eq!(last.source, ExplanationSource::HessianFallback);
    assert!(last.gradient[0].abs() > 0.9);
    let info: serde_json::Value = io::read_json(&out.join("explain.json")).unwrap();
    assert_eq!(info["hessian-fallback"].as_f64(), Some(1e-6));
}
