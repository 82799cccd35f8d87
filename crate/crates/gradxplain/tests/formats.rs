mod common;

use std::fs;

use gradxplain::io::{self, CsvSchema, ExplanationRow};
use gradxplain::pipeline::{self, ModelFile};
use gradxplain::Error;
use gradxplain_core::data::{fit_stats, gen_triangle, rng, Dataset};
use gradxplain_core::gpc::{EpOptions, GpcModel};
use gradxplain_core::linalg::Matrix;
use gradxplain_core::mimic::ParzenMimic;
use gradxplain_core::{KernelSpec, Label};
use rand::Rng;

fn awkward_values() -> Vec<f64> {
    let mut r = rng(4);
    let mut v: Vec<f64> = (0..60).map(|_| r.random_range(-1e3..1e3) * 10f64.powi(r.random_range(-12..12))).collect();
    v.extend([0.1, 1.0 / 3.0, -0.0, 5e-324, f64::MAX, f64::MIN_POSITIVE, 2f64.sqrt()]);
    v
}

#[test]
fn dataset_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let vals = awkward_values();
    let n = vals.len() / 3;
    let x = Matrix::from_row_major(n, 3, vals[..n * 3].to_vec()).unwrap();
    let labels: Vec<Label> = (0..n).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
    let d = Dataset::new(x, labels, Some(vec!["a".into(), "b c".into(), "d,e".into()])).unwrap();
    let path = dir.path().join("sub/data.csv");
    io::write_dataset(&path, &d).unwrap();
    let back = io::read_dataset(&path, &CsvSchema::default()).unwrap();
    assert_eq!(back.feature_names, d.feature_names);
    assert_eq!(back.labels, d.labels);
    for (a, b) in back.features.as_slice().iter().zip(d.features.as_slice()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn unparsable_cell_names_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    fs::write(&path, "id,x0,x1,label\n0,1.0,2.0,1\n1,3.0,NA,-1\n").unwrap();
    match io::read_dataset(&path, &CsvSchema::default()) {
        Err(Error::Cell { row, column, .. }) => {
            assert_eq!(row, 1);
            assert_eq!(column, "x1");
        }
        other => panic!("expected a cell error, got {other:?}"),
    }
    fs::write(&path, "x0,label\n1.0,1\n2.0,0\n").unwrap();
    let schema = CsvSchema {
        classes: Some(vec![-1, 1]),
        ..Default::default()
    };
    let err = io::read_dataset(&path, &schema).unwrap_err();
    assert!(matches!(err, Error::Cell { row: 1, .. }), "{err}");
    fs::write(&path, "x0,y\n1.0,1\n").unwrap();
    assert!(matches!(
        io::read_dataset(&path, &CsvSchema::default()),
        Err(Error::MissingColumn { .. })
    ));
    fs::write(&path, "x0,label\ninf,1\n").unwrap();
    assert!(matches!(io::read_dataset(&path, &CsvSchema::default()), Err(Error::Cell { .. })));
}

#[test]
fn explanations_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = gen_triangle(20, 3).unwrap();
    let m = GpcModel::fit(&d.features, &d.labels, KernelSpec::rbf(20.0).unwrap(), EpOptions::default()).unwrap();
    let ex = pipeline::explain_gpc(&m, &d.features).unwrap();
    let rows: Vec<ExplanationRow> = pipeline::with_ids(&d.row_ids, ex);
    let path = dir.path().join("e.csv");
    io::write_explanations(&path, &d.feature_names, &rows).unwrap();
    let (names, back) = io::read_explanations(&path).unwrap();
    assert_eq!(names, d.feature_names);
    assert_eq!(back, rows);
}

#[test]
fn gpc_model_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = gen_triangle(30, 5).unwrap();
    for k in [
        KernelSpec::rbf(20.0).unwrap(),
        KernelSpec::rational_quadratic(1.0, 0.15).unwrap(),
        KernelSpec::linear(),
    ] {
        let m = GpcModel::fit(&d.features, &d.labels, k, EpOptions::default()).unwrap();
        let path = dir.path().join("model.json");
        io::write_json(&path, &ModelFile::new(&m, &d.feature_names)).unwrap();
        let (back, names) = ModelFile::load(&path).unwrap();
        assert_eq!(names, d.feature_names);
        assert_eq!(back.to_parts(), m.to_parts());
        for q in [[0.3, 0.3], [0.9, 0.1], [-0.5, 2.0]] {
            assert_eq!(m.explain(&q).unwrap(), back.explain(&q).unwrap());
        }
    }
}

#[test]
fn tampered_model_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = gen_triangle(20, 6).unwrap();
    let m = GpcModel::fit(&d.features, &d.labels, KernelSpec::rbf(20.0).unwrap(), EpOptions::default()).unwrap();
    let mut f = ModelFile::new(&m, &d.feature_names);
    f.gpc.site_variance[0] = -1.0;
    let path = dir.path().join("bad.json");
    io::write_json(&path, &f).unwrap();
    assert!(ModelFile::load(&path).is_err());
}

#[test]
fn mimic_parts_round_trip() {
    let d = gen_triangle(15, 8).unwrap();
    let m = ParzenMimic::new(d.features.clone(), d.labels.clone(), 0.07).unwrap();
    let text = serde_json::to_string(&m.to_parts()).unwrap();
    let back = ParzenMimic::from_parts(serde_json::from_str(&text).unwrap()).unwrap();
    for q in d.features.rows() {
        assert_eq!(m.explain(q, 1).unwrap(), back.explain(q, 1).unwrap());
    }
}

#[test]
fn norm_stats_round_trip_keeps_feature_order() {
    let d = gen_triangle(10, 9).unwrap();
    let names = vec!["zeta".to_string(), "alpha".to_string()];
    let stats = fit_stats(&d.features).unwrap();
    let v = io::norm_stats_json(&names, &stats);
    let text = serde_json::to_string(&v).unwrap();
    assert!(text.find("zeta").unwrap() < text.find("alpha").unwrap());
    let back = io::parse_norm_stats("s.json".as_ref(), &names, &serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(back, stats);
    assert!(io::parse_norm_stats("s.json".as_ref(), &["other".into()], &v).is_err());
}

#[test]
fn predictions_and_groups() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    let entries = vec![(2, 1), (0, -1), (1, 1)];
    io::write_predictions(&p, &entries).unwrap();
    assert_eq!(io::read_predictions(&p).unwrap(), entries);
    let g = dir.path().join("g.csv");
    fs::write(&g, "id,group\n0,1\n1,false\n2,true\n").unwrap();
    let groups = io::read_groups(&g).unwrap();
    assert_eq!(groups.values().copied().collect::<Vec<_>>(), vec![true, false, true]);
    fs::write(&g, "id,group\n0,maybe\n").unwrap();
    assert!(io::read_groups(&g).is_err());
}
