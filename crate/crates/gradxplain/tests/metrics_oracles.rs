use gradxplain::metrics::roc_auc;
use gradxplain::pipeline::{self, parse_kernel, parse_k_grid, SigmaGrid};
use gradxplain_core::data::{gen_triangle, rng, Dataset};
use gradxplain_core::linalg::Matrix;
use gradxplain_core::{KernelKind, Label};
use rand::Rng;

/// Share of (positive, negative) pairs ranked correctly, ties counting half.
fn pairwise_auc(scores: &[f64], labels: &[Label]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (s, l) in scores.iter().zip(labels) {
        if *l != 1 {
            continue;
        }
        for (t, m) in scores.iter().zip(labels) {
            if *m == 1 {
                continue;
            }
            den += 1.0;
            num += if s > t {
                1.0
            } else if s == t {
                0.5
            } else {
                0.0
            };
        }
    }
    num / den
}

#[test]
fn auc_matches_pairwise_count() {
    let mut r = rng(21);
    for _ in 0..200 {
        let n = r.random_range(2..80);
        // a coarse score grid forces ties
        let scores: Vec<f64> = (0..n).map(|_| (r.random_range(0..12) as f64) / 11.0).collect();
        let mut labels: Vec<Label> = (0..n).map(|_| if r.random::<bool>() { 1 } else { -1 }).collect();
        labels[0] = 1;
        labels[1] = -1;
        let auc = roc_auc(&scores, &labels, 1).unwrap();
        assert!((auc - pairwise_auc(&scores, &labels)).abs() < 1e-12);
    }
}

#[test]
fn separable_data_gives_unit_auc() {
    // a linear kernel on two separated blobs
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut r = rng(22);
    for i in 0..40 {
        let c = if i % 2 == 0 { 1.0 } else { -1.0 };
        rows.push([c * 2.0 + r.random_range(-0.5..0.5), r.random_range(-0.5..0.5)]);
        labels.push(if c > 0.0 { 1 } else { -1 });
    }
    let d = Dataset::new(Matrix::from_rows(&rows).unwrap(), labels, None).unwrap();
    let (_, report) = pipeline::fit_gpc(&d, Some(&d), &[parse_kernel("linear").unwrap()], 0).unwrap();
    assert_eq!(report.train_auc, Some(1.0));
    assert_eq!(report.test_auc, Some(1.0));
    assert_eq!(report.train_error, 0.0);
}

#[test]
fn grid_search_is_deterministic_and_prefers_earlier_ties() {
    let d = gen_triangle(40, 3).unwrap();
    let grid = pipeline::default_kernel_grid(&d.features);
    let (_, a) = pipeline::fit_gpc(&d, None, &grid, 5).unwrap();
    let (_, b) = pipeline::fit_gpc(&d, None, &grid, 5).unwrap();
    assert_eq!(a, b);
    let best = a.grid.iter().map(|g| g.validation_accuracy).fold(0.0, f64::max);
    let first = a.grid.iter().position(|g| g.validation_accuracy == best).unwrap();
    assert_eq!(pipeline::kernel_label(&a.kernel), a.grid[first].kernel);
}

#[test]
fn option_parsers() {
    let k = parse_kernel("rq:alpha=2,length=0.5").unwrap();
    assert_eq!(k.kind(), KernelKind::RationalQuadratic);
    assert_eq!((k.alpha(), k.length()), (2.0, 0.5));
    assert_eq!(parse_kernel(r#"{"kind":"rbf","w":3}"#).unwrap().w(), 3.0);
    assert_eq!(parse_kernel(&pipeline::kernel_label(&k)).unwrap(), k);
    assert!(parse_kernel("rbf:w=-1").is_err());
    assert!(parse_kernel("rbf:width=1").is_err());
    assert_eq!(parse_k_grid("2-5").unwrap(), vec![2, 3, 4, 5]);
    assert_eq!(parse_k_grid("1,3").unwrap(), vec![1, 3]);
    assert!(parse_k_grid("0-3").is_err());
    assert_eq!("auto:5".parse::<SigmaGrid>().unwrap(), SigmaGrid::Auto(5));
    assert_eq!("0.1, 0.2".parse::<SigmaGrid>().unwrap(), SigmaGrid::Values(vec![0.1, 0.2]));
    assert!("x".parse::<SigmaGrid>().is_err());
    assert!(pipeline::GridSpec::parse("0,1,0,1,1,5").is_err());
}

#[test]
fn data_scale_is_rms_of_feature_deviations() {
    let x = Matrix::from_rows(&[[0.0, 0.0], [2.0, 0.0], [0.0, 4.0], [2.0, 4.0]]).unwrap();
    // deviations 1 and 2
    assert!((pipeline::data_scale(&x).unwrap() - (2.5f64).sqrt()).abs() < 1e-15);
}
