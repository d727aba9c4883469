use proptest::prelude::*;
use qcard::analysis::*;
use qcard::trainer::{QueryResult, RunReport};
use qcard::{LayerKind, LayerOptions, PostLayer};

fn report(model: &[f64], base: Option<&[f64]>) -> RunReport {
    let rows: Vec<QueryResult> = model
        .iter()
        .enumerate()
        .map(|(i, &e)| QueryResult {
            query_id: format!("q{i}"),
            predicted_log_card: 1.0 + e,
            true_log_card: 1.0,
            abs_log_error: e,
            baseline_abs_log_error: base.map(|b| b[i]),
        })
        .collect();
    let mean = model.iter().sum::<f64>() / model.len() as f64;
    RunReport {
        rows,
        mean_abs_log_error: mean,
        baseline_mean_abs_log_error: base.map(|b| b.iter().sum::<f64>() / b.len() as f64),
        improvement: base.map(|b| improvement_factor(model, b).unwrap()),
        loss_curve: vec![3.0, 2.0, 1.5],
    }
}

#[test]
fn improvement_factor_examples() {
    assert_eq!(improvement_factor(&[0.4, 0.9], &[0.4, 0.9]).unwrap(), Improvement::Factor(1.0));
    assert_eq!(improvement_factor(&[0.5, 1.0, 0.25], &[1.0, 2.0, 0.5]).unwrap(), Improvement::Factor(2.0));
    assert_eq!(improvement_factor(&[0.0, 0.0], &[1.0, 0.2]).unwrap(), Improvement::Exact);
    assert_eq!(Improvement::Exact.to_string(), "exact");
    assert!(improvement_factor(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn constructed_factor_of_six_point_three_seven() {
    // model errors chosen freely, baseline scaled so the mean ratio is 6.37
    let model = [0.1, 0.35, 0.2, 0.05, 0.3];
    let base: Vec<f64> = model.iter().map(|e| e * 6.37).collect();
    let f = improvement_factor(&model, &base).unwrap().value();
    assert!((f - 6.37).abs() < 1e-9, "{f}");
}

#[test]
fn one_sample_fills_one_bin() {
    let layer = PostLayer::new(LayerKind::Threshold, LayerOptions::default()).unwrap();
    let h = value_distribution(&layer, 4, 1, 3, 100, InputView::Basis).unwrap();
    assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
    assert_eq!(h.total_samples, 1);
}

#[test]
fn sampling_ignores_worker_count() {
    let layer = PostLayer::new(LayerKind::PlaceValueNeg, LayerOptions::default()).unwrap();
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| value_distribution(&layer, 4, 3000, 17, 40, InputView::Basis).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn register_too_small_is_a_config_error() {
    let layer = PostLayer::new(LayerKind::PlaceValue, LayerOptions { width: 8, ..Default::default() }).unwrap();
    let err = value_distribution(&layer, 2, 10, 0, 10, InputView::Basis).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    // four marginals are too few for an 8-wide head as well
    assert!(value_distribution(&layer, 4, 10, 0, 10, InputView::Marginal).is_err());
}

#[test]
fn marginal_view_feeds_per_qubit_probabilities() {
    let layer = PostLayer::new(LayerKind::PlaceValue, LayerOptions::default()).unwrap();
    let values = sample_values(&layer, 4, 500, 2, InputView::Marginal).unwrap();
    // each marginal lies in [0, 1], so the output is at most 1 + 2 + 4 + 8
    assert!(values.iter().all(|&v| (0.0..=15.0).contains(&v)));
}

#[test]
fn reports_have_one_row_per_query_plus_footer() {
    let errs: Vec<f64> = (0..70).map(|i| i as f64 / 70.0).collect();
    let csv = metrics_csv(&report(&errs, None));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 70 + 1);
    assert_eq!(lines[0], "query_id,predicted_log_card,true_log_card,abs_log_error");
    assert!(lines[71].starts_with("mean,"));

    let with_base = metrics_csv(&report(&errs[..2], Some(&[0.5, 0.5])));
    assert!(with_base.lines().next().unwrap().ends_with("baseline_abs_log_error,improvement_factor"));
}

#[test]
fn emit_report_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let layer = PostLayer::new(LayerKind::Threshold, LayerOptions::default()).unwrap();
    let hist = value_distribution(&layer, 4, 2000, 5, 20, InputView::Basis).unwrap();
    let r = report(&[0.1, 0.2], Some(&[0.3, 0.3]));

    let only = emit_report(&r, &[], &dir.path().join("a")).unwrap();
    let names: Vec<_> = only.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
    assert_eq!(names, ["metrics.csv", "loss_curve.csv"]);

    let first = emit_report(&r, std::slice::from_ref(&hist), &dir.path().join("b")).unwrap();
    let second = emit_report(&r, std::slice::from_ref(&hist), &dir.path().join("c")).unwrap();
    assert_eq!(first.len(), 4);
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }
    let svg = std::fs::read_to_string(dir.path().join("b/hist_threshold.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(!svg.contains("href"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn histograms_conserve_samples(seed in any::<u64>(), samples in 1..400usize, bins in 1..60usize, k in 0..8usize) {
        let (layer, n) = default_panels(None).swap_remove(k);
        let h = value_distribution(&layer, n.min(6), samples, seed, bins, InputView::Basis);
        let h = match h { Ok(h) => h, Err(_) => return Ok(()) };
        prop_assert_eq!(h.counts.iter().sum::<u64>(), samples as u64);
        prop_assert!(h.edges.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(&h, &value_distribution(&layer, n.min(6), samples, seed, bins, InputView::Basis).unwrap());
    }

    #[test]
    fn identical_reports_have_factor_one(errs in prop::collection::vec(0.0..5.0f64, 1..30)) {
        prop_assume!(errs.iter().any(|&e| e > 0.0));
        prop_assert_eq!(improvement_factor(&errs, &errs).unwrap(), Improvement::Factor(1.0));
    }
}
