use fermat_fda::classify::mds::TargetDim;
use fermat_fda::classify::wknn::WknnConfig;
use fermat_fda::simgen::{gen_model, SimModel, SimSpec};
use fermat_fda::{classify_pipeline, Dataset, DiscreteCurve, Error, Method, PipelineConfig};

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / pred.len() as f64
}

/// Labeled sample followed by exact copies of some of its curves.
fn duplicated_dataset() -> (Dataset, Vec<usize>) {
    let sim = gen_model(&SimSpec::new(SimModel::I, 60, 60, 60, 77)).unwrap();
    let mut curves: Vec<DiscreteCurve> = sim.dataset.curves().to_vec();
    let mut labels: Vec<Option<usize>> = sim.truth.labels.iter().map(|&c| Some(c)).collect();
    let mut expected = Vec::new();
    for i in (0..60).step_by(3) {
        let c = &sim.dataset.curves()[i];
        let copy = DiscreteCurve::from_parts(format!("dup{i}"), c.times().to_vec(), c.values().to_vec(), c.noise_sd()).unwrap();
        curves.push(copy);
        labels.push(None);
        expected.push(sim.truth.labels[i]);
    }
    (Dataset::new(curves, labels, 3).unwrap(), expected)
}

#[test]
fn duplicated_curves_take_their_labels() {
    let (data, expected) = duplicated_dataset();
    for sigma in [0.01, 1.0, 100.0, f64::INFINITY] {
        let mut cfg = PipelineConfig::new(Method::FdWknn);
        cfg.wknn = WknnConfig {
            k: Some(1),
            sigma: Some(sigma),
            ..WknnConfig::default()
        };
        let out = classify_pipeline(&data, &cfg).unwrap();
        assert_eq!(out.predictions, expected, "sigma = {sigma}");
        // zero distance puts all weight on the copy
        assert!(out.weight_entropies.unwrap().iter().all(|&e| e == 0.0));
    }
}

#[test]
fn pipeline_is_deterministic() {
    let sim = gen_model(&SimSpec::new(SimModel::I, 150, 30, 50, 5)).unwrap();
    for method in Method::ALL {
        let cfg = PipelineConfig::new(method);
        let a = classify_pipeline(&sim.dataset, &cfg).unwrap();
        let b = classify_pipeline(&sim.dataset, &cfg).unwrap();
        assert_eq!(a.predictions, b.predictions, "{method}");
        assert_eq!(a.predictions.len(), 120);
        assert_eq!(a.diagnostics.bandwidths, b.diagnostics.bandwidths);
    }
}

#[test]
fn svm_variants_report_their_target_dimension() {
    let sim = gen_model(&SimSpec::new(SimModel::Ii, 200, 40, 50, 3)).unwrap();
    let high = classify_pipeline(&sim.dataset, &PipelineConfig::new(Method::FdSvmHigh)).unwrap();
    let low = classify_pipeline(&sim.dataset, &PipelineConfig::new(Method::FdGsvmLow)).unwrap();
    let d_hat = low.diagnostics.d_hat.unwrap();
    assert_eq!(low.diagnostics.p, Some(d_hat));
    let p_high = high.diagnostics.p.unwrap();
    assert!(p_high > d_hat, "high p = {p_high}, d_hat = {d_hat}");
    assert_eq!(high.diagnostics.eigenvalues.len(), p_high);
    assert!(low.diagnostics.svm_bandwidth.unwrap() > 0.0);
    for out in [&high, &low] {
        assert_eq!(out.predictions.len(), 160);
        assert!(out.predictions.iter().all(|&c| c < 3));
        assert!(out.diagnostics.timings.iter().any(|t| t.stage == "embedding"));
    }
}

#[test]
fn forced_low_dimension_warns() {
    let sim = gen_model(&SimSpec::new(SimModel::I, 120, 30, 50, 8)).unwrap();
    let mut cfg = PipelineConfig::new(Method::FdSvmHigh);
    cfg.fermat.d_hat = Some(3);
    cfg.target_dim = Some(TargetDim::Fixed(1));
    let out = classify_pipeline(&sim.dataset, &cfg).unwrap();
    assert_eq!(out.diagnostics.p, Some(1));
    assert!(out.diagnostics.warnings.iter().any(|w| w.contains("below the estimated intrinsic dimension")));
}

#[test]
fn fd_wknn_beats_naive_on_spirals() {
    let sim = gen_model(&SimSpec::new(SimModel::I, 300, 60, 100, 1)).unwrap();
    let truth = &sim.truth.labels[60..];
    let fd = classify_pipeline(&sim.dataset, &PipelineConfig::new(Method::FdWknn)).unwrap();
    let naive = classify_pipeline(&sim.dataset, &PipelineConfig::new(Method::NaiveKnn)).unwrap();
    let sel = fd.diagnostics.sigma.as_ref().unwrap();
    assert!(sel.accuracies.len() == 15 && !sel.degenerate);
    assert!(accuracy(&fd.predictions, truth) > accuracy(&naive.predictions, truth));
}

#[test]
fn stage_errors_are_attributed() {
    let c = DiscreteCurve::from_parts("short", vec![0.0, 0.5, 1.0], vec![1.0, 2.0, 3.0], None).unwrap();
    let data = Dataset::new(vec![c.clone(), c], vec![Some(0), None], 2).unwrap();
    let err = classify_pipeline(&data, &PipelineConfig::new(Method::FdWknn)).unwrap_err();
    match err {
        Error::Stage { stage, .. } => assert_eq!(stage, "smoothing"),
        other => panic!("unexpected error {other}"),
    }
    let sim = gen_model(&SimSpec::new(SimModel::I, 30, 0, 30, 2)).unwrap();
    let err = classify_pipeline(&sim.dataset, &PipelineConfig::new(Method::FdWknn)).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "input", .. }));
}
