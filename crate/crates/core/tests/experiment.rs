use lorentz_core::isometry::{
    main_theorem_experiment, random_isometry_sample, ExperimentOptions, IsometryAction, IsometrySample,
};
use lorentz_core::metric_family::{check_hypothesis_h, HypothesisOptions, Warp};
use lorentz_core::{Fiber, HypothesisCertificate, MetricFamily};

fn certified(family: &MetricFamily, t0: f64, c: f64) -> HypothesisCertificate {
    check_hypothesis_h(family, t0, c, &HypothesisOptions::default()).unwrap().certificate.unwrap()
}

#[test]
fn de_sitter_pipeline_finds_witnesses() {
    let f = MetricFamily::de_sitter(1);
    let cert = certified(&f, 1.0, 1f64.tanh());
    let sample = random_isometry_sample(&f, 12, 5.0, 42).unwrap();
    let r = main_theorem_experiment(&f, &cert, 1.5, 0.3, &sample, &ExperimentOptions::default()).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.dia_t2.lower * 0.98 > 2.0 * r.n_cover as f64 * r.c_prime);
    assert!(r.t2 > r.t1);
    assert_eq!(r.isometries.len(), 12);
    for o in &r.isometries {
        let w = o.witness.as_ref().unwrap();
        let img = o.image.as_ref().unwrap();
        assert!(w.t.abs() <= r.t2 && img.t.abs() <= r.t2 + 1e-9);
    }
}

#[test]
fn identity_sample_passes() {
    let f = MetricFamily::de_sitter(1);
    let cert = certified(&f, 1.0, 1f64.tanh());
    let sample = vec![IsometrySample { id: 0, action: IsometryAction::identity() }];
    let r = main_theorem_experiment(&f, &cert, 1.5, 0.3, &sample, &ExperimentOptions::default()).unwrap();
    assert!(r.passed);
}

#[test]
fn torus_translations_preserve_slabs() {
    let f = MetricFamily::warped(Warp::Cosh, Fiber::Torus { dim: 1 }).unwrap();
    let cert = certified(&f, 1.0, 1f64.tanh());
    let sample = random_isometry_sample(&f, 5, 0.0, 9).unwrap();
    let r = main_theorem_experiment(&f, &cert, 1.5, 0.3, &sample, &ExperimentOptions::default()).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn precondition_on_t1() {
    let f = MetricFamily::de_sitter(1);
    let cert = certified(&f, 1.0, 1f64.tanh());
    assert!(main_theorem_experiment(&f, &cert, 1.2, 0.3, &[], &ExperimentOptions::default()).is_err());
}
