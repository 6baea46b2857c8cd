#[path = "../examples/fit_model.rs"]
mod fit_model;
#[path = "../examples/geary_diagnostics.rs"]
mod geary_diagnostics;
#[path = "../examples/mc_study.rs"]
mod mc_study;
#[path = "../examples/model_selection.rs"]
mod model_selection;
#[path = "../examples/parameter_recovery.rs"]
mod parameter_recovery;
#[path = "../examples/sar_pipeline.rs"]
mod sar_pipeline;
#[path = "../examples/simulate_field.rs"]
mod simulate_field;
#[path = "../examples/weight_matrices.rs"]
mod weight_matrices;

use spatial_garch::ModelKind;

#[test]
fn weight_matrices_example() {
    let (w1, w2) = weight_matrices::run_example().unwrap();
    assert_eq!(w1.n(), 225);
    assert!(w1.triangular_order().is_some() && w2.triangular_order().is_some());
}

#[test]
fn simulate_field_example() {
    let fields = simulate_field::run_example().unwrap();
    assert_eq!(fields.len(), 4);
    assert!(fields
        .iter()
        .all(|f| f.y.len() == 225 && f.y.iter().all(|v| v.is_finite())));
}

#[test]
fn fit_model_example() {
    let f = fit_model::run_example().unwrap();
    assert_eq!(f.kind(), ModelKind::Egarch);
    assert!(f.loglik.is_finite());
}

#[test]
fn model_selection_example() {
    let report = model_selection::run_example().unwrap();
    assert_eq!(report.outcomes.len(), 4);
    assert!(report.fit_for(report.chosen).is_some());
}

#[test]
fn mc_study_example() {
    let study = mc_study::run_example(4).unwrap();
    assert_eq!(study.cells.len(), 16);
    for m in ModelKind::ALL {
        let total: f64 = ModelKind::ALL
            .iter()
            .map(|&k| study.cell(m, k).unwrap().selection_pct)
            .sum();
        assert!((total - 100.0).abs() < 1e-9);
    }
}

#[test]
fn parameter_recovery_example() {
    let rec = parameter_recovery::run_example(4).unwrap();
    assert_eq!(rec.summaries.len(), 4);
}

#[test]
fn geary_diagnostics_example() {
    let (c_noise, c_sq) = geary_diagnostics::run_example().unwrap();
    assert!(c_noise > 0.0 && c_sq > 0.0);
}

#[test]
fn sar_pipeline_example() {
    let report = sar_pipeline::run_example().unwrap();
    assert_eq!(report.n, 225);
    assert!(report.summary.iter().any(|r| r.model == report.chosen_by_bic));
}
