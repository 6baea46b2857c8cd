mod common;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use spatial_garch::estimate::standard_errors;
use spatial_garch::likelihood::try_log_likelihood;
use spatial_garch::linalg::SparseLu;
use spatial_garch::models::solve_h;
use spatial_garch::rng::draw_innovations;
use spatial_garch::sar::{fit_sar, sar_field};
use spatial_garch::select::{directed_lattice, select_model, Criterion};
use spatial_garch::simulate::simulate_replication;
use spatial_garch::{
    fit, Contiguity, ErrorDist, FitOptions, ModelKind, ModelSpec, ParamVector, ShapeEstimation, SimConfig,
    SpatialDesign, WeightMatrix,
};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn two_site() -> SpatialDesign {
    let w = WeightMatrix::from_triplets(2, [(1, 0, 1.0)]).unwrap();
    SpatialDesign::new(w.clone(), w).unwrap()
}

fn no_se() -> FitOptions {
    FitOptions {
        std_errors: false,
        ..FitOptions::default()
    }
}

fn iid_field(n: usize, alpha: f64, seed: u64) -> Vec<f64> {
    draw_innovations(n, &ErrorDist::StandardNormal, &mut common::rng(seed, 0))
        .into_iter()
        .map(|e| alpha.sqrt() * e)
        .collect()
}

#[test]
fn two_site_spgarch_loglik_by_hand() {
    let p = ParamVector::new(0.5, 0.4, 1.0).unwrap();
    let y = [2.0, 3.4f64.sqrt()];
    // eps = (2, 1), h = (1, 3.4)
    let expect = -LN_2PI - 0.5 * (4.0 + 1.0) - 0.5 * 3.4f64.ln();
    let got = try_log_likelihood(&y, &p, &two_site(), &ModelSpec::spgarch()).unwrap();
    assert_relative_eq!(got, expect, epsilon = 1e-12);
}

#[test]
fn egarch_without_lambda_is_a_product_of_site_factors() {
    let design = directed_lattice(5, 5).unwrap();
    let spec = ModelSpec::egarch(0.3, 0.4).unwrap();
    let p = ParamVector::new(0.7, 0.0, 0.8).unwrap();
    let eps = draw_innovations(25, &ErrorDist::StandardNormal, &mut common::rng(5, 0));
    let h = solve_h(&eps, &p, &design, &spec).unwrap();
    let g = |e: f64| spec.theta * e + spec.zeta * (e.abs() - spec.mean_abs_eps());
    for (i, &hi) in h.iter().enumerate() {
        let product: f64 = design
            .w1_star()
            .row(i)
            .map(|(j, w)| (p.rho * w * g(eps[j])).exp())
            .product();
        assert_relative_eq!(hi, p.alpha.exp() * product, max_relative = 1e-12);
    }
}

#[test]
fn alpha_standard_error_matches_iid_closed_form() {
    let design = directed_lattice(20, 20).unwrap();
    let y = iid_field(400, 1.7, 9);
    let alpha_hat = y.iter().map(|v| v * v).sum::<f64>() / 400.0;
    let p = ParamVector::new(0.0, 0.0, alpha_hat).unwrap();
    let se = standard_errors(&p, None, &y, &ModelSpec::spgarch(), &design, ShapeEstimation::Fixed);
    assert!(se.values[0].is_none() && se.values[1].is_none());
    assert_relative_eq!(
        se.values[2].unwrap(),
        alpha_hat * (2.0f64 / 400.0).sqrt(),
        max_relative = 1e-4
    );
}

#[test]
fn banded_lu_matches_dense_lu() {
    let mut r = common::rng(17, 0);
    for (rows, cols) in [(3, 3), (6, 4), (9, 9)] {
        let w = WeightMatrix::grid_contiguity(rows, cols, Contiguity::Queen).unwrap();
        let n = w.n();
        let mut trip: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, r.random_range(1.0..3.0))).collect();
        trip.extend(w.iter().map(|(i, j, _)| (i, j, r.random_range(-0.5..0.5))));
        let lu = SparseLu::factor(n, &trip).unwrap();
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for &(i, j, v) in &trip {
            dense[(i, j)] += v;
        }
        let det = dense.clone().lu().determinant();
        assert_relative_eq!(lu.log_abs_det(), det.abs().ln(), max_relative = 1e-10);
        assert_eq!(lu.det_sign(), det.signum());
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = lu.solve(&b);
        let want = dense.lu().solve(&DVector::from_vec(b)).unwrap();
        for i in 0..n {
            assert_relative_eq!(x[i], want[i], epsilon = 1e-10);
        }
    }
}

#[test]
fn independent_data_gives_small_spatial_estimates() {
    let design = directed_lattice(15, 15).unwrap();
    let mut failures = Vec::new();
    for kind in ModelKind::ALL {
        let spec = ModelSpec::default_for(kind);
        let cfg = SimConfig {
            spec,
            params: ParamVector::new(0.0, 0.0, 1.0).unwrap(),
            design: design.clone(),
            seed: 41,
            max_rejections: 100,
        };
        let (mut rho, mut lambda) = (Vec::new(), Vec::new());
        for rep in 0..100 {
            let y = simulate_replication(&cfg, rep).unwrap().y;
            let f = fit(&y, &spec, &design, &no_se()).unwrap();
            rho.push(f.params_hat.rho);
            lambda.push(f.params_hat.lambda);
        }
        let (mr, ml) = (common::median(&rho), common::median(&lambda));
        println!("{kind}: median rho_hat {mr:.4}, lambda_hat {ml:.4}");
        if mr > 0.05 || ml > 0.05 {
            failures.push(format!("{kind} ({mr:.3}, {ml:.3})"));
        }
    }
    assert!(
        failures.is_empty(),
        "median estimates above 0.05: {}",
        failures.join(", ")
    );
}

#[test]
fn fit_reports_the_likelihood_at_its_estimate_and_beats_the_truth() {
    let design = directed_lattice(12, 12).unwrap();
    let truth = ParamVector::new(0.5, 0.4, 1.0).unwrap();
    for kind in ModelKind::ALL {
        let spec = ModelSpec::default_for(kind);
        let cfg = SimConfig {
            spec,
            params: truth,
            design: design.clone(),
            seed: 31,
            max_rejections: 100,
        };
        for rep in 0..3 {
            let y = simulate_replication(&cfg, rep).unwrap().y;
            let f = fit(&y, &spec, &design, &no_se()).unwrap();
            let again = try_log_likelihood(&y, &f.params_hat, &design, &f.model).unwrap();
            assert_relative_eq!(f.loglik, again, epsilon = 1e-9);
            let at_truth = try_log_likelihood(&y, &truth, &design, &spec).unwrap();
            assert!(f.loglik >= at_truth - 1e-6, "{kind}: {} < {at_truth}", f.loglik);
        }
    }
}

#[test]
fn all_models_fit_independent_data_equally_well() {
    let design = directed_lattice(15, 15).unwrap();
    let specs: Vec<ModelSpec> = ModelKind::ALL.iter().map(|&k| ModelSpec::default_for(k)).collect();
    let mut per_model = vec![Vec::new(); 4];
    for rep in 0..100 {
        let y = iid_field(225, 2.0, 200 + rep);
        let report = select_model(&y, &design, &specs, Criterion::MaxLoglik, &no_se()).unwrap();
        for (k, o) in report.outcomes.iter().enumerate() {
            per_model[k].push(o.fit.as_ref().unwrap().loglik);
        }
    }
    let medians: Vec<f64> = per_model.iter().map(|v| common::median(v)).collect();
    let spread = medians.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - medians.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread <= 2.0, "median logliks {medians:?}");
}

#[test]
fn sar_recovers_mean_and_dependence() {
    let w = WeightMatrix::grid_contiguity(15, 15, Contiguity::Rook)
        .unwrap()
        .row_standardize();
    let mut mu = Vec::new();
    let mut gamma = Vec::new();
    for rep in 0..50 {
        let u = draw_innovations(225, &ErrorDist::StandardNormal, &mut common::rng(300, rep));
        let y = sar_field(0.2, 0.7, &w, &u).unwrap();
        let f = fit_sar(&y, &w).unwrap();
        mu.push(f.mu);
        gamma.push(f.gamma);
    }
    let (m, g) = (common::median(&mu), common::median(&gamma));
    assert!((m - 0.2).abs() <= 0.05, "median mu {m}");
    assert!((g - 0.7).abs() <= 0.05, "median gamma {g}");
}

#[test]
fn bic_and_loglik_agree_when_parameter_counts_match() {
    let design = directed_lattice(10, 10).unwrap();
    let specs: Vec<ModelSpec> = ModelKind::ALL.iter().map(|&k| ModelSpec::default_for(k)).collect();
    for kind in ModelKind::ALL {
        let cfg = SimConfig {
            spec: ModelSpec::default_for(kind),
            params: ParamVector::new(0.5, 0.4, 1.0).unwrap(),
            design: design.clone(),
            seed: 77,
            max_rejections: 100,
        };
        let y = simulate_replication(&cfg, 0).unwrap().y;
        let by_ll = select_model(&y, &design, &specs, Criterion::MaxLoglik, &no_se()).unwrap();
        let by_bic = select_model(&y, &design, &specs, Criterion::Bic, &no_se()).unwrap();
        assert_eq!(by_ll.chosen, by_bic.chosen);
    }
}
