mod common;

use spatial_garch::simulate::simulate_replication;
use spatial_garch::{ErrorDist, ModelSpec, ParamVector, SimConfig, WeightMatrix};

const SIDE: usize = 6;
const N_REP: u64 = 2000;

/// Row-standardised rook weights on a `SIDE x SIDE` torus.
fn torus() -> WeightMatrix {
    let idx = |r: usize, c: usize| (r % SIDE) * SIDE + (c % SIDE);
    let mut trip = Vec::new();
    for r in 0..SIDE {
        for c in 0..SIDE {
            let i = idx(r, c);
            for j in [idx(r + 1, c), idx(r + SIDE - 1, c), idx(r, c + 1), idx(r, c + SIDE - 1)] {
                trip.push((i, j, 0.25));
            }
        }
    }
    WeightMatrix::from_triplets(SIDE * SIDE, trip).unwrap()
}

/// Marginal of `Y` at a corner-ish site vs a central one, taken from
/// disjoint replication batches so the two samples are independent.
fn marginals_agree(spec: ModelSpec, params: ParamVector) {
    let w = torus();
    let cfg = SimConfig::new(spec, params, w.clone(), w, 2024).unwrap();
    let (a, b) = (0, SIDE * SIDE / 2 + SIDE / 2);
    let first: Vec<f64> = (0..N_REP)
        .map(|r| simulate_replication(&cfg, r).unwrap().y[a])
        .collect();
    let second: Vec<f64> = (N_REP..2 * N_REP)
        .map(|r| simulate_replication(&cfg, r).unwrap().y[b])
        .collect();
    let p = common::ks_two_sample(&first, &second);
    assert!(p > 0.01, "{}: KS p-value {p}", spec.kind);
}

#[test]
fn spgarch_marginal_is_site_independent_on_a_torus() {
    let spec = ModelSpec::spgarch()
        .with_error_dist(ErrorDist::TruncatedNormal { bound: 2.5 })
        .unwrap();
    marginals_agree(spec, ParamVector::new(0.2, 0.3, 1.0).unwrap());
}

#[test]
fn egarch_marginal_is_site_independent_on_a_torus() {
    marginals_agree(
        ModelSpec::egarch(0.5, 0.2).unwrap(),
        ParamVector::new(0.4, 0.3, 0.5).unwrap(),
    );
}

#[test]
fn loggarch_marginal_is_site_independent_on_a_torus() {
    marginals_agree(
        ModelSpec::loggarch(2.0).unwrap(),
        ParamVector::new(0.2, 0.4, 0.5).unwrap(),
    );
}

#[test]
fn hgarch_marginal_is_site_independent_on_a_torus() {
    marginals_agree(ModelSpec::hgarch(), ParamVector::new(0.3, 0.3, 0.5).unwrap());
}
