#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use spatial_garch::models::forward_map;
use spatial_garch::rng::{self, Purpose, StreamRng};
use spatial_garch::{ModelKind, ModelSpec, ParamVector, SpatialDesign};

pub fn rng(seed: u64, index: u64) -> StreamRng {
    rng::stream(seed, Purpose::Mean, 0, index)
}

/// Random admissible setup for `kind`: parameters, shape and innovations.
pub fn random_point(kind: ModelKind, n: usize, r: &mut StreamRng) -> (ParamVector, ModelSpec, Vec<f64>) {
    let params = ParamVector::new(
        r.random_range(0.0..0.9),
        r.random_range(0.0..0.9),
        r.random_range(0.2..2.0),
    )
    .unwrap();
    let spec = match kind {
        ModelKind::Egarch => ModelSpec::egarch(r.random_range(-1.0..1.0), r.random_range(0.0..0.5)).unwrap(),
        ModelKind::Loggarch => ModelSpec::loggarch(r.random_range(0.5..3.0)).unwrap(),
        k => ModelSpec::default_for(k),
    };
    let eps = rng::draw_innovations(n, &spec.error_dist, r);
    (params, spec, eps)
}

/// Central-difference Jacobian of the forward map `eps -> y`, with steps
/// proportional to `|eps_j|` below one.
pub fn fd_jacobian(eps: &[f64], params: &ParamVector, design: &SpatialDesign, spec: &ModelSpec) -> DMatrix<f64> {
    let n = eps.len();
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let step = 1e-5 * eps[j].abs().min(1.0);
        let mut plus = eps.to_vec();
        let mut minus = eps.to_vec();
        plus[j] += step;
        minus[j] -= step;
        let yp = forward_map(&plus, params, design, spec).unwrap();
        let ym = forward_map(&minus, params, design, spec).unwrap();
        for i in 0..n {
            jac[(i, j)] = (yp[i] - ym[i]) / (2.0 * step);
        }
    }
    jac
}

pub fn log_abs_det(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant().abs().ln()
}

/// Kolmogorov distribution survival function `P(K > x)`.
fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        s += (-1f64).powf(k - 1.0) * (-2.0 * k * k * x * x).exp();
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample KS test of `x` against Uniform(0, 1); returns the
/// asymptotic p-value.
pub fn ks_uniform(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64 / n - v).max(v - i as f64 / n))
        .fold(0.0f64, f64::max);
    let sqrt_n = n.sqrt();
    kolmogorov_sf((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
}

/// Two-sample KS test; returns the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d)
}

pub fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    spatial_garch::select::quantile_sorted(&s, 0.5)
}
