//! Geary's C with permutation p-values, and the odd-moment symmetry test
//! for simulated fields.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::simulate::{simulate_replication, SimConfig};
use crate::weights::WeightMatrix;

pub const MIN_PERMUTATIONS: usize = 99;

/// `C = (n - 1) sum_ij w_ij (x_i - x_j)^2 / (2 S0 sum_i (x_i - xbar)^2)`
/// with `S0 = sum_ij w_ij`, on the raw weights.
pub fn gearys_c(x: &[f64], w: &WeightMatrix) -> Result<f64> {
    Ok(geary_numerator(x, w) * geary_scale(x, w)?)
}

/// `(n - 1) / (2 S0 sum_i (x_i - xbar)^2)`, which permutations of `x` leave
/// unchanged.
fn geary_scale(x: &[f64], w: &WeightMatrix) -> Result<f64> {
    let n = x.len();
    if w.n() != n {
        return Err(Error::DimensionMismatch {
            expected: w.n(),
            actual: n,
        });
    }
    if n < 3 {
        return Err(Error::InvalidInput(format!("Geary's C needs n >= 3, got {n}")));
    }
    let s0: f64 = w.iter().map(|(_, _, v)| v).sum();
    if !(s0 > 0.0) {
        return Err(Error::EmptyWeights);
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let ss: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if !(ss > 0.0) {
        return Err(Error::ConstantInput);
    }
    Ok((n - 1) as f64 / (2.0 * s0 * ss))
}

fn geary_numerator(x: &[f64], w: &WeightMatrix) -> f64 {
    w.iter().map(|(i, j, v)| v * (x[i] - x[j]).powi(2)).sum()
}

/// Two-sided permutation test of `C = 1`:
/// `p = (1 + #{|C_perm - 1| >= |C_obs - 1|}) / (n_perm + 1)`.
/// Permutation `k` draws from its own stream, so the result does not
/// depend on the thread count.
pub fn permutation_pvalue(x: &[f64], w: &WeightMatrix, n_perm: usize, seed: u64) -> Result<f64> {
    if n_perm < MIN_PERMUTATIONS {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_PERMUTATIONS} permutations, got {n_perm}"
        )));
    }
    let scale = geary_scale(x, w)?;
    let observed = (geary_numerator(x, w) * scale - 1.0).abs();
    // ties with the observed value count as extreme despite rounding
    let tol = 1e-12 * (1.0 + observed);
    let extreme = (0..n_perm as u64)
        .into_par_iter()
        .filter(|&k| {
            let mut perm = x.to_vec();
            perm.shuffle(&mut rng::stream(seed, Purpose::Permutation, 0, k));
            (geary_numerator(&perm, w) * scale - 1.0).abs() >= observed - tol
        })
        .count();
    Ok((1 + extreme) as f64 / (n_perm + 1) as f64)
}

/// Per-site `z = mean(Y^order) / (sd(Y^order) / sqrt(m))` over `m`
/// replicated fields.
pub fn odd_moment_test(fields: &[Vec<f64>], order: u32) -> Result<Vec<f64>> {
    if order != 1 && order != 3 {
        return Err(Error::InvalidInput(format!("order must be 1 or 3, got {order}")));
    }
    let m = fields.len();
    if m < 2 {
        return Err(Error::InvalidInput("need at least two replications".into()));
    }
    let n = fields[0].len();
    if let Some(f) = fields.iter().find(|f| f.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: f.len(),
        });
    }
    Ok((0..n)
        .map(|i| {
            let vals: Vec<f64> = fields.iter().map(|f| f[i].powi(order as i32)).collect();
            let mean = vals.iter().sum::<f64>() / m as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            if var > 0.0 {
                mean / (var / m as f64).sqrt()
            } else {
                0.0
            }
        })
        .collect())
}

/// Simulates `n_rep` fields from `cfg` and applies [`odd_moment_test`].
/// Only meaningful when the volatility is even in `eps` and the errors are
/// sign-symmetric; other configurations are rejected.
pub fn odd_moment_study(cfg: &SimConfig, n_rep: usize, order: u32) -> Result<Vec<f64>> {
    if !cfg.spec.has_even_volatility() {
        return Err(Error::Precondition(format!(
            "{} with theta != 0 has volatility that is not even in eps",
            cfg.spec.kind
        )));
    }
    if !cfg.spec.error_dist.is_sign_symmetric() {
        return Err(Error::Precondition("error distribution is not sign-symmetric".into()));
    }
    let fields = (0..n_rep as u64)
        .into_par_iter()
        .map(|r| simulate_replication(cfg, r).map(|f| f.y))
        .collect::<Result<Vec<_>>>()?;
    odd_moment_test(&fields, order)
}

/// Two-sided critical value for `n_tests` simultaneous z-tests at family
/// level `alpha`.
pub fn bonferroni_bound(alpha: f64, n_tests: usize) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(1.0 - alpha / (2.0 * n_tests as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Contiguity;

    #[test]
    fn checkerboard_value() {
        let (r, c) = (6, 6);
        let w = WeightMatrix::grid_contiguity(r, c, Contiguity::Rook).unwrap();
        let x: Vec<f64> = (0..r * c)
            .map(|k| if (k / c + k % c) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let n = (r * c) as f64;
        assert!((gearys_c(&x, &w).unwrap() - 2.0 * (n - 1.0) / n).abs() < 1e-14);
        assert!(permutation_pvalue(&x, &w, 999, 3).unwrap() <= 0.01);
    }

    #[test]
    fn smooth_line_is_near_zero() {
        let n = 50;
        let w = WeightMatrix::from_triplets(n, (0..n - 1).flat_map(|i| [(i, i + 1, 1.0), (i + 1, i, 1.0)])).unwrap();
        let x: Vec<f64> = (0..n).map(|i| 5.0 + 1e-6 * i as f64).collect();
        assert!(gearys_c(&x, &w).unwrap() < 0.01);
    }

    #[test]
    fn errors() {
        let w = WeightMatrix::grid_contiguity(2, 2, Contiguity::Rook).unwrap();
        assert!(matches!(gearys_c(&[1.0; 4], &w), Err(Error::ConstantInput)));
        assert!(matches!(
            gearys_c(&[1.0, 2.0, 3.0, 4.0], &WeightMatrix::zeros(4)),
            Err(Error::EmptyWeights)
        ));
        assert!(permutation_pvalue(&[1.0, 2.0, 3.0, 4.0], &w, 98, 0).is_err());
        assert!(odd_moment_test(&[vec![1.0], vec![2.0]], 2).is_err());
    }

    #[test]
    fn pvalue_is_deterministic() {
        let w = WeightMatrix::grid_contiguity(5, 5, Contiguity::Queen).unwrap();
        let x: Vec<f64> = (0..25).map(|i| ((i * 37) % 11) as f64).collect();
        let p = permutation_pvalue(&x, &w, 99, 7).unwrap();
        assert_eq!(p, permutation_pvalue(&x, &w, 99, 7).unwrap());
        assert!(p > 0.0 && p <= 1.0);
    }

    #[test]
    fn bonferroni_value() {
        // 1% over one test: the two-sided 99% quantile
        assert!((bonferroni_bound(0.01, 1) - 2.5758293035489).abs() < 1e-9);
    }
}
