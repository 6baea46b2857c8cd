//! Spatial GARCH: `f(x) = x`, `h = alpha + W1 Y^(2) + W2 h`.
//!
//! Substituting `Y^(2) = diag(eps^2) h` gives the forward solve
//! `h = (I - W1 diag(eps^2) - W2)^{-1} alpha`.

use crate::error::Result;
use crate::models::{check_positive, ParamVector, SpatialDesign};

pub fn solve_h(eps: &[f64], params: &ParamVector, design: &SpatialDesign) -> Result<Vec<f64>> {
    design.check_len(eps.len())?;
    let eps2: Vec<f64> = eps.iter().map(|e| e * e).collect();
    let h = design.solve(params.rho, Some(&eps2), params.lambda, vec![params.alpha; eps.len()])?;
    check_positive(h)
}

/// `(I - lambda W2*) h = alpha + rho W1* y^2`, then `eps = y / sqrt(h)`.
pub fn recover(y: &[f64], params: &ParamVector, design: &SpatialDesign) -> Result<(Vec<f64>, Vec<f64>)> {
    design.check_len(y.len())?;
    let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
    let mut rhs = design.w1_star().mul_vec(&y2);
    for r in &mut rhs {
        *r = params.alpha + params.rho * *r;
    }
    let h = check_positive(design.solve(0.0, None, params.lambda, rhs)?)?;
    let eps = y.iter().zip(&h).map(|(y, h)| y / h.sqrt()).collect();
    Ok((eps, h))
}

/// `log |det J| - sum(log sqrt h)`
/// `= log|det(I - W2)| - log|det(I - W1 diag(eps^2) - W2)|`.
pub fn log_det_ratio(eps: &[f64], params: &ParamVector, design: &SpatialDesign) -> Result<f64> {
    let eps2: Vec<f64> = eps.iter().map(|e| e * e).collect();
    Ok(design.log_abs_det(0.0, None, params.lambda)? - design.log_abs_det(params.rho, Some(&eps2), params.lambda)?)
}

/// Dense `dh_i / d eps_j` (row-major):
/// `2 eps_j (I - W1 diag(eps^2) - W2)^{-1} (0, .., w_j, .., 0) h`, with
/// `w_j` the `j`-th column of `W1`.
pub fn dh_deps(eps: &[f64], h: &[f64], params: &ParamVector, design: &SpatialDesign) -> Result<Vec<f64>> {
    let n = eps.len();
    let eps2: Vec<f64> = eps.iter().map(|e| e * e).collect();
    let lu = design.factor(params.rho, Some(&eps2), params.lambda)?;
    let columns = super::columns(design.w1_star());
    let mut out = vec![0.0; n * n];
    for (j, col) in columns.iter().enumerate() {
        if col.is_empty() || params.rho == 0.0 {
            continue;
        }
        let mut rhs = vec![0.0; n];
        for &(i, w) in col {
            rhs[i] = 2.0 * eps[j] * params.rho * w * h[j];
        }
        for (i, v) in lu.solve(&rhs).into_iter().enumerate() {
            out[i * n + j] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightMatrix;

    fn two_site() -> SpatialDesign {
        let w = WeightMatrix::from_triplets(2, [(1, 0, 1.0)]).unwrap();
        SpatialDesign::new(w.clone(), w).unwrap()
    }

    #[test]
    fn zero_weights_give_constant_h() {
        let p = ParamVector::new(0.0, 0.0, 1.7).unwrap();
        let h = solve_h(&[0.3, -2.0], &p, &two_site()).unwrap();
        assert_eq!(h, vec![1.7, 1.7]);
    }

    #[test]
    fn two_site_hand_recursion() {
        // h1 = 1, h2 = 1 + 0.5 * 2^2 * 1 + 0.4 * 1 = 3.4
        let p = ParamVector::new(0.5, 0.4, 1.0).unwrap();
        for design in [two_site(), two_site().without_fast_path()] {
            let h = solve_h(&[2.0, 1.0], &p, &design).unwrap();
            assert!((h[0] - 1.0).abs() < 1e-12);
            assert!((h[1] - 3.4).abs() < 1e-12);
        }
    }

    #[test]
    fn two_site_recovery() {
        let p = ParamVector::new(0.5, 0.4, 1.0).unwrap();
        let y = [2.0, 3.4f64.sqrt()];
        let (eps, h) = recover(&y, &p, &two_site()).unwrap();
        assert!((eps[0] - 2.0).abs() < 1e-12 && (eps[1] - 1.0).abs() < 1e-12);
        assert!((h[1] - 3.4).abs() < 1e-12);
    }

    #[test]
    fn non_triangular_negative_h_detected() {
        // symmetric pair with a large rho can push h below zero
        let w = WeightMatrix::from_triplets(2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let design = SpatialDesign::new(w.clone(), w).unwrap();
        let p = ParamVector::new(1.0, 0.0, 1.0).unwrap();
        // A = [[1, -4], [-4, 1]] -> h = (-1/3, -1/3)
        let err = solve_h(&[2.0, 2.0], &p, &design).unwrap_err();
        assert!(matches!(err, crate::Error::NonPositiveH { .. }));
    }
}
