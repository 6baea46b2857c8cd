//! Spatial log-GARCH: `f = log`, `g(eps) = log(|eps|^b)`.

use crate::error::{Error, Result};
use crate::models::{exp_checked, log_abs_nonzero, ModelSpec, ParamVector, SpatialDesign};

pub fn solve_h(eps: &[f64], params: &ParamVector, design: &SpatialDesign, spec: &ModelSpec) -> Result<Vec<f64>> {
    design.check_len(eps.len())?;
    let la = log_abs_nonzero(eps, |index| Error::ZeroInnovation { index })?;
    let mut rhs = design.w1_star().mul_vec(&la);
    for r in &mut rhs {
        *r = params.alpha + params.rho * spec.b * *r;
    }
    exp_checked(design.solve(0.0, None, params.lambda, rhs)?)
}

/// Closed form `X = (I + b/2 W1 - W2)^{-1} (alpha + b W1 log|y|)`.
pub fn recover(
    y: &[f64],
    params: &ParamVector,
    design: &SpatialDesign,
    spec: &ModelSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    design.check_len(y.len())?;
    let ly = log_abs_nonzero(y, |index| Error::ZeroObservation { index })?;
    let mut rhs = design.w1_star().mul_vec(&ly);
    for r in &mut rhs {
        *r = params.alpha + params.rho * spec.b * *r;
    }
    let x = design.solve(-0.5 * spec.b * params.rho, None, params.lambda, rhs)?;
    let eps = y.iter().zip(&x).map(|(y, x)| y * (-0.5 * x).exp()).collect();
    Ok((eps, exp_checked(x)?))
}

/// `log|det(I + b/2 W1 - W2)| - log|det(I - W2)|`.
pub fn log_det_ratio(params: &ParamVector, design: &SpatialDesign, spec: &ModelSpec) -> Result<f64> {
    Ok(design.log_abs_det(-0.5 * spec.b * params.rho, None, params.lambda)?
        - design.log_abs_det(0.0, None, params.lambda)?)
}

/// Dense `dh_i / d eps_j = c_ij (b / eps_j) h_i`.
pub fn dh_deps(
    eps: &[f64],
    h: &[f64],
    params: &ParamVector,
    design: &SpatialDesign,
    spec: &ModelSpec,
) -> Result<Vec<f64>> {
    let gp: Vec<f64> = eps.iter().map(|&e| spec.b / e).collect();
    super::log_link_dh_deps(h, &gp, 0.0, params, design)
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
    fn two_site_hand_recursion() {
        // X2 = 1 + 0.5 * 2 * log|2| + 0.4 * 1
        let s = ModelSpec::loggarch(2.0).unwrap();
        let p = ParamVector::new(0.5, 0.4, 1.0).unwrap();
        let h = solve_h(&[2.0, -0.3], &p, &two_site(), &s).unwrap();
        assert!((h[0].ln() - 1.0).abs() < 1e-12);
        assert!((h[1].ln() - (1.4 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn zero_innovation_rejected() {
        let s = ModelSpec::loggarch(2.0).unwrap();
        let p = ParamVector::new(0.5, 0.4, 1.0).unwrap();
        assert!(matches!(
            solve_h(&[0.0, 1.0], &p, &two_site(), &s),
            Err(Error::ZeroInnovation { index: 0 })
        ));
        assert!(matches!(
            recover(&[1.0, 0.0], &p, &two_site(), &s),
            Err(Error::ZeroObservation { index: 1 })
        ));
    }

    #[test]
    fn closed_form_recovery_matches_general_path() {
        let s = ModelSpec::loggarch(1.5).unwrap();
        let p = ParamVector::new(0.5, 0.4, 1.0).unwrap();
        let eps = [1.3, -0.4];
        let h = solve_h(&eps, &p, &two_site(), &s).unwrap();
        let y: Vec<f64> = h.iter().zip(&eps).map(|(h, e)| h.sqrt() * e).collect();
        for design in [two_site(), two_site().without_fast_path()] {
            let (e, _) = recover(&y, &p, &design, &s).unwrap();
            assert!((e[0] - eps[0]).abs() < 1e-12 && (e[1] - eps[1]).abs() < 1e-12);
        }
    }
}
