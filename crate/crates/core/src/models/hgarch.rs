//! Hybrid spatial GARCH: `log h = alpha + W1 log(Y^2) + W2 log h`.
//!
//! Using `log Y^2 = X + log eps^2`, the forward solve is
//! `X = (I - W1 - W2)^{-1} (alpha + W1 log eps^2)`.

use crate::error::{Error, Result};
use crate::models::{exp_checked, log_abs_nonzero, ParamVector, SpatialDesign};

pub fn solve_h(eps: &[f64], params: &ParamVector, design: &SpatialDesign) -> Result<Vec<f64>> {
    design.check_len(eps.len())?;
    let le2: Vec<f64> = log_abs_nonzero(eps, |index| Error::ZeroInnovation { index })?
        .into_iter()
        .map(|v| 2.0 * v)
        .collect();
    let mut rhs = design.w1_star().mul_vec(&le2);
    for r in &mut rhs {
        *r = params.alpha + params.rho * *r;
    }
    exp_checked(design.solve(params.rho, None, params.lambda, rhs)?)
}

/// `X = (I - W2)^{-1} (alpha + W1 log y^2)`, `eps = y exp(-X/2)`.
pub fn recover(y: &[f64], params: &ParamVector, design: &SpatialDesign) -> Result<(Vec<f64>, Vec<f64>)> {
    design.check_len(y.len())?;
    let ly2: Vec<f64> = log_abs_nonzero(y, |index| Error::ZeroObservation { index })?
        .into_iter()
        .map(|v| 2.0 * v)
        .collect();
    let mut rhs = design.w1_star().mul_vec(&ly2);
    for r in &mut rhs {
        *r = params.alpha + params.rho * *r;
    }
    let x = design.solve(0.0, None, params.lambda, rhs)?;
    let eps = y.iter().zip(&x).map(|(y, x)| y * (-0.5 * x).exp()).collect();
    Ok((eps, exp_checked(x)?))
}

/// `log|det(I - W2)| - log|det(I - W1 - W2)|`.
pub fn log_det_ratio(params: &ParamVector, design: &SpatialDesign) -> Result<f64> {
    Ok(design.log_abs_det(0.0, None, params.lambda)? - design.log_abs_det(params.rho, None, params.lambda)?)
}

/// Dense `dh_i / d eps_j = 2 d_ij h_i / eps_j`, `(d_ij) = (I - W1 - W2)^{-1} W1`.
pub fn dh_deps(eps: &[f64], h: &[f64], params: &ParamVector, design: &SpatialDesign) -> Result<Vec<f64>> {
    let gp: Vec<f64> = eps.iter().map(|&e| 2.0 / e).collect();
    super::log_link_dh_deps(h, &gp, params.rho, params, design)
}
