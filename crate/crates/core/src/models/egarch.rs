//! Spatial E-GARCH: `f = log`, `g(eps) = theta eps + zeta (|eps| - E|eps|)`.

use crate::error::{Error, Result};
use crate::models::{exp_checked, ModelSpec, ParamVector, SpatialDesign};

/// Damping of the general-case fixed-point inversion.
pub const DAMPING: f64 = 0.5;
pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const FIXED_POINT_MAX_ITER: usize = 500;
/// Consecutive iterations without a smaller step before the inversion is
/// declared divergent.
pub const MAX_STALLS: usize = 20;

pub fn g(eps: f64, spec: &ModelSpec) -> f64 {
    spec.theta * eps + spec.zeta * (eps.abs() - spec.mean_abs_eps())
}

/// `g'(eps) = theta + zeta sign(eps)`; at `eps = 0` the sign is taken as 0.
pub fn g_prime(eps: f64, spec: &ModelSpec) -> f64 {
    let sign = if eps > 0.0 {
        1.0
    } else if eps < 0.0 {
        -1.0
    } else {
        0.0
    };
    spec.theta + spec.zeta * sign
}

fn log_h(eps: &[f64], params: &ParamVector, design: &SpatialDesign, spec: &ModelSpec) -> Result<Vec<f64>> {
    let gv: Vec<f64> = eps.iter().map(|&e| g(e, spec)).collect();
    let mut rhs = design.w1_star().mul_vec(&gv);
    for r in &mut rhs {
        *r = params.alpha + params.rho * *r;
    }
    design.solve(0.0, None, params.lambda, rhs)
}

/// `log h = (I - lambda W2*)^{-1} (alpha + rho W1* G(eps))`.
pub fn solve_h(eps: &[f64], params: &ParamVector, design: &SpatialDesign, spec: &ModelSpec) -> Result<Vec<f64>> {
    design.check_len(eps.len())?;
    exp_checked(log_h(eps, params, design, spec)?)
}

/// Inverts `y = sqrt(h(eps)) eps`.
///
/// With a triangular order each location closes in one scalar step since
/// `h_i` only depends on earlier locations. Otherwise a damped fixed point
/// `eps <- y exp(-log h(eps) / 2)` is iterated.
pub fn recover(
    y: &[f64],
    params: &ParamVector,
    design: &SpatialDesign,
    spec: &ModelSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    design.check_len(y.len())?;
    let n = y.len();
    if let Some(order) = design.triangular_order() {
        let (w1, w2) = (design.w1_star(), design.w2_star());
        let mut x = vec![0.0; n];
        let mut gv = vec![0.0; n];
        let mut eps = vec![0.0; n];
        for &i in order {
            let mut s = params.alpha;
            for (j, w) in w1.row(i) {
                s += params.rho * w * gv[j];
            }
            for (j, w) in w2.row(i) {
                s += params.lambda * w * x[j];
            }
            x[i] = s;
            eps[i] = y[i] * (-0.5 * s).exp();
            gv[i] = g(eps[i], spec);
        }
        let h = exp_checked(x)?;
        return Ok((eps, h));
    }

    let lu = design.factor(0.0, None, params.lambda)?;
    let solve_x = |eps: &[f64]| -> Vec<f64> {
        let gv: Vec<f64> = eps.iter().map(|&e| g(e, spec)).collect();
        let mut rhs = design.w1_star().mul_vec(&gv);
        for r in &mut rhs {
            *r = params.alpha + params.rho * *r;
        }
        lu.solve(&rhs)
    };
    let mut eps: Vec<f64> = {
        let x0 = lu.solve(&vec![params.alpha; n]);
        y.iter().zip(&x0).map(|(y, x)| y * (-0.5 * x).exp()).collect()
    };
    let mut step = f64::INFINITY;
    let mut stalls = 0;
    let mut iterations = 0;
    while iterations < FIXED_POINT_MAX_ITER {
        iterations += 1;
        let x = solve_x(&eps);
        let previous = step;
        step = 0.0;
        for i in 0..n {
            let target = y[i] * (-0.5 * x[i]).exp();
            step = step.max((target - eps[i]).abs());
            eps[i] += DAMPING * (target - eps[i]);
        }
        if !step.is_finite() {
            return Err(Error::NumericalOverflow("E-GARCH inversion diverged"));
        }
        if step < FIXED_POINT_TOL {
            let h = exp_checked(solve_x(&eps))?;
            let eps = y.iter().zip(&h).map(|(y, h)| y / h.sqrt()).collect();
            return Ok((eps, h));
        }
        stalls = if step < previous { 0 } else { stalls + 1 };
        if stalls >= MAX_STALLS {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations,
        last_step: step,
    })
}

/// `log|det(I - W2 + W1 diag(eps g'(eps) / 2))| - log|det(I - W2)|`.
pub fn log_det_ratio(eps: &[f64], params: &ParamVector, design: &SpatialDesign, spec: &ModelSpec) -> Result<f64> {
    let d: Vec<f64> = eps.iter().map(|&e| 0.5 * e * g_prime(e, spec)).collect();
    Ok(design.log_abs_det(-params.rho, Some(&d), params.lambda)? - design.log_abs_det(0.0, None, params.lambda)?)
}

/// Dense `dh_i / d eps_j = c_ij g'(eps_j) h_i`, `(c_ij) = (I - W2)^{-1} W1`.
pub fn dh_deps(
    eps: &[f64],
    h: &[f64],
    params: &ParamVector,
    design: &SpatialDesign,
    spec: &ModelSpec,
) -> Result<Vec<f64>> {
    let gp: Vec<f64> = eps.iter().map(|&e| g_prime(e, spec)).collect();
    super::log_link_dh_deps(h, &gp, 0.0, params, design)
}
