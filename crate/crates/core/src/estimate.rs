//! Maximum-likelihood estimation of `(rho, lambda, alpha)` and, optionally,
//! the E-GARCH `theta` or the log-GARCH power `b`.
//!
//! The optimiser works on `(rho, lambda, ln alpha[, theta | ln b])` with
//! `rho, lambda` clamped to `[0, inf)`, so estimates can sit exactly on the
//! zero boundary. Points with `lambda >= 1 / ||W2*||_inf` are treated as
//! infeasible, which keeps `I - lambda W2*` invertible for row-standardised
//! templates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{log_likelihood, recover_residuals};
use crate::models::{ModelKind, ModelSpec, ParamVector, SpatialDesign};
use crate::optim::{self, NelderMeadOptions};

pub const MIN_OBSERVATIONS: usize = 10;
/// `E log|eps|` for a standard normal `eps`: `-(euler_gamma + ln 2) / 2`.
const MEAN_LOG_ABS_NORMAL: f64 = -0.635_181_422_730_739_1;
const HESSIAN_REL_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeEstimation {
    /// Shape parameters stay at the values in the [`ModelSpec`].
    #[default]
    Fixed,
    /// Estimate the E-GARCH sign weight `theta`.
    Theta,
    /// Estimate the log-GARCH power `b`.
    B,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub shape: ShapeEstimation,
    /// Starting points; `None` uses four defaults derived from the data.
    pub starts: Option<Vec<ParamVector>>,
    /// Evaluation budget per start.
    pub max_evals: usize,
    pub xtol: f64,
    /// Nelder-Mead restarts from the best vertex after convergence.
    pub restarts: usize,
    pub std_errors: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            shape: ShapeEstimation::Fixed,
            starts: None,
            max_evals: 2000,
            xtol: 1e-8,
            restarts: 2,
            std_errors: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    /// Model with any estimated shape parameter filled in.
    pub model: ModelSpec,
    pub params_hat: ParamVector,
    /// Estimated `theta` or `b`, when requested.
    pub extra_hat: Option<f64>,
    pub param_names: Vec<String>,
    /// Per parameter, `None` on the boundary or for a degenerate Hessian.
    pub std_errors: Vec<Option<f64>>,
    pub at_boundary: Vec<bool>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    /// Number of free parameters.
    pub k: usize,
    pub n: usize,
    /// Recovered innovations at the estimate.
    pub residuals: Vec<f64>,
    pub h: Vec<f64>,
    pub converged: bool,
    pub n_evals: usize,
    pub diagnostics: Vec<String>,
}

impl FitResult {
    pub fn kind(&self) -> ModelKind {
        self.model.kind
    }
}

pub fn information_criteria(loglik: f64, k: usize, n: usize) -> (f64, f64) {
    let aic = -2.0 * loglik + 2.0 * k as f64;
    let bic = -2.0 * loglik + k as f64 * (n as f64).ln();
    (aic, bic)
}

/// Maps optimiser coordinates to model parameters.
struct Problem<'a> {
    y: &'a [f64],
    design: &'a SpatialDesign,
    spec: ModelSpec,
    shape: ShapeEstimation,
    lambda_max: f64,
}

impl Problem<'_> {
    fn dim(&self) -> usize {
        if self.shape == ShapeEstimation::Fixed {
            3
        } else {
            4
        }
    }

    /// Natural coordinates `(rho, lambda, alpha[, theta | b])` to a model.
    fn model(&self, theta: &[f64]) -> Option<(ParamVector, ModelSpec)> {
        let params = ParamVector::new(theta[0], theta[1], theta[2]).ok()?;
        if params.lambda >= self.lambda_max {
            return None;
        }
        let spec = match self.shape {
            ShapeEstimation::Fixed => self.spec,
            ShapeEstimation::Theta => self.spec.with_theta(theta[3]).ok()?,
            ShapeEstimation::B => self.spec.with_b(theta[3]).ok()?,
        };
        Some((params, spec))
    }

    fn loglik(&self, theta: &[f64]) -> f64 {
        match self.model(theta) {
            Some((p, s)) => log_likelihood(self.y, &p, self.design, &s),
            None => f64::NEG_INFINITY,
        }
    }

    fn to_natural(&self, z: &[f64]) -> Vec<f64> {
        let mut t = vec![z[0], z[1], z[2].exp()];
        match self.shape {
            ShapeEstimation::Fixed => {}
            ShapeEstimation::Theta => t.push(z[3]),
            ShapeEstimation::B => t.push(z[3].exp()),
        }
        t
    }

    fn to_optimizer(&self, p: &ParamVector) -> Vec<f64> {
        let mut z = vec![p.rho, p.lambda, p.alpha.ln()];
        match self.shape {
            ShapeEstimation::Fixed => {}
            ShapeEstimation::Theta => z.push(self.spec.theta),
            ShapeEstimation::B => z.push(self.spec.b.ln()),
        }
        z
    }

    fn nm_options(&self, max_evals: usize, xtol: f64) -> NelderMeadOptions {
        let mut lower = vec![0.0, 0.0, -30.0];
        let mut upper = vec![1e3, 1e3, 30.0];
        let mut step = vec![0.1, 0.1, 0.2];
        match self.shape {
            ShapeEstimation::Fixed => {}
            ShapeEstimation::Theta => {
                lower.push(-50.0);
                upper.push(50.0);
                step.push(0.2);
            }
            ShapeEstimation::B => {
                lower.push(-10.0);
                upper.push(5.0);
                step.push(0.2);
            }
        }
        NelderMeadOptions {
            lower,
            upper,
            step,
            max_evals,
            xtol,
        }
    }

    fn default_starts(&self) -> Vec<ParamVector> {
        let n = self.y.len() as f64;
        let mean_row = |w: &crate::WeightMatrix| w.row_sums().iter().sum::<f64>() / n;
        let (s1, s2) = (mean_row(self.design.w1_star()), mean_row(self.design.w2_star()));
        let second_moment = (self.y.iter().map(|v| v * v).sum::<f64>() / n).max(1e-12);
        let mean_log_y2 = self.y.iter().filter(|v| **v != 0.0).map(|v| (v * v).ln()).sum::<f64>() / n;
        // E log eps^2 for standard normal eps
        let level = mean_log_y2 - 2.0 * MEAN_LOG_ABS_NORMAL;

        [(0.05, 0.05), (0.3, 0.3), (0.6, 0.2), (0.2, 0.6)]
            .into_iter()
            .map(|(rho, lambda): (f64, f64)| {
                let lambda = lambda.min(0.9 * self.lambda_max);
                let alpha = match self.spec.kind {
                    ModelKind::Spgarch => second_moment * (1.0 - rho * s1 - lambda * s2),
                    ModelKind::Egarch => level * (1.0 - lambda * s2),
                    ModelKind::Loggarch => level * (1.0 - lambda * s2) - rho * s1 * self.spec.b * MEAN_LOG_ABS_NORMAL,
                    ModelKind::Hgarch => level * (1.0 - lambda * s2) - rho * s1 * mean_log_y2,
                };
                ParamVector {
                    rho,
                    lambda,
                    alpha: alpha.max(0.05),
                }
            })
            .collect()
    }
}

/// Maximises the log-likelihood over `rho >= 0`, `lambda >= 0`, `alpha > 0`
/// (and `theta` or `b` when requested).
pub fn fit(y: &[f64], spec: &ModelSpec, design: &SpatialDesign, options: &FitOptions) -> Result<FitResult> {
    design.check_len(y.len())?;
    if y.len() < MIN_OBSERVATIONS {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_OBSERVATIONS} observations, got {}",
            y.len()
        )));
    }
    match (options.shape, spec.kind) {
        (ShapeEstimation::Theta, k) if k != ModelKind::Egarch => {
            return Err(Error::InvalidInput("theta can only be estimated for egarch".into()))
        }
        (ShapeEstimation::B, k) if k != ModelKind::Loggarch => {
            return Err(Error::InvalidInput("b can only be estimated for loggarch".into()))
        }
        _ => {}
    }
    let max_row = design.w2_star().max_row_sum();
    let problem = Problem {
        y,
        design,
        spec: *spec,
        shape: options.shape,
        lambda_max: if max_row > 0.0 { 1.0 / max_row } else { f64::INFINITY },
    };
    let starts = options.starts.clone().unwrap_or_else(|| problem.default_starts());
    let nm = problem.nm_options(options.max_evals, options.xtol);

    let objective = |z: &[f64]| -problem.loglik(&problem.to_natural(z));
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let mut n_evals = 0usize;
    for start in &starts {
        let mut z = problem.to_optimizer(start);
        let mut fz = f64::INFINITY;
        let mut converged = false;
        let mut budget = options.max_evals;
        for _ in 0..=options.restarts {
            if budget == 0 {
                break;
            }
            let run = optim::minimize(
                objective,
                &z,
                &NelderMeadOptions {
                    max_evals: budget,
                    ..nm.clone()
                },
            );
            n_evals += run.n_evals;
            budget = budget.saturating_sub(run.n_evals);
            let improved = run.fx < fz - 1e-10 * (1.0 + fz.abs());
            converged = run.converged;
            if run.fx <= fz {
                z = run.x;
                fz = run.fx;
            }
            if !improved || !converged {
                break;
            }
        }
        if fz.is_finite() && best.as_ref().is_none_or(|b| fz < b.1) {
            best = Some((z, fz, converged));
        }
    }
    let (z, _, converged) =
        best.ok_or_else(|| Error::OptimFailed(format!("no start gave a finite likelihood for {}", spec.kind)))?;

    let theta = problem.to_natural(&z);
    let (params_hat, model) = problem
        .model(&theta)
        .ok_or_else(|| Error::OptimFailed("optimum left the parameter space".into()))?;
    let (residuals, h) = recover_residuals(y, &params_hat, design, &model)?;
    let loglik = log_likelihood(y, &params_hat, design, &model);
    let k = problem.dim();
    let (aic, bic) = information_criteria(loglik, k, y.len());
    let at_boundary: Vec<bool> = (0..k).map(|i| i < 2 && theta[i] == 0.0).collect();

    let mut diagnostics = Vec::new();
    if !converged {
        diagnostics.push(format!(
            "evaluation budget of {} per start exhausted",
            options.max_evals
        ));
    }
    let std_errors = if options.std_errors {
        let se = hessian_std_errors(&problem, &theta, &at_boundary);
        diagnostics.extend(se.diagnostic);
        se.values
    } else {
        vec![None; k]
    };

    let mut param_names = vec!["rho".to_string(), "lambda".into(), "alpha".into()];
    match options.shape {
        ShapeEstimation::Fixed => {}
        ShapeEstimation::Theta => param_names.push("theta".into()),
        ShapeEstimation::B => param_names.push("b".into()),
    }

    Ok(FitResult {
        model,
        params_hat,
        extra_hat: theta.get(3).copied(),
        param_names,
        std_errors,
        at_boundary,
        loglik,
        aic,
        bic,
        k,
        n: y.len(),
        residuals,
        h,
        converged,
        n_evals,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StdErrors {
    pub values: Vec<Option<f64>>,
    pub diagnostic: Option<String>,
}

/// Standard errors from the inverse of the negative numerical Hessian of
/// the log-likelihood at `params` (and `extra`, the estimated `theta` or
/// `b`). Parameters on the zero boundary get none.
pub fn standard_errors(
    params: &ParamVector,
    extra: Option<f64>,
    y: &[f64],
    spec: &ModelSpec,
    design: &SpatialDesign,
    shape: ShapeEstimation,
) -> StdErrors {
    let max_row = design.w2_star().max_row_sum();
    let problem = Problem {
        y,
        design,
        spec: *spec,
        shape,
        lambda_max: if max_row > 0.0 { 1.0 / max_row } else { f64::INFINITY },
    };
    let mut theta = params.as_array().to_vec();
    if shape != ShapeEstimation::Fixed {
        theta.push(extra.unwrap_or(match shape {
            ShapeEstimation::Theta => spec.theta,
            _ => spec.b,
        }));
    }
    let at_boundary: Vec<bool> = (0..theta.len()).map(|i| i < 2 && theta[i] == 0.0).collect();
    hessian_std_errors(&problem, &theta, &at_boundary)
}

fn hessian_std_errors(problem: &Problem<'_>, theta: &[f64], at_boundary: &[bool]) -> StdErrors {
    let dim = theta.len();
    let steps: Vec<f64> = theta.iter().map(|t| HESSIAN_REL_STEP * t.abs().max(1e-2)).collect();
    // a step that would cross the zero boundary makes the parameter a boundary one
    let free: Vec<usize> = (0..dim)
        .filter(|&i| !at_boundary[i] && !(i < 2 && theta[i] - steps[i] < 0.0))
        .collect();
    let mut values = vec![None; dim];
    if free.is_empty() {
        return StdErrors {
            values,
            diagnostic: None,
        };
    }
    let f0 = problem.loglik(theta);
    let eval = |shifts: &[(usize, f64)]| -> f64 {
        let mut t = theta.to_vec();
        for &(i, s) in shifts {
            t[i] += s;
        }
        problem.loglik(&t)
    };
    let m = free.len();
    let mut neg_h = vec![0.0; m * m];
    for (a, &i) in free.iter().enumerate() {
        let hi = steps[i];
        let d2 = (eval(&[(i, hi)]) - 2.0 * f0 + eval(&[(i, -hi)])) / (hi * hi);
        neg_h[a * m + a] = -d2;
        for (b, &j) in free.iter().enumerate().skip(a + 1) {
            let hj = steps[j];
            let d2 = (eval(&[(i, hi), (j, hj)]) - eval(&[(i, hi), (j, -hj)]) - eval(&[(i, -hi), (j, hj)])
                + eval(&[(i, -hi), (j, -hj)]))
                / (4.0 * hi * hj);
            neg_h[a * m + b] = -d2;
            neg_h[b * m + a] = -d2;
        }
    }
    if neg_h.iter().any(|v| !v.is_finite()) {
        return StdErrors {
            values,
            diagnostic: Some("Hessian has non-finite entries; standard errors omitted".into()),
        };
    }
    match cholesky_inverse_diag(&neg_h, m) {
        Some(diag) => {
            for (a, &i) in free.iter().enumerate() {
                values[i] = Some(diag[a].sqrt());
            }
            StdErrors {
                values,
                diagnostic: None,
            }
        }
        None => StdErrors {
            values,
            diagnostic: Some("negative Hessian is not positive definite; standard errors omitted".into()),
        },
    }
}

/// Diagonal of `A^{-1}` for symmetric positive definite `A`, or `None`.
pub(crate) fn cholesky_inverse_diag(a: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * m + i] = s.sqrt();
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    // column k of A^{-1}: solve L L' x = e_k
    let mut diag = vec![0.0; m];
    for k in 0..m {
        let mut z = vec![0.0; m];
        for i in 0..m {
            let mut s = if i == k { 1.0 } else { 0.0 };
            for j in 0..i {
                s -= l[i * m + j] * z[j];
            }
            z[i] = s / l[i * m + i];
        }
        let mut x = vec![0.0; m];
        for i in (0..m).rev() {
            let mut s = z[i];
            for j in i + 1..m {
                s -= l[j * m + i] * x[j];
            }
            x[i] = s / l[i * m + i];
        }
        diag[k] = x[k];
    }
    (diag.iter().all(|v| *v > 0.0 && v.is_finite())).then_some(diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{Contiguity, WeightMatrix};

    #[test]
    fn cholesky_inverse_diag_2x2() {
        // [[4, 2], [2, 3]]^{-1} = [[3, -2], [-2, 4]] / 8
        let d = cholesky_inverse_diag(&[4.0, 2.0, 2.0, 3.0], 2).unwrap();
        assert!((d[0] - 3.0 / 8.0).abs() < 1e-15 && (d[1] - 0.5).abs() < 1e-15);
        assert!(cholesky_inverse_diag(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }

    #[test]
    fn information_criteria_formula() {
        let (aic, bic) = information_criteria(-100.0, 3, 225);
        assert_eq!(aic, 206.0);
        assert!((bic - (200.0 + 3.0 * 225f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_samples_and_wrong_shape() {
        let w = WeightMatrix::grid_contiguity(3, 3, Contiguity::Rook)
            .unwrap()
            .lower_triangularize();
        let d = SpatialDesign::new(w.clone(), w).unwrap();
        let y = vec![0.5; 9];
        assert!(fit(&y, &ModelSpec::spgarch(), &d, &FitOptions::default()).is_err());

        let w = WeightMatrix::grid_contiguity(4, 4, Contiguity::Rook)
            .unwrap()
            .lower_triangularize();
        let d = SpatialDesign::new(w.clone(), w).unwrap();
        let y = vec![0.5; 16];
        let opts = FitOptions {
            shape: ShapeEstimation::B,
            ..FitOptions::default()
        };
        assert!(fit(&y, &ModelSpec::spgarch(), &d, &opts).is_err());
    }
}
