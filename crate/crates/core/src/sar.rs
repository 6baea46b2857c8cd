//! Spatial autoregressive mean model `y = mu 1 + gamma W y + u` with
//! Gaussian `u`, and the two-stage fit that models the SAR residuals with
//! spatial GARCH-type processes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{gearys_c, permutation_pvalue};
use crate::error::{Error, Result};
use crate::estimate::{cholesky_inverse_diag, fit, FitOptions, FitResult, ShapeEstimation, MIN_OBSERVATIONS};
use crate::linalg::SparseLu;
use crate::models::{ErrorDist, ModelKind, ModelSpec, SpatialDesign};
use crate::weights::WeightMatrix;

pub const NEAR_UNIT_ROOT: f64 = 0.99;
const GRID_POINTS: usize = 199;
const GOLDEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SarFit {
    pub mu: f64,
    pub gamma: f64,
    pub sigma2: f64,
    /// For `(mu, gamma, sigma2)`.
    pub std_errors: Vec<Option<f64>>,
    /// `(I - gamma W) y - mu 1`.
    pub residuals: Vec<f64>,
    pub loglik: f64,
    pub near_unit_root: bool,
    pub warnings: Vec<String>,
}

fn log_det(w: &WeightMatrix, gamma: f64) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let n = w.n();
    let mut trip: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
    trip.extend(w.iter().map(|(i, j, v)| (i, j, -gamma * v)));
    Ok(SparseLu::factor(n, &trip)?.log_abs_det())
}

/// `(I - gamma W) y`.
fn filtered(y: &[f64], w: &WeightMatrix, gamma: f64) -> Vec<f64> {
    let wy = w.mul_vec(y);
    y.iter().zip(&wy).map(|(a, b)| a - gamma * b).collect()
}

fn full_loglik(y: &[f64], w: &WeightMatrix, mu: f64, gamma: f64, sigma2: f64) -> f64 {
    if !(sigma2 > 0.0) {
        return f64::NEG_INFINITY;
    }
    let Ok(ld) = log_det(w, gamma) else {
        return f64::NEG_INFINITY;
    };
    let n = y.len() as f64;
    let ssr: f64 = filtered(y, w, gamma).iter().map(|v| (v - mu).powi(2)).sum();
    -0.5 * n * (2.0 * std::f64::consts::PI * sigma2).ln() + ld - ssr / (2.0 * sigma2)
}

/// Log-likelihood with `mu` and `sigma2` profiled out.
fn concentrated(y: &[f64], w: &WeightMatrix, gamma: f64) -> f64 {
    let n = y.len() as f64;
    let Ok(ld) = log_det(w, gamma) else {
        return f64::NEG_INFINITY;
    };
    let z = filtered(y, w, gamma);
    let mu = z.iter().sum::<f64>() / n;
    let sigma2 = z.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
    if !(sigma2 > 0.0) {
        return f64::NEG_INFINITY;
    }
    -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + 1.0 + sigma2.ln()) + ld
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Gaussian maximum likelihood. `gamma` is searched on a grid over
/// `(-1/r, 1/r)`, `r = ||W||_inf`, and refined by golden section between
/// the neighbours of the best grid point.
pub fn fit_sar(y: &[f64], w: &WeightMatrix) -> Result<SarFit> {
    let n = y.len();
    if w.n() != n {
        return Err(Error::DimensionMismatch {
            expected: w.n(),
            actual: n,
        });
    }
    if n < MIN_OBSERVATIONS {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_OBSERVATIONS} observations, got {n}"
        )));
    }
    let mut warnings = Vec::new();
    let r = w.max_row_sum();
    let gamma = if r > 0.0 {
        let bound = 1.0 / r;
        let grid: Vec<f64> = (1..=GRID_POINTS)
            .map(|k| -bound + 2.0 * bound * k as f64 / (GRID_POINTS + 1) as f64)
            .collect();
        let values: Vec<f64> = grid.iter().map(|&g| concentrated(y, w, g)).collect();
        let best = (0..GRID_POINTS)
            .filter(|&k| values[k].is_finite())
            .max_by(|&a, &b| values[a].total_cmp(&values[b]))
            .ok_or_else(|| Error::OptimFailed("SAR likelihood is not finite anywhere on the grid".into()))?;
        let lo = if best == 0 {
            -bound * (1.0 - 1e-9)
        } else {
            grid[best - 1]
        };
        let hi = if best + 1 == GRID_POINTS {
            bound * (1.0 - 1e-9)
        } else {
            grid[best + 1]
        };
        let g = golden_max(|g| concentrated(y, w, g), lo, hi);
        if concentrated(y, w, g) >= values[best] {
            g
        } else {
            grid[best]
        }
    } else {
        warnings.push("weight matrix is zero; gamma fixed at 0".into());
        0.0
    };
    let near_unit_root = gamma > NEAR_UNIT_ROOT;
    if near_unit_root {
        warnings.push(format!("gamma = {gamma} is close to the unit root"));
    }

    let z = filtered(y, w, gamma);
    let mu = z.iter().sum::<f64>() / n as f64;
    let residuals: Vec<f64> = z.iter().map(|v| v - mu).collect();
    let sigma2 = residuals.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if !(sigma2 > 0.0) {
        return Err(Error::ConstantInput);
    }
    let loglik = full_loglik(y, w, mu, gamma, sigma2);

    let theta = [mu, gamma, sigma2];
    let free: Vec<usize> = if r > 0.0 { vec![0, 1, 2] } else { vec![0, 2] };
    let std_errors = hessian_se(&theta, &free, |t| full_loglik(y, w, t[0], t[1], t[2]));
    if std_errors
        .iter()
        .zip(&[true, r > 0.0, true])
        .any(|(s, want)| s.is_none() && *want)
    {
        warnings.push("negative Hessian is not positive definite; standard errors omitted".into());
    }
    Ok(SarFit {
        mu,
        gamma,
        sigma2,
        std_errors,
        residuals,
        loglik,
        near_unit_root,
        warnings,
    })
}

fn hessian_se(theta: &[f64], free: &[usize], f: impl Fn(&[f64]) -> f64) -> Vec<Option<f64>> {
    let steps: Vec<f64> = theta.iter().map(|t| 1e-4 * t.abs().max(1e-2)).collect();
    let eval = |shifts: &[(usize, f64)]| {
        let mut t = theta.to_vec();
        for &(i, s) in shifts {
            t[i] += s;
        }
        f(&t)
    };
    let f0 = f(theta);
    let m = free.len();
    let mut neg_h = vec![0.0; m * m];
    for (a, &i) in free.iter().enumerate() {
        let hi = steps[i];
        neg_h[a * m + a] = -(eval(&[(i, hi)]) - 2.0 * f0 + eval(&[(i, -hi)])) / (hi * hi);
        for (b, &j) in free.iter().enumerate().skip(a + 1) {
            let hj = steps[j];
            let d = (eval(&[(i, hi), (j, hj)]) - eval(&[(i, hi), (j, -hj)]) - eval(&[(i, -hi), (j, hj)])
                + eval(&[(i, -hi), (j, -hj)]))
                / (4.0 * hi * hj);
            neg_h[a * m + b] = -d;
            neg_h[b * m + a] = -d;
        }
    }
    let mut out = vec![None; theta.len()];
    if neg_h.iter().all(|v| v.is_finite()) {
        if let Some(diag) = cholesky_inverse_diag(&neg_h, m) {
            for (a, &i) in free.iter().enumerate() {
                out[i] = Some(diag[a].sqrt());
            }
        }
    }
    out
}

/// `y = (I - gamma W)^{-1} (mu 1 + u)`: a SAR field with innovations `u`.
pub fn sar_field(mu: f64, gamma: f64, w: &WeightMatrix, u: &[f64]) -> Result<Vec<f64>> {
    let n = w.n();
    if u.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: u.len(),
        });
    }
    let rhs: Vec<f64> = u.iter().map(|v| mu + v).collect();
    if gamma == 0.0 {
        return Ok(rhs);
    }
    let mut trip: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
    trip.extend(w.iter().map(|(i, j, v)| (i, j, -gamma * v)));
    Ok(SparseLu::factor(n, &trip)?.solve(&rhs))
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub models: Vec<ModelKind>,
    /// Estimate E-GARCH `theta` (with `zeta = 0`) and log-GARCH `b`; when
    /// false both stay at their defaults.
    pub estimate_shapes: bool,
    pub error_dist: ErrorDist,
    pub fit: FitOptions,
    /// Permutations for the Geary's C p-values; 0 skips them.
    pub n_perm: usize,
    pub seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            models: vec![ModelKind::Spgarch, ModelKind::Egarch, ModelKind::Loggarch],
            estimate_shapes: true,
            error_dist: ErrorDist::StandardNormal,
            fit: FitOptions::default(),
            n_perm: 999,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GearyStat {
    pub c: f64,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualDiagnostics {
    pub residuals: GearyStat,
    pub squared_residuals: GearyStat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanEquation {
    pub mu: f64,
    pub mu_se: Option<f64>,
    pub gamma: f64,
    pub gamma_se: Option<f64>,
    pub sigma2: f64,
    pub loglik: f64,
    pub near_unit_root: bool,
    pub residual_diagnostics: ResidualDiagnostics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualProcess {
    pub model: ModelKind,
    pub fit: FitResult,
    pub diagnostics: ResidualDiagnostics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: ModelKind,
    pub loglik: f64,
    pub k: usize,
    pub bic: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub n: usize,
    pub error_dist: ErrorDist,
    pub mean_equation: MeanEquation,
    pub residual_process: Vec<ResidualProcess>,
    /// One row per fitted model, in the order requested.
    pub summary: Vec<SummaryRow>,
    pub chosen_by_bic: ModelKind,
    /// Models whose fit failed, with the error message.
    pub failed: Vec<(ModelKind, String)>,
    pub warnings: Vec<String>,
}

fn geary_stat(x: &[f64], w: &WeightMatrix, n_perm: usize, seed: u64) -> Result<GearyStat> {
    let c = gearys_c(x, w)?;
    let p_value = if n_perm > 0 {
        Some(permutation_pvalue(x, w, n_perm, seed)?)
    } else {
        None
    };
    Ok(GearyStat { c, p_value })
}

fn residual_diagnostics(res: &[f64], w: &WeightMatrix, n_perm: usize, seed: u64) -> Result<ResidualDiagnostics> {
    let sq: Vec<f64> = res.iter().map(|v| v * v).collect();
    Ok(ResidualDiagnostics {
        residuals: geary_stat(res, w, n_perm, seed)?,
        squared_residuals: geary_stat(&sq, w, n_perm, seed)?,
    })
}

fn shape_for(kind: ModelKind, estimate: bool) -> ShapeEstimation {
    match (kind, estimate) {
        (ModelKind::Egarch, true) => ShapeEstimation::Theta,
        (ModelKind::Loggarch, true) => ShapeEstimation::B,
        _ => ShapeEstimation::Fixed,
    }
}

/// Fits the SAR mean, then every requested GARCH-type model to the SAR
/// residuals with `W1* = W2* = W`, and compares them by BIC. Geary's C is
/// reported for the SAR residuals and for each model's recovered
/// innovations, raw and squared.
pub fn pipeline(y: &[f64], w: &WeightMatrix, options: &PipelineOptions) -> Result<PipelineReport> {
    if options.models.is_empty() {
        return Err(Error::InvalidInput("no residual models requested".into()));
    }
    let sar = fit_sar(y, w)?;
    let mean_equation = MeanEquation {
        mu: sar.mu,
        mu_se: sar.std_errors[0],
        gamma: sar.gamma,
        gamma_se: sar.std_errors[1],
        sigma2: sar.sigma2,
        loglik: sar.loglik,
        near_unit_root: sar.near_unit_root,
        residual_diagnostics: residual_diagnostics(&sar.residuals, w, options.n_perm, options.seed)?,
    };
    let design = SpatialDesign::new(w.clone(), w.clone())?;
    let fits: Vec<(ModelKind, Result<FitResult>)> = options
        .models
        .par_iter()
        .map(|&kind| {
            let fitted = ModelSpec::default_for(kind)
                .with_error_dist(options.error_dist)
                .and_then(|spec| {
                    let opts = FitOptions {
                        shape: shape_for(kind, options.estimate_shapes),
                        ..options.fit.clone()
                    };
                    fit(&sar.residuals, &spec, &design, &opts)
                });
            (kind, fitted)
        })
        .collect();

    let mut residual_process = Vec::new();
    let mut failed = Vec::new();
    for (kind, fitted) in fits {
        match fitted {
            Ok(f) => {
                let diagnostics = residual_diagnostics(&f.residuals, w, options.n_perm, options.seed)?;
                residual_process.push(ResidualProcess {
                    model: kind,
                    fit: f,
                    diagnostics,
                });
            }
            Err(e) => failed.push((kind, e.to_string())),
        }
    }
    let summary: Vec<SummaryRow> = residual_process
        .iter()
        .map(|r| SummaryRow {
            model: r.model,
            loglik: r.fit.loglik,
            k: r.fit.k,
            bic: r.fit.bic,
        })
        .collect();
    let chosen_by_bic = summary
        .iter()
        .filter(|r| r.bic.is_finite())
        .min_by(|a, b| a.bic.total_cmp(&b.bic))
        .map(|r| r.model)
        .ok_or(Error::AllFitsFailed)?;
    Ok(PipelineReport {
        n: y.len(),
        error_dist: options.error_dist,
        mean_equation,
        residual_process,
        summary,
        chosen_by_bic,
        failed,
        warnings: sar.warnings,
    })
}
