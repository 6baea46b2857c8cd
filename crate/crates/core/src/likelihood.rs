//! Exact log-likelihood by change of variables.
//!
//! With `eps = xi(y)` the inverse of the forward map and `J = dy/d eps`,
//!
//! ```text
//! log f_Y(y) = sum_i log f_eps(eps_i) - log |det J|,
//! J_ij = 1/2 * eps_i / sqrt(h_i) * dh_i/d eps_j + sqrt(h_i) * [i == j].
//! ```
//!
//! Two routes compute `log |det J|`:
//!
//! * [`jacobian_matrix`] assembles the dense `J` from the per-model partial
//!   derivatives and takes its LU determinant ([`jacobian_logdet_dense`]).
//! * [`jacobian_logdet`] writes `J = diag(sqrt h) (I + M)` and applies
//!   `det(I + AB) = det(I + BA)` to `M`, which turns the dense
//!   determinant into a ratio of two sparse determinants, e.g. for spGARCH
//!   `det(I - W2) / det(I - W1 diag(eps^2) - W2)`. With a triangular order
//!   both are 1 and `log |det J| = sum(log h) / 2`.

use crate::error::{Error, Result};
use crate::linalg::dense_log_abs_det;
use crate::models::{egarch, hgarch, loggarch, spgarch, ModelKind, ModelSpec, ParamVector, SpatialDesign};
use crate::weights::MAX_DENSE_N;

/// `(eps, h)` with `y_i = sqrt(h_i) eps_i` and the model equation satisfied.
pub fn recover_residuals(
    y: &[f64],
    params: &ParamVector,
    design: &SpatialDesign,
    spec: &ModelSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match spec.kind {
        ModelKind::Spgarch => spgarch::recover(y, params, design),
        ModelKind::Egarch => egarch::recover(y, params, design, spec),
        ModelKind::Loggarch => loggarch::recover(y, params, design, spec),
        ModelKind::Hgarch => hgarch::recover(y, params, design),
    }
}

/// `log |det J|` at a consistent `(eps, h)` pair.
pub fn jacobian_logdet(
    eps: &[f64],
    h: &[f64],
    params: &ParamVector,
    design: &SpatialDesign,
    spec: &ModelSpec,
) -> Result<f64> {
    design.check_len(eps.len())?;
    design.check_len(h.len())?;
    let mut diag = 0.0;
    for &hi in h {
        // J_ii = sqrt(h_i) on the triangular path; must be positive
        if !(hi > 0.0) {
            return Err(Error::SingularJacobian);
        }
        diag += 0.5 * hi.ln();
    }
    let ratio = if design.is_triangular() {
        0.0
    } else {
        match spec.kind {
            ModelKind::Spgarch => spgarch::log_det_ratio(eps, params, design),
            ModelKind::Egarch => egarch::log_det_ratio(eps, params, design, spec),
            ModelKind::Loggarch => loggarch::log_det_ratio(params, design, spec),
            ModelKind::Hgarch => hgarch::log_det_ratio(params, design),
        }
        .map_err(|e| match e {
            Error::SingularSystem => Error::SingularJacobian,
            other => other,
        })?
    };
    let out = diag + ratio;
    if !out.is_finite() {
        return Err(Error::SingularJacobian);
    }
    Ok(out)
}

/// Dense `dh_i / d eps_j`, row-major.
pub fn dh_deps(
    eps: &[f64],
    h: &[f64],
    params: &ParamVector,
    design: &SpatialDesign,
    spec: &ModelSpec,
) -> Result<Vec<f64>> {
    check_dense(design.n())?;
    match spec.kind {
        ModelKind::Spgarch => spgarch::dh_deps(eps, h, params, design),
        ModelKind::Egarch => egarch::dh_deps(eps, h, params, design, spec),
        ModelKind::Loggarch => loggarch::dh_deps(eps, h, params, design, spec),
        ModelKind::Hgarch => hgarch::dh_deps(eps, h, params, design),
    }
}

/// Dense Jacobian `dy_i / d eps_j`, row-major.
pub fn jacobian_matrix(
    eps: &[f64],
    h: &[f64],
    params: &ParamVector,
    design: &SpatialDesign,
    spec: &ModelSpec,
) -> Result<Vec<f64>> {
    let n = design.n();
    let mut jac = dh_deps(eps, h, params, design, spec)?;
    for i in 0..n {
        let scale = 0.5 * eps[i] / h[i].sqrt();
        for v in &mut jac[i * n..(i + 1) * n] {
            *v *= scale;
        }
        jac[i * n + i] += h[i].sqrt();
    }
    Ok(jac)
}

pub fn jacobian_logdet_dense(
    eps: &[f64],
    h: &[f64],
    params: &ParamVector,
    design: &SpatialDesign,
    spec: &ModelSpec,
) -> Result<f64> {
    let jac = jacobian_matrix(eps, h, params, design, spec)?;
    let (ld, _) = dense_log_abs_det(jac, design.n()).map_err(|_| Error::SingularJacobian)?;
    Ok(ld)
}

fn check_dense(n: usize) -> Result<()> {
    if n > MAX_DENSE_N {
        return Err(Error::InvalidInput(format!(
            "dense Jacobian limited to n <= {MAX_DENSE_N}, got {n}"
        )));
    }
    Ok(())
}

pub fn try_log_likelihood(y: &[f64], params: &ParamVector, design: &SpatialDesign, spec: &ModelSpec) -> Result<f64> {
    let (eps, h) = recover_residuals(y, params, design, spec)?;
    let logdet = jacobian_logdet(&eps, &h, params, design, spec)?;
    let density: f64 = eps.iter().map(|&e| spec.error_dist.log_density(e)).sum();
    Ok(density - logdet)
}

/// Log-likelihood; infeasible parameter points give `-inf` (the reason is
/// logged at debug level), so derivative-free optimisers can step over
/// them.
pub fn log_likelihood(y: &[f64], params: &ParamVector, design: &SpatialDesign, spec: &ModelSpec) -> f64 {
    match try_log_likelihood(y, params, design, spec) {
        Ok(v) if !v.is_nan() => v,
        Ok(_) => f64::NEG_INFINITY,
        Err(e) => {
            log::debug!("log-likelihood infeasible at {params:?} ({}): {e}", spec.kind);
            f64::NEG_INFINITY
        }
    }
}

/// `f(h_i) = c_i + d_i' g` in explicit form: `c = (I - W2)^{-1} alpha` and
/// the rows `d_i'` of `(I - W2)^{-1} W1` (dense).
#[derive(Debug, Clone)]
pub struct LikelihoodWorkspace {
    pub c: Vec<f64>,
    /// Row-major `n x n`.
    pub d: Vec<f64>,
    kind: ModelKind,
    n: usize,
}

impl LikelihoodWorkspace {
    pub fn new(params: &ParamVector, design: &SpatialDesign, spec: &ModelSpec) -> Result<Self> {
        let n = design.n();
        check_dense(n)?;
        let lu = design.factor(0.0, None, params.lambda)?;
        let c = lu.solve(&vec![params.alpha; n]);
        let mut d = vec![0.0; n * n];
        for (j, col) in crate::models::columns(design.w1_star()).iter().enumerate() {
            if col.is_empty() || params.rho == 0.0 {
                continue;
            }
            let mut rhs = vec![0.0; n];
            for &(i, w) in col {
                rhs[i] = params.rho * w;
            }
            for (i, v) in lu.solve(&rhs).into_iter().enumerate() {
                d[i * n + j] = v;
            }
        }
        Ok(LikelihoodWorkspace {
            c,
            d,
            kind: spec.kind,
            n,
        })
    }

    /// `f(h)`: identity for spGARCH, log otherwise.
    pub fn link(&self, h: &[f64]) -> Vec<f64> {
        if self.kind.log_link() {
            h.iter().map(|v| v.ln()).collect()
        } else {
            h.to_vec()
        }
    }

    /// The vector driving `W1`: `Y^2` (spGARCH), `g(eps)` (E-GARCH),
    /// `b log|eps|` (log-GARCH) or `log Y^2` (hybrid).
    pub fn innovation_term(&self, eps: &[f64], h: &[f64], spec: &ModelSpec) -> Vec<f64> {
        eps.iter()
            .zip(h)
            .map(|(&e, &hi)| match self.kind {
                ModelKind::Spgarch => e * e * hi,
                ModelKind::Egarch => egarch::g(e, spec),
                ModelKind::Loggarch => spec.b * e.abs().ln(),
                ModelKind::Hgarch => (e * e * hi).ln(),
            })
            .collect()
    }

    /// `c + D g`.
    pub fn predict_link(&self, g: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.c[i] + (0..self.n).map(|j| self.d[i * self.n + j] * g[j]).sum::<f64>())
            .collect()
    }
}
