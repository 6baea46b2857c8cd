//! The four spatial GARCH-type variants as instances of one representation:
//!
//! ```text
//! X = alpha + W1 g(eps) + W2 X,      X_i = f(h_i),      Y_i = sqrt(h_i) eps_i
//! ```
//!
//! with `W1 = rho * W1*`, `W2 = lambda * W2*` and a constant level `alpha`.
//! The variants differ in the link `f` (identity for [`ModelKind::Spgarch`],
//! natural log otherwise) and in the innovation map `g`.

pub mod egarch;
pub mod hgarch;
pub mod loggarch;
pub mod spgarch;

use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparseLu;
use crate::weights::{joint_triangular_order, WeightMatrix};

/// `|eps|` below this counts as an exact zero for the log-link models.
pub const ZERO_INNOVATION: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Spgarch,
    Egarch,
    Loggarch,
    Hgarch,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Spgarch,
        ModelKind::Hgarch,
        ModelKind::Loggarch,
        ModelKind::Egarch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Spgarch => "spgarch",
            ModelKind::Egarch => "egarch",
            ModelKind::Loggarch => "loggarch",
            ModelKind::Hgarch => "hgarch",
        }
    }

    /// Stable numeric code, used to derive random streams independently of
    /// the order in which models are listed.
    pub fn code(self) -> u64 {
        match self {
            ModelKind::Spgarch => 0,
            ModelKind::Hgarch => 1,
            ModelKind::Loggarch => 2,
            ModelKind::Egarch => 3,
        }
    }

    /// Whether the link is `f = log`.
    pub fn log_link(self) -> bool {
        !matches!(self, ModelKind::Spgarch)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "spgarch" => Ok(ModelKind::Spgarch),
            "egarch" | "espgarch" => Ok(ModelKind::Egarch),
            "loggarch" | "logspgarch" => Ok(ModelKind::Loggarch),
            "hgarch" => Ok(ModelKind::Hgarch),
            other => Err(Error::InvalidInput(format!("unknown model kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ErrorDist {
    StandardNormal,
    /// Standard normal restricted to `[-bound, bound]`.
    TruncatedNormal {
        bound: f64,
    },
}

impl ErrorDist {
    fn validate(&self) -> Result<()> {
        match *self {
            ErrorDist::StandardNormal => Ok(()),
            ErrorDist::TruncatedNormal { bound } if bound.is_finite() && bound > 0.0 => Ok(()),
            ErrorDist::TruncatedNormal { bound } => Err(Error::InvalidInput(format!(
                "truncation bound must be positive, got {bound}"
            ))),
        }
    }

    /// `P(|eps| <= bound)` under the standard normal.
    fn mass(&self) -> f64 {
        match *self {
            ErrorDist::StandardNormal => 1.0,
            ErrorDist::TruncatedNormal { bound } => statrs::function::erf::erf(bound / std::f64::consts::SQRT_2),
        }
    }

    /// Analytic `E|eps|`.
    pub fn mean_abs(&self) -> f64 {
        match *self {
            ErrorDist::StandardNormal => FRAC_2_PI.sqrt(),
            ErrorDist::TruncatedNormal { bound } => {
                FRAC_2_PI.sqrt() * (1.0 - (-0.5 * bound * bound).exp()) / self.mass()
            }
        }
    }

    pub fn log_density(&self, eps: f64) -> f64 {
        let base = -0.5 * (2.0 * PI).ln() - 0.5 * eps * eps;
        match *self {
            ErrorDist::StandardNormal => base,
            ErrorDist::TruncatedNormal { bound } if eps.abs() <= bound => base - self.mass().ln(),
            ErrorDist::TruncatedNormal { .. } => f64::NEG_INFINITY,
        }
    }

    pub fn is_sign_symmetric(&self) -> bool {
        true
    }
}

/// Which variant, its shape parameters and the error distribution.
///
/// `theta`/`zeta` only matter for E-GARCH, `b` only for log-GARCH.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpecFile", into = "ModelSpecFile")]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub theta: f64,
    pub zeta: f64,
    pub b: f64,
    pub error_dist: ErrorDist,
    mean_abs_eps: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpecFile {
    kind: ModelKind,
    #[serde(default = "default_theta")]
    theta: f64,
    #[serde(default)]
    zeta: f64,
    #[serde(default = "default_b")]
    b: f64,
    #[serde(default = "default_dist")]
    error_dist: ErrorDist,
}

fn default_theta() -> f64 {
    0.5
}
fn default_b() -> f64 {
    2.0
}
fn default_dist() -> ErrorDist {
    ErrorDist::StandardNormal
}

impl TryFrom<ModelSpecFile> for ModelSpec {
    type Error = Error;

    fn try_from(f: ModelSpecFile) -> Result<Self> {
        ModelSpec::new(f.kind, f.theta, f.zeta, f.b, f.error_dist)
    }
}

impl From<ModelSpec> for ModelSpecFile {
    fn from(s: ModelSpec) -> Self {
        ModelSpecFile {
            kind: s.kind,
            theta: s.theta,
            zeta: s.zeta,
            b: s.b,
            error_dist: s.error_dist,
        }
    }
}

impl ModelSpec {
    pub fn new(kind: ModelKind, theta: f64, zeta: f64, b: f64, error_dist: ErrorDist) -> Result<Self> {
        error_dist.validate()?;
        if !(theta.is_finite() && zeta.is_finite()) {
            return Err(Error::InvalidInput("theta and zeta must be finite".into()));
        }
        if kind == ModelKind::Loggarch && !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidInput(format!(
                "log-GARCH power b must be positive, got {b}"
            )));
        }
        Ok(ModelSpec {
            kind,
            theta,
            zeta,
            b,
            error_dist,
            mean_abs_eps: error_dist.mean_abs(),
        })
    }

    /// Shape parameters of the model-selection study: `theta = 0.5`,
    /// `zeta = 0`, `b = 2`, standard normal errors.
    pub fn default_for(kind: ModelKind) -> Self {
        Self::new(kind, 0.5, 0.0, 2.0, ErrorDist::StandardNormal).expect("defaults are valid")
    }

    pub fn spgarch() -> Self {
        Self::default_for(ModelKind::Spgarch)
    }

    pub fn hgarch() -> Self {
        Self::default_for(ModelKind::Hgarch)
    }

    pub fn egarch(theta: f64, zeta: f64) -> Result<Self> {
        Self::new(ModelKind::Egarch, theta, zeta, 2.0, ErrorDist::StandardNormal)
    }

    pub fn loggarch(b: f64) -> Result<Self> {
        Self::new(ModelKind::Loggarch, 0.5, 0.0, b, ErrorDist::StandardNormal)
    }

    pub fn with_error_dist(self, error_dist: ErrorDist) -> Result<Self> {
        Self::new(self.kind, self.theta, self.zeta, self.b, error_dist)
    }

    pub fn with_theta(self, theta: f64) -> Result<Self> {
        Self::new(self.kind, theta, self.zeta, self.b, self.error_dist)
    }

    pub fn with_b(self, b: f64) -> Result<Self> {
        Self::new(self.kind, self.theta, self.zeta, b, self.error_dist)
    }

    pub fn mean_abs_eps(&self) -> f64 {
        self.mean_abs_eps
    }

    /// True when `h(eps) = h(-eps)` for every `eps`.
    pub fn has_even_volatility(&self) -> bool {
        match self.kind {
            ModelKind::Egarch => self.theta == 0.0,
            _ => true,
        }
    }
}

/// `(rho, lambda, alpha)`: scales of the two weight templates and the
/// constant level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub rho: f64,
    pub lambda: f64,
    pub alpha: f64,
}

impl ParamVector {
    pub fn new(rho: f64, lambda: f64, alpha: f64) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::InvalidInput(format!("rho must be >= 0, got {rho}")));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidInput(format!("alpha must be > 0, got {alpha}")));
        }
        Ok(ParamVector { rho, lambda, alpha })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.rho, self.lambda, self.alpha]
    }
}

/// Observations on `n` ordered locations, with the latent `h` and `eps`
/// when the field was simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialField {
    pub y: Vec<f64>,
    pub h: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    /// Location labels; defaults to `1..=n`.
    pub ids: Vec<String>,
    /// Lattice shape `(rows, cols)` when the locations form a row-major grid.
    pub grid: Option<(usize, usize)>,
}

impl SpatialField {
    pub fn from_observations(y: Vec<f64>) -> Self {
        let ids = (1..=y.len()).map(|i| i.to_string()).collect();
        SpatialField {
            y,
            h: None,
            eps: None,
            ids,
            grid: None,
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Checks `y_i = sqrt(h_i) eps_i` (within `1e-10`) and `h > 0`.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.ids.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: self.ids.len(),
            });
        }
        if let Some(h) = &self.h {
            if h.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: h.len(),
                });
            }
            if let Some((index, &value)) = h.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                return Err(Error::NonPositiveH { index, value });
            }
        }
        if let (Some(h), Some(eps)) = (&self.h, &self.eps) {
            if eps.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: eps.len(),
                });
            }
            for i in 0..n {
                let expect = h[i].sqrt() * eps[i];
                if (self.y[i] - expect).abs() > 1e-10 * (1.0 + expect.abs()) {
                    return Err(Error::InvalidInput(format!(
                        "y[{i}] = {} disagrees with sqrt(h) * eps = {expect}",
                        self.y[i]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The weight templates `W1*`, `W2*` of a model together with their joint
/// triangular order, if one exists. With an order every model equation is
/// a forward recursion; without one the systems go through [`SparseLu`].
#[derive(Debug, Clone)]
pub struct SpatialDesign {
    w1: WeightMatrix,
    w2: WeightMatrix,
    order: Option<Vec<usize>>,
}

impl SpatialDesign {
    pub fn new(w1_star: WeightMatrix, w2_star: WeightMatrix) -> Result<Self> {
        if w1_star.n() != w2_star.n() {
            return Err(Error::DimensionMismatch {
                expected: w1_star.n(),
                actual: w2_star.n(),
            });
        }
        let order = joint_triangular_order(&[&w1_star, &w2_star]);
        Ok(SpatialDesign {
            w1: w1_star,
            w2: w2_star,
            order,
        })
    }

    /// Same design, but every system is solved by sparse LU even when a
    /// triangular order exists.
    pub fn without_fast_path(mut self) -> Self {
        self.order = None;
        self
    }

    pub fn n(&self) -> usize {
        self.w1.n()
    }

    pub fn w1_star(&self) -> &WeightMatrix {
        &self.w1
    }

    pub fn w2_star(&self) -> &WeightMatrix {
        &self.w2
    }

    pub fn triangular_order(&self) -> Option<&[usize]> {
        self.order.as_deref()
    }

    pub fn is_triangular(&self) -> bool {
        self.order.is_some()
    }

    /// Relabels locations of both templates.
    pub fn permute(&self, new_of: &[usize]) -> Result<Self> {
        Self::new(self.w1.permute(new_of)?, self.w2.permute(new_of)?)
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Triplets of `I - a1 * W1* diag(d1) - a2 * W2*`.
    fn system_triplets(&self, a1: f64, d1: Option<&[f64]>, a2: f64) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut trip = Vec::with_capacity(n + self.w1.nnz() + self.w2.nnz());
        trip.extend((0..n).map(|i| (i, i, 1.0)));
        if a1 != 0.0 {
            trip.extend(self.w1.iter().map(|(i, j, w)| {
                let d = d1.map_or(1.0, |d| d[j]);
                (i, j, -a1 * w * d)
            }));
        }
        if a2 != 0.0 {
            trip.extend(self.w2.iter().map(|(i, j, w)| (i, j, -a2 * w)));
        }
        trip
    }

    /// Solves `(I - a1 * W1* diag(d1) - a2 * W2*) x = rhs`.
    pub(crate) fn solve(&self, a1: f64, d1: Option<&[f64]>, a2: f64, rhs: Vec<f64>) -> Result<Vec<f64>> {
        if a1 == 0.0 && a2 == 0.0 {
            return Ok(rhs);
        }
        match &self.order {
            Some(order) => {
                let mut x = rhs;
                for &i in order {
                    let mut s = x[i];
                    if a1 != 0.0 {
                        for (j, w) in self.w1.row(i) {
                            s += a1 * w * d1.map_or(1.0, |d| d[j]) * x[j];
                        }
                    }
                    if a2 != 0.0 {
                        for (j, w) in self.w2.row(i) {
                            s += a2 * w * x[j];
                        }
                    }
                    x[i] = s;
                }
                Ok(x)
            }
            None => {
                let lu = SparseLu::factor(self.n(), &self.system_triplets(a1, d1, a2))?;
                Ok(lu.solve(&rhs))
            }
        }
    }

    /// LU factors of `I - a1 * W1* diag(d1) - a2 * W2*`, for repeated
    /// solves.
    pub(crate) fn factor(&self, a1: f64, d1: Option<&[f64]>, a2: f64) -> Result<SparseLu> {
        SparseLu::factor(self.n(), &self.system_triplets(a1, d1, a2))
    }

    /// `log |det(I - a1 * W1* diag(d1) - a2 * W2*)|`. Zero when a joint
    /// triangular order exists (unit triangular).
    pub(crate) fn log_abs_det(&self, a1: f64, d1: Option<&[f64]>, a2: f64) -> Result<f64> {
        if self.order.is_some() || (a1 == 0.0 && a2 == 0.0) {
            return Ok(0.0);
        }
        Ok(self.factor(a1, d1, a2)?.log_abs_det())
    }
}

/// `h` for a given innovation vector, dispatching on `spec.kind`.
pub fn solve_h(eps: &[f64], params: &ParamVector, design: &SpatialDesign, spec: &ModelSpec) -> Result<Vec<f64>> {
    match spec.kind {
        ModelKind::Spgarch => spgarch::solve_h(eps, params, design),
        ModelKind::Egarch => egarch::solve_h(eps, params, design, spec),
        ModelKind::Loggarch => loggarch::solve_h(eps, params, design, spec),
        ModelKind::Hgarch => hgarch::solve_h(eps, params, design),
    }
}

/// `y = sqrt(h) * eps` for the given innovations.
pub fn forward_map(eps: &[f64], params: &ParamVector, design: &SpatialDesign, spec: &ModelSpec) -> Result<Vec<f64>> {
    let h = solve_h(eps, params, design, spec)?;
    Ok(h.iter().zip(eps).map(|(h, e)| h.sqrt() * e).collect())
}

/// Column lists `(row, weight)` of a weight matrix.
pub(crate) fn columns(w: &WeightMatrix) -> Vec<Vec<(usize, f64)>> {
    let mut cols = vec![Vec::new(); w.n()];
    for (i, j, v) in w.iter() {
        cols[j].push((i, v));
    }
    cols
}

/// Dense `dh_i / d eps_j = h_i c_ij gp_j` with
/// `(c_ij) = (I - a1 W1* - lambda W2*)^{-1} rho W1*`.
pub(crate) fn log_link_dh_deps(
    h: &[f64],
    gp: &[f64],
    a1: f64,
    params: &ParamVector,
    design: &SpatialDesign,
) -> Result<Vec<f64>> {
    let n = h.len();
    let mut out = vec![0.0; n * n];
    if params.rho == 0.0 {
        return Ok(out);
    }
    let lu = design.factor(a1, None, params.lambda)?;
    for (j, col) in columns(design.w1_star()).iter().enumerate() {
        if col.is_empty() {
            continue;
        }
        let mut rhs = vec![0.0; n];
        for &(i, w) in col {
            rhs[i] = params.rho * w;
        }
        for (i, c) in lu.solve(&rhs).into_iter().enumerate() {
            out[i * n + j] = h[i] * c * gp[j];
        }
    }
    Ok(out)
}

pub(crate) fn exp_checked(x: Vec<f64>) -> Result<Vec<f64>> {
    let h: Vec<f64> = x.into_iter().map(f64::exp).collect();
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalOverflow("exp(log h) overflowed"));
    }
    if let Some((index, &value)) = h.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositiveH { index, value });
    }
    Ok(h)
}

pub(crate) fn check_positive(h: Vec<f64>) -> Result<Vec<f64>> {
    if let Some((index, &value)) = h.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        if value.is_nan() {
            return Err(Error::SingularSystem);
        }
        return Err(Error::NonPositiveH { index, value });
    }
    if h.iter().any(|v| v.is_infinite()) {
        return Err(Error::NumericalOverflow("h is infinite"));
    }
    Ok(h)
}

pub(crate) fn log_abs_nonzero(v: &[f64], zero: impl Fn(usize) -> Error) -> Result<Vec<f64>> {
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            if x.abs() < ZERO_INNOVATION {
                Err(zero(i))
            } else {
                Ok(x.abs().ln())
            }
        })
        .collect()
}
