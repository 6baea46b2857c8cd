//! Spatial and spatiotemporal GARCH-type random fields.
//!
//! The crate covers the four variants that share the representation
//! `X = alpha + W1 g(eps) + W2 X`, `X = f(h)`, `Y = diag(h)^{1/2} eps`:
//! spatial GARCH, spatial E-GARCH, spatial log-GARCH and the hybrid
//! spatial GARCH. It provides
//!
//! * sparse contiguity weights ([`weights`]),
//! * exact simulation ([`simulate`]),
//! * residual recovery, Jacobian log-determinants and the exact
//!   log-likelihood ([`likelihood`]),
//! * box-constrained maximum-likelihood fitting ([`estimate`]),
//! * model selection and Monte Carlo studies ([`select`]),
//! * a spatial autoregressive mean stage with GARCH-type residuals
//!   ([`sar`]) and Geary's C / symmetry diagnostics ([`diagnostics`]).
//!
//! The `spatial-garch` binary wraps all of this behind subcommands
//! ([`cli`]); the `examples/` directory has one runnable program per
//! capability.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod estimate;
pub mod io;
pub mod likelihood;
pub mod linalg;
pub mod models;
pub mod optim;
pub mod rng;
pub mod sar;
pub mod select;
pub mod simulate;
pub mod weights;

pub use error::{Error, Result};
pub use estimate::{fit, FitOptions, FitResult, ShapeEstimation};
pub use likelihood::{jacobian_logdet, log_likelihood, recover_residuals};
pub use models::{ErrorDist, ModelKind, ModelSpec, ParamVector, SpatialDesign, SpatialField};
pub use simulate::{simulate_field, SimConfig};
pub use weights::{Contiguity, WeightMatrix};
