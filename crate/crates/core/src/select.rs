//! Model selection across the four variants and the Monte Carlo harness
//! for selection rates and parameter recovery.
//!
//! Replication `r` of simulated model `m` draws from stream
//! `(seed, Simulation, m.code(), r)`, so each field is independent of the
//! thread schedule and of which other rows are run. Cell means use
//! pairwise summation in replication order.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{fit, FitOptions, FitResult};
use crate::io::fmt_f64;
use crate::likelihood::log_likelihood;
use crate::models::{ModelKind, ModelSpec, ParamVector, SpatialDesign};
use crate::simulate::{simulate_replication, SimConfig};
use crate::weights::{Contiguity, WeightMatrix};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    MaxLoglik,
    Bic,
}

impl std::str::FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_loglik" | "loglik" => Ok(Criterion::MaxLoglik),
            "bic" => Ok(Criterion::Bic),
            other => Err(Error::InvalidInput(format!("unknown criterion '{other}'"))),
        }
    }
}

impl Criterion {
    /// Larger is better.
    fn score(self, f: &FitResult) -> f64 {
        match self {
            Criterion::MaxLoglik => f.loglik,
            Criterion::Bic => -f.bic,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelOutcome {
    pub model: ModelKind,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    pub outcomes: Vec<ModelOutcome>,
    pub chosen: ModelKind,
    pub criterion: Criterion,
}

impl SelectionReport {
    pub fn fit_for(&self, kind: ModelKind) -> Option<&FitResult> {
        self.outcomes
            .iter()
            .find(|o| o.model == kind)
            .and_then(|o| o.fit.as_ref())
    }
}

/// Best model by `criterion`; exact ties go to the smaller
/// [`ModelKind::code`], which keeps the choice independent of list order.
fn choose(outcomes: &[ModelOutcome], criterion: Criterion) -> Option<ModelKind> {
    outcomes
        .iter()
        .filter_map(|o| o.fit.as_ref().map(|f| (o.model, criterion.score(f))))
        .filter(|(_, s)| s.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.code().cmp(&a.0.code())))
        .map(|(m, _)| m)
}

/// Fits every spec in `specs` to `y` and picks the best by `criterion`.
pub fn select_model(
    y: &[f64],
    design: &SpatialDesign,
    specs: &[ModelSpec],
    criterion: Criterion,
    options: &FitOptions,
) -> Result<SelectionReport> {
    let outcomes: Vec<ModelOutcome> = specs
        .iter()
        .map(|spec| match fit(y, spec, design, options) {
            Ok(f) => ModelOutcome {
                model: spec.kind,
                fit: Some(f),
                error: None,
            },
            Err(e) => ModelOutcome {
                model: spec.kind,
                fit: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let chosen = choose(&outcomes, criterion).ok_or(Error::AllFitsFailed)?;
    Ok(SelectionReport {
        outcomes,
        chosen,
        criterion,
    })
}

/// Rook `W1*` and queen `W2*`, each row-standardised and then reduced to
/// its lower triangle, so information flows from low to high row-major
/// indices.
pub fn directed_lattice(rows: usize, cols: usize) -> Result<SpatialDesign> {
    let w1 = WeightMatrix::grid_contiguity(rows, cols, Contiguity::Rook)?
        .row_standardize()
        .lower_triangularize();
    let w2 = WeightMatrix::grid_contiguity(rows, cols, Contiguity::Queen)?
        .row_standardize()
        .lower_triangularize();
    SpatialDesign::new(w1, w2)
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub rows: usize,
    pub cols: usize,
    pub params: ParamVector,
    /// Simulated (row) models; every row is fitted with `fitted` models.
    pub simulated: Vec<ModelKind>,
    pub fitted: Vec<ModelKind>,
    pub n_rep: usize,
    pub seed: u64,
    pub criterion: Criterion,
    pub fit: FitOptions,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            rows: 15,
            cols: 15,
            params: ParamVector {
                rho: 0.5,
                lambda: 0.4,
                alpha: 1.0,
            },
            simulated: ModelKind::ALL.to_vec(),
            fitted: ModelKind::ALL.to_vec(),
            n_rep: 100,
            seed: 42,
            criterion: Criterion::MaxLoglik,
            fit: FitOptions {
                std_errors: false,
                ..FitOptions::default()
            },
        }
    }
}

impl StudyConfig {
    fn check(&self) -> Result<()> {
        if self.n_rep == 0 {
            return Err(Error::InvalidInput("n_rep must be at least 1".into()));
        }
        if self.simulated.is_empty() || self.fitted.is_empty() {
            return Err(Error::InvalidInput("model lists must not be empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedRecord {
    pub model: ModelKind,
    /// `None` when the fit failed.
    pub loglik: Option<f64>,
    pub bic: Option<f64>,
    pub params: Option<ParamVector>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub true_model: ModelKind,
    pub rep: u64,
    /// Log-likelihood of the simulated field at the true parameters.
    pub truth_loglik: f64,
    pub fits: Vec<FittedRecord>,
    /// `None` when every fit failed or the simulation itself failed.
    pub chosen: Option<ModelKind>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cell {
    pub true_model: ModelKind,
    pub fitted_model: ModelKind,
    pub mean_loglik: f64,
    /// Percentage of replications (with at least one successful fit) in
    /// which this model was chosen.
    pub selection_pct: f64,
    pub n_ok: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MCStudyResult {
    pub rows: usize,
    pub cols: usize,
    pub params: ParamVector,
    pub n_rep: usize,
    pub seed: u64,
    pub criterion: Criterion,
    pub cells: Vec<Cell>,
    pub records: Vec<ReplicationRecord>,
    pub runtime_secs: f64,
}

impl MCStudyResult {
    pub fn cell(&self, true_model: ModelKind, fitted_model: ModelKind) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.true_model == true_model && c.fitted_model == fitted_model)
    }

    /// Tidy CSV, one row per cell.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "true_model",
            "fitted_model",
            "mean_loglik",
            "selection_pct",
            "n_ok",
            "n_failed",
        ])?;
        for c in &self.cells {
            wtr.write_record([
                c.true_model.name().to_string(),
                c.fitted_model.name().to_string(),
                fmt_f64(c.mean_loglik),
                fmt_f64(c.selection_pct),
                c.n_ok.to_string(),
                c.n_failed.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Sum by recursive halving, which fixes the rounding for a given order.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

fn replicate(
    cfg: &StudyConfig,
    design: &SpatialDesign,
    true_model: ModelKind,
    fitted: &[ModelKind],
    rep: u64,
) -> ReplicationRecord {
    let sim = SimConfig {
        spec: ModelSpec::default_for(true_model),
        params: cfg.params,
        design: design.clone(),
        seed: cfg.seed,
        max_rejections: crate::simulate::DEFAULT_MAX_REJECTIONS,
    };
    let field = match simulate_replication(&sim, rep) {
        Ok(f) => f,
        Err(e) => {
            log::warn!("simulation of {true_model} replication {rep} failed: {e}");
            return ReplicationRecord {
                true_model,
                rep,
                truth_loglik: f64::NAN,
                fits: Vec::new(),
                chosen: None,
                error: Some(e.to_string()),
            };
        }
    };
    let truth_loglik = log_likelihood(&field.y, &cfg.params, design, &sim.spec);
    let outcomes: Vec<ModelOutcome> = fitted
        .iter()
        .map(
            |&kind| match fit(&field.y, &ModelSpec::default_for(kind), design, &cfg.fit) {
                Ok(f) => ModelOutcome {
                    model: kind,
                    fit: Some(f),
                    error: None,
                },
                Err(e) => {
                    log::warn!("fit of {kind} to {true_model} replication {rep} failed: {e}");
                    ModelOutcome {
                        model: kind,
                        fit: None,
                        error: Some(e.to_string()),
                    }
                }
            },
        )
        .collect();
    let chosen = choose(&outcomes, cfg.criterion);
    let fits = outcomes
        .iter()
        .map(|o| FittedRecord {
            model: o.model,
            loglik: o.fit.as_ref().map(|f| f.loglik),
            bic: o.fit.as_ref().map(|f| f.bic),
            params: o.fit.as_ref().map(|f| f.params_hat),
            converged: o.fit.as_ref().is_some_and(|f| f.converged),
        })
        .collect();
    ReplicationRecord {
        true_model,
        rep,
        truth_loglik,
        fits,
        chosen,
        error: None,
    }
}

fn run(
    cfg: &StudyConfig,
    fitted_for: impl Fn(ModelKind) -> Vec<ModelKind> + Sync,
) -> Result<(Vec<ReplicationRecord>, f64)> {
    cfg.check()?;
    let start = Instant::now();
    let design = directed_lattice(cfg.rows, cfg.cols)?;
    let jobs: Vec<(ModelKind, u64)> = cfg
        .simulated
        .iter()
        .flat_map(|&m| (0..cfg.n_rep as u64).map(move |r| (m, r)))
        .collect();
    let records: Vec<ReplicationRecord> = jobs
        .par_iter()
        .map(|&(m, r)| replicate(cfg, &design, m, &fitted_for(m), r))
        .collect();
    Ok((records, start.elapsed().as_secs_f64()))
}

/// Simulates `n_rep` fields per row model and fits every model to each.
pub fn run_mc_study(cfg: &StudyConfig) -> Result<MCStudyResult> {
    let (records, runtime_secs) = run(cfg, |_| cfg.fitted.clone())?;
    let mut cells = Vec::new();
    for &m in &cfg.simulated {
        let row: Vec<&ReplicationRecord> = records.iter().filter(|r| r.true_model == m).collect();
        let decided = row.iter().filter(|r| r.chosen.is_some()).count();
        for &k in &cfg.fitted {
            let lls: Vec<f64> = row
                .iter()
                .filter_map(|r| r.fits.iter().find(|f| f.model == k).and_then(|f| f.loglik))
                .filter(|v| v.is_finite())
                .collect();
            let n_ok = lls.len();
            let chosen = row.iter().filter(|r| r.chosen == Some(k)).count();
            cells.push(Cell {
                true_model: m,
                fitted_model: k,
                mean_loglik: if n_ok > 0 {
                    pairwise_sum(&lls) / n_ok as f64
                } else {
                    f64::NAN
                },
                selection_pct: if decided > 0 {
                    100.0 * chosen as f64 / decided as f64
                } else {
                    f64::NAN
                },
                n_ok,
                n_failed: row.len() - n_ok,
            });
        }
    }
    Ok(MCStudyResult {
        rows: cfg.rows,
        cols: cfg.cols,
        params: cfg.params,
        n_rep: cfg.n_rep,
        seed: cfg.seed,
        criterion: cfg.criterion,
        cells,
        records,
        runtime_secs,
    })
}

/// Type-7 sample quantile (linear interpolation between order
/// statistics) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        Some(Quartiles {
            min: s[0],
            q1: quantile_sorted(&s, 0.25),
            median: quantile_sorted(&s, 0.5),
            q3: quantile_sorted(&s, 0.75),
            max: s[s.len() - 1],
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub model: ModelKind,
    pub n_ok: usize,
    pub rho: Option<Quartiles>,
    pub lambda: Option<Quartiles>,
    pub alpha: Option<Quartiles>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub params: ParamVector,
    pub n_rep: usize,
    pub seed: u64,
    pub summaries: Vec<RecoverySummary>,
    /// `(model, rep, estimate)` for every successful true-model fit.
    pub estimates: Vec<(ModelKind, u64, ParamVector)>,
    pub runtime_secs: f64,
}

impl RecoveryResult {
    pub fn summary(&self, model: ModelKind) -> Option<&RecoverySummary> {
        self.summaries.iter().find(|s| s.model == model)
    }

    /// Tidy CSV, one row per replication estimate.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["model", "rep", "rho", "lambda", "alpha"])?;
        for (m, r, p) in &self.estimates {
            wtr.write_record([
                m.name().to_string(),
                r.to_string(),
                fmt_f64(p.rho),
                fmt_f64(p.lambda),
                fmt_f64(p.alpha),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn summarize_recovery(cfg: &StudyConfig, records: &[ReplicationRecord], runtime_secs: f64) -> RecoveryResult {
    let mut estimates = Vec::new();
    for r in records {
        if let Some(p) = r.fits.iter().find(|f| f.model == r.true_model).and_then(|f| f.params) {
            estimates.push((r.true_model, r.rep, p));
        }
    }
    let summaries = cfg
        .simulated
        .iter()
        .map(|&m| {
            let ps: Vec<&ParamVector> = estimates.iter().filter(|e| e.0 == m).map(|e| &e.2).collect();
            let col = |f: fn(&ParamVector) -> f64| Quartiles::of(&ps.iter().map(|p| f(p)).collect::<Vec<_>>());
            RecoverySummary {
                model: m,
                n_ok: ps.len(),
                rho: col(|p| p.rho),
                lambda: col(|p| p.lambda),
                alpha: col(|p| p.alpha),
            }
        })
        .collect();
    RecoveryResult {
        params: cfg.params,
        n_rep: cfg.n_rep,
        seed: cfg.seed,
        summaries,
        estimates,
        runtime_secs,
    }
}

/// Simulates from each row model and fits only that model, collecting the
/// distribution of `(rho, lambda, alpha)` estimates.
pub fn recovery_study(cfg: &StudyConfig) -> Result<RecoveryResult> {
    let (records, runtime_secs) = run(cfg, |m| vec![m])?;
    Ok(summarize_recovery(cfg, &records, runtime_secs))
}

/// The same summary from the diagonal of a full study.
pub fn recovery_from_study(cfg: &StudyConfig, study: &MCStudyResult) -> RecoveryResult {
    summarize_recovery(cfg, &study.records, study.runtime_secs)
}
