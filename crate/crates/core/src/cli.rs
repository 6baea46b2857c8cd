//! Command-line front end. Exit codes: 0 on success, 1 on a domain error
//! (a JSON object `{"error": kind, "message": ...}` goes to stderr), 2 on
//! a usage error.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{gearys_c, permutation_pvalue};
use crate::error::{Error, Result};
use crate::estimate::{fit, FitOptions, ShapeEstimation};
use crate::io::{self, RunManifest};
use crate::likelihood::log_likelihood;
use crate::models::{ErrorDist, ModelKind, ModelSpec, ParamVector, SpatialDesign};
use crate::sar::{pipeline, PipelineOptions};
use crate::select::{directed_lattice, recovery_study, run_mc_study, select_model, Criterion, StudyConfig};
use crate::simulate::{simulate_replication, SimConfig};
use crate::weights::{Contiguity, WeightMatrix};

pub const THREADS_ENV: &str = "SPATIAL_GARCH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "spatial-garch", version = env!("CARGO_PKG_VERSION"), about = "Spatial GARCH-type random fields")]
struct Cli {
    /// Worker threads for replications and permutation tests.
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a lattice contiguity matrix.
    Weights(WeightsArgs),
    /// Simulate one field.
    Simulate(SimulateArgs),
    /// Maximum-likelihood fit of one model.
    Fit(FitArgs),
    /// Log-likelihood at given parameters.
    Loglik(LoglikArgs),
    /// Fit all four models and pick one.
    Select(SelectArgs),
    /// Selection-rate study over simulated fields.
    McStudy(StudyArgs),
    /// Parameter-recovery study.
    Recovery(StudyArgs),
    /// SAR mean, then GARCH-type models on its residuals.
    Pipeline(PipelineArgs),
    /// Geary's C with a permutation p-value.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Copy)]
struct Grid(usize, usize);

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected RxC, got '{s}'"))?;
    let r: usize = r.trim().parse().map_err(|_| format!("bad row count in '{s}'"))?;
    let c: usize = c.trim().parse().map_err(|_| format!("bad column count in '{s}'"))?;
    if r == 0 || c == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok(Grid(r, c))
}

fn parse_params(s: &str) -> std::result::Result<ParamVector, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad number '{x}'")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != 3 {
        return Err("expected rho,lambda,alpha".into());
    }
    ParamVector::new(v[0], v[1], v[2]).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct WeightsArgs {
    #[arg(long, value_parser = parse_grid)]
    grid: Grid,
    #[arg(long, default_value = "rook")]
    scheme: Contiguity,
    #[arg(long)]
    row_standardize: bool,
    #[arg(long)]
    triangularize: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ShapeArgs {
    /// E-GARCH sign weight.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    theta: f64,
    /// E-GARCH magnitude weight.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    zeta: f64,
    /// log-GARCH power.
    #[arg(long, default_value_t = 2.0)]
    b: f64,
    /// Truncate the normal errors to [-BOUND, BOUND].
    #[arg(long, value_name = "BOUND")]
    truncate: Option<f64>,
}

impl ShapeArgs {
    fn spec(&self, kind: ModelKind) -> Result<ModelSpec> {
        let dist = match self.truncate {
            Some(bound) => ErrorDist::TruncatedNormal { bound },
            None => ErrorDist::StandardNormal,
        };
        ModelSpec::new(kind, self.theta, self.zeta, self.b, dist)
    }
}

/// Either weight files or a directed lattice (rook `W1*`, queen `W2*`).
#[derive(Debug, Args)]
struct DesignArgs {
    /// `W1*` as `i,j,w` triplets.
    #[arg(long, conflicts_with = "grid")]
    w1: Option<PathBuf>,
    /// `W2*`; defaults to `W1*`.
    #[arg(long, requires = "w1")]
    w2: Option<PathBuf>,
    #[arg(long, value_parser = parse_grid)]
    grid: Option<Grid>,
}

impl DesignArgs {
    fn design(&self, n: Option<usize>, manifest: &mut RunManifest) -> Result<(SpatialDesign, Option<Grid>)> {
        let (design, grid) = self.build(n, manifest)?;
        if let Some(expected) = n {
            if design.n() != expected {
                return Err(Error::DimensionMismatch {
                    expected: design.n(),
                    actual: expected,
                });
            }
        }
        Ok((design, grid))
    }

    fn build(&self, n: Option<usize>, manifest: &mut RunManifest) -> Result<(SpatialDesign, Option<Grid>)> {
        match (&self.w1, self.grid) {
            (Some(p1), _) => {
                let w1 = WeightMatrix::load(p1, n)?;
                manifest.add_input(p1)?;
                let w2 = match &self.w2 {
                    Some(p2) => {
                        manifest.add_input(p2)?;
                        WeightMatrix::load(p2, Some(w1.n()))?
                    }
                    None => w1.clone(),
                };
                Ok((SpatialDesign::new(w1, w2)?, None))
            }
            (None, Some(g)) => Ok((directed_lattice(g.0, g.1)?, Some(g))),
            (None, None) => Err(Error::InvalidInput("give --w1 [--w2] or --grid".into())),
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    model: ModelKind,
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0.4)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replication index within the seed's stream family.
    #[arg(long, default_value_t = 0)]
    rep: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write a PGM heatmap of y (lattice designs only).
    #[arg(long)]
    heatmap: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    model: ModelKind,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    design: DesignArgs,
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, conflicts_with = "estimate_b")]
    estimate_theta: bool,
    #[arg(long)]
    estimate_b: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LoglikArgs {
    #[arg(long)]
    model: ModelKind,
    /// `rho,lambda,alpha`.
    #[arg(long, value_parser = parse_params)]
    params: ParamVector,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    design: DesignArgs,
    #[command(flatten)]
    shape: ShapeArgs,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    design: DesignArgs,
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, default_value = "max_loglik")]
    criterion: Criterion,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StudyArgs {
    #[arg(long, value_parser = parse_grid, default_value = "15x15")]
    grid: Grid,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0.4)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "max_loglik")]
    criterion: Criterion,
    /// Tidy CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Also write the full result (including per-replication records) as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// CSV with columns `id,y`, rows in weight-matrix order.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    w: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "spgarch,egarch,loggarch")]
    models: Vec<ModelKind>,
    /// Keep theta and b at their defaults instead of estimating them.
    #[arg(long)]
    fixed_shapes: bool,
    #[arg(long, default_value_t = 999)]
    perms: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Stat {
    Geary,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    w: PathBuf,
    #[arg(long, value_enum, default_value = "geary")]
    stat: Stat,
    #[arg(long, default_value_t = 999)]
    perms: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Square the values first.
    #[arg(long)]
    squared: bool,
}

fn finish(mut manifest: RunManifest, start: Instant, outputs: &[&Path]) -> Result<()> {
    manifest.runtime_secs = start.elapsed().as_secs_f64();
    manifest.outputs = outputs.iter().map(|p| p.to_path_buf()).collect();
    if let Some(first) = outputs.first() {
        manifest.save(RunManifest::manifest_path(first))?;
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn load_data(path: &Path, manifest: &mut RunManifest) -> Result<Vec<f64>> {
    manifest.add_input(path)?;
    Ok(io::load_field(path)?.y)
}

fn run(command: Command, argv: Vec<String>) -> Result<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new(argv);
    match command {
        Command::Weights(a) => {
            let mut w = WeightMatrix::grid_contiguity(a.grid.0, a.grid.1, a.scheme)?;
            if a.row_standardize {
                w = w.row_standardize();
            }
            if a.triangularize {
                w = w.lower_triangularize();
            }
            w.save(&a.out)?;
            finish(manifest, start, &[&a.out])
        }
        Command::Simulate(a) => {
            let (design, grid) = a.design.design(None, &mut manifest)?;
            let spec = a.shape.spec(a.model)?;
            let cfg = SimConfig {
                spec,
                params: ParamVector::new(a.rho, a.lambda, a.alpha)?,
                design,
                seed: a.seed,
                max_rejections: crate::simulate::DEFAULT_MAX_REJECTIONS,
            };
            let mut field = simulate_replication(&cfg, a.rep)?;
            field.grid = grid.map(|g| (g.0, g.1));
            io::save_field(&field, &a.out)?;
            manifest.seeds.push(a.seed);
            let mut outputs = vec![a.out.as_path()];
            if let Some(pgm) = &a.heatmap {
                let (r, c) = field
                    .grid
                    .ok_or_else(|| Error::InvalidInput("--heatmap needs a --grid design".into()))?;
                io::write_pgm(&field.y, r, c, std::fs::File::create(pgm)?)?;
                outputs.push(pgm);
            }
            finish(manifest, start, &outputs)
        }
        Command::Fit(a) => {
            let y = load_data(&a.data, &mut manifest)?;
            let (design, _) = a.design.design(Some(y.len()), &mut manifest)?;
            let shape = if a.estimate_theta {
                ShapeEstimation::Theta
            } else if a.estimate_b {
                ShapeEstimation::B
            } else {
                ShapeEstimation::Fixed
            };
            let result = fit(
                &y,
                &a.shape.spec(a.model)?,
                &design,
                &FitOptions {
                    shape,
                    ..FitOptions::default()
                },
            )?;
            write_json(&result, &a.out)?;
            finish(manifest, start, &[&a.out])
        }
        Command::Loglik(a) => {
            let y = load_data(&a.data, &mut manifest)?;
            let (design, _) = a.design.design(Some(y.len()), &mut manifest)?;
            let ll = log_likelihood(&y, &a.params, &design, &a.shape.spec(a.model)?);
            println!("{}", io::fmt_f64(ll));
            Ok(())
        }
        Command::Select(a) => {
            let y = load_data(&a.data, &mut manifest)?;
            let (design, _) = a.design.design(Some(y.len()), &mut manifest)?;
            let specs = ModelKind::ALL
                .iter()
                .map(|&k| a.shape.spec(k))
                .collect::<Result<Vec<_>>>()?;
            let report = select_model(&y, &design, &specs, a.criterion, &FitOptions::default())?;
            write_json(&report, &a.out)?;
            println!("{}", report.chosen);
            finish(manifest, start, &[&a.out])
        }
        Command::McStudy(a) => {
            let cfg = study_config(&a)?;
            let result = run_mc_study(&cfg)?;
            result.write_csv(std::fs::File::create(&a.out)?)?;
            manifest.seeds.push(a.seed);
            let mut outputs = vec![a.out.as_path()];
            if let Some(j) = &a.json {
                write_json(&result, j)?;
                outputs.push(j);
            }
            finish(manifest, start, &outputs)
        }
        Command::Recovery(a) => {
            let cfg = study_config(&a)?;
            let result = recovery_study(&cfg)?;
            result.write_csv(std::fs::File::create(&a.out)?)?;
            manifest.seeds.push(a.seed);
            let mut outputs = vec![a.out.as_path()];
            if let Some(j) = &a.json {
                write_json(&result, j)?;
                outputs.push(j);
            }
            finish(manifest, start, &outputs)
        }
        Command::Pipeline(a) => {
            let y = load_data(&a.data, &mut manifest)?;
            manifest.add_input(&a.w)?;
            let w = WeightMatrix::load(&a.w, Some(y.len()))?;
            let opts = PipelineOptions {
                models: a.models.clone(),
                estimate_shapes: !a.fixed_shapes,
                n_perm: a.perms,
                seed: a.seed,
                ..PipelineOptions::default()
            };
            let report = pipeline(&y, &w, &opts)?;
            write_json(&report, &a.out)?;
            manifest.seeds.push(a.seed);
            finish(manifest, start, &[&a.out])
        }
        Command::Diagnose(a) => {
            let mut y = load_data(&a.data, &mut manifest)?;
            let w = WeightMatrix::load(&a.w, Some(y.len()))?;
            if a.squared {
                y.iter_mut().for_each(|v| *v *= *v);
            }
            let Stat::Geary = a.stat;
            let c = gearys_c(&y, &w)?;
            let p = permutation_pvalue(&y, &w, a.perms, a.seed)?;
            println!(
                "{}",
                serde_json::json!({ "stat": "geary", "c": c, "p_value": p, "perms": a.perms })
            );
            Ok(())
        }
    }
}

fn study_config(a: &StudyArgs) -> Result<StudyConfig> {
    Ok(StudyConfig {
        rows: a.grid.0,
        cols: a.grid.1,
        params: ParamVector::new(a.rho, a.lambda, a.alpha)?,
        n_rep: a.reps,
        seed: a.seed,
        criterion: a.criterion,
        ..StudyConfig::default()
    })
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let threads = cli.threads.unwrap_or(0);
    let outcome = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
        .and_then(|pool| pool.install(|| run(cli.command, argv.clone())));
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.kind(), "message": e.to_string() }));
            1
        }
    }
}
