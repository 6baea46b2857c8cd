//! Fits all four models to one simulated log-GARCH field and picks the one
//! with the largest likelihood.

use spatial_garch::select::{directed_lattice, select_model, Criterion, SelectionReport};
use spatial_garch::simulate::simulate_replication;
use spatial_garch::{FitOptions, ModelKind, ModelSpec, ParamVector, SimConfig};

pub fn run_example() -> spatial_garch::Result<SelectionReport> {
    let design = directed_lattice(15, 15)?;
    let cfg = SimConfig {
        spec: ModelSpec::loggarch(2.0)?,
        params: ParamVector::new(0.5, 0.4, 1.0)?,
        design: design.clone(),
        seed: 11,
        max_rejections: 100,
    };
    let y = simulate_replication(&cfg, 0)?.y;
    let specs: Vec<ModelSpec> = ModelKind::ALL.iter().map(|&k| ModelSpec::default_for(k)).collect();
    let opts = FitOptions {
        std_errors: false,
        ..FitOptions::default()
    };
    let report = select_model(&y, &design, &specs, Criterion::MaxLoglik, &opts)?;
    for o in &report.outcomes {
        match &o.fit {
            Some(f) => println!("{:9} loglik = {:9.3}  BIC = {:8.3}", o.model.name(), f.loglik, f.bic),
            None => println!("{:9} failed: {}", o.model.name(), o.error.as_deref().unwrap_or("?")),
        }
    }
    println!("simulated log-GARCH, selected {}", report.chosen);
    Ok(report)
}

#[allow(dead_code)]
fn main() -> spatial_garch::Result<()> {
    run_example().map(|_| ())
}
