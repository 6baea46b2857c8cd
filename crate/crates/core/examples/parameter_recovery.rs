//! Distribution of the estimates of (rho, lambda, alpha) when the true model
//! is fitted. Pass the number of replications as the first argument
//! (default 10).

use spatial_garch::select::{recovery_study, RecoveryResult, StudyConfig};

pub fn run_example(n_rep: usize) -> spatial_garch::Result<RecoveryResult> {
    let cfg = StudyConfig {
        n_rep,
        ..StudyConfig::default()
    };
    let result = recovery_study(&cfg)?;
    println!(
        "{:9} {:>6} {:>24} {:>24} {:>24}",
        "model", "fits", "rho q1/med/q3", "lambda q1/med/q3", "alpha q1/med/q3"
    );
    for s in &result.summaries {
        let q = |v: &Option<spatial_garch::select::Quartiles>| {
            v.as_ref()
                .map_or("-".to_string(), |q| format!("{:.3}/{:.3}/{:.3}", q.q1, q.median, q.q3))
        };
        println!(
            "{:9} {:>6} {:>24} {:>24} {:>24}",
            s.model.name(),
            s.n_ok,
            q(&s.rho),
            q(&s.lambda),
            q(&s.alpha)
        );
    }
    Ok(result)
}

#[allow(dead_code)]
fn main() -> spatial_garch::Result<()> {
    let n_rep = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    run_example(n_rep).map(|_| ())
}
