//! Selection-rate study: every model simulated and all four fitted to each
//! replication. Pass the number of replications as the first argument
//! (default 10).

use spatial_garch::select::{run_mc_study, MCStudyResult, StudyConfig};
use spatial_garch::ModelKind;

pub fn run_example(n_rep: usize) -> spatial_garch::Result<MCStudyResult> {
    let cfg = StudyConfig {
        n_rep,
        ..StudyConfig::default()
    };
    let result = run_mc_study(&cfg)?;
    print!("{:>10}", "");
    for k in ModelKind::ALL {
        print!("{:>20}", k.name());
    }
    println!();
    for m in ModelKind::ALL {
        print!("{:>10}", m.name());
        for k in ModelKind::ALL {
            let c = result.cell(m, k).expect("full grid");
            print!("{:>12.3} ({:>4.1}%)", c.mean_loglik, c.selection_pct);
        }
        println!();
    }
    println!("{} replications per row in {:.1}s", n_rep, result.runtime_secs);
    Ok(result)
}

#[allow(dead_code)]
fn main() -> spatial_garch::Result<()> {
    let n_rep = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    run_example(n_rep).map(|_| ())
}
