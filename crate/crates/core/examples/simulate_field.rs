//! One field from each model on the directed 15x15 lattice, written as CSV
//! and PGM heatmaps into a temporary directory.

use spatial_garch::io::{save_field, write_pgm};
use spatial_garch::select::directed_lattice;
use spatial_garch::simulate::simulate_replication;
use spatial_garch::{ModelKind, ModelSpec, ParamVector, SimConfig, SpatialField};

pub fn run_example() -> spatial_garch::Result<Vec<SpatialField>> {
    let design = directed_lattice(15, 15)?;
    let params = ParamVector::new(0.5, 0.4, 1.0)?;
    let dir = std::env::temp_dir().join("spatial-garch-example");
    std::fs::create_dir_all(&dir)?;

    let mut fields = Vec::new();
    for kind in ModelKind::ALL {
        let cfg = SimConfig {
            spec: ModelSpec::default_for(kind),
            params,
            design: design.clone(),
            seed: 1,
            max_rejections: 100,
        };
        let mut field = simulate_replication(&cfg, 0)?;
        field.grid = Some((15, 15));
        field.validate()?;

        let h = field.h.as_ref().expect("simulated");
        let mean_h = h.iter().sum::<f64>() / h.len() as f64;
        let max_abs = field.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("{:9} mean h = {:7.3}  max |y| = {:6.3}", kind.name(), mean_h, max_abs);

        save_field(&field, dir.join(format!("{}.csv", kind.name())))?;
        write_pgm(
            &field.y,
            15,
            15,
            std::fs::File::create(dir.join(format!("{}.pgm", kind.name())))?,
        )?;
        fields.push(field);
    }
    println!("fields written to {}", dir.display());
    Ok(fields)
}

#[allow(dead_code)]
fn main() -> spatial_garch::Result<()> {
    run_example().map(|_| ())
}
