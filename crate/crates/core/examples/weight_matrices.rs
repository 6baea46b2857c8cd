//! Lattice contiguity matrices: rook and queen templates, row
//! standardisation, directed (lower-triangular) versions and CSV export.

use spatial_garch::weights::joint_triangular_order;
use spatial_garch::{Contiguity, WeightMatrix};

pub fn run_example() -> spatial_garch::Result<(WeightMatrix, WeightMatrix)> {
    let rook = WeightMatrix::grid_contiguity(15, 15, Contiguity::Rook)?;
    let queen = WeightMatrix::grid_contiguity(15, 15, Contiguity::Queen)?;
    println!(
        "rook:  n = {}, links = {}, symmetric = {}",
        rook.n(),
        rook.nnz(),
        rook.is_symmetric()
    );
    println!(
        "queen: n = {}, links = {}, symmetric = {}",
        queen.n(),
        queen.nnz(),
        queen.is_symmetric()
    );
    println!(
        "symmetric rook has a triangular order: {}",
        rook.find_triangular_order().is_some()
    );

    let w1 = rook.row_standardize().lower_triangularize();
    let w2 = queen.row_standardize().lower_triangularize();
    let order = joint_triangular_order(&[&w1, &w2]).expect("lower-triangular pair");
    println!(
        "directed pair: max row sums {:.2} / {:.3}, joint order starts {:?}",
        w1.max_row_sum(),
        w2.max_row_sum(),
        &order[..5]
    );

    let mut csv = Vec::new();
    w1.write_csv(&mut csv)?;
    let text = String::from_utf8(csv).expect("utf-8");
    println!("first lines of the W1* file:");
    for line in text.lines().take(4) {
        println!("  {line}");
    }
    Ok((w1, w2))
}

#[allow(dead_code)]
fn main() -> spatial_garch::Result<()> {
    run_example().map(|_| ())
}
