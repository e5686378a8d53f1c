//! Relaxes a k = 1 winding texture on the unit square and prints the solver
//! summary. Usage: `cargo run --release --example winding -- [n]`.

use std::time::Instant;

use ldg_core::elastic::ElasticConstants;
use ldg_core::energy::{Assembler, EnergyModel};
use ldg_core::field::{make_field, BoundarySpec, GridSpec, InteriorInit};
use ldg_core::maier_saupe::{BulkParams, BulkPotential};
use ldg_core::minimizer::{minimize, SolverOptions};

fn main() -> ldg_core::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(33);
    let bulk = BulkPotential::new(BulkParams::new(4.0, 5.0))?;
    let model = EnergyModel::new(bulk, ElasticConstants::new(1.0, 0.1, 0.1, 0.1, 0.0));
    let field = make_field(GridSpec::square(n, 1.0), &BoundarySpec::winding(0.4, 1.0, 0.0), InteriorInit::Blend)?;
    let start = Instant::now();
    let (out, report) = minimize(&field, &mut Assembler::new(model), &SolverOptions::default())?;
    println!("n = {n}");
    println!("termination = {}", report.termination.as_str());
    println!("iterations = {}", report.iterations);
    println!("energy = {:.12}", report.final_energy);
    println!("grad_norm = {:.3e}", report.final_grad_norm);
    println!("min margin = {:.6}", out.min_margin());
    println!("elapsed = {:.1?}", start.elapsed());
    Ok(())
}
