//! A strip 1e5 long and 1 high. The structured mesh of the physical strip is
//! rejected for its aspect ratio; compressing the long axis into a unit
//! chart keeps the elements well shaped and the energy matches the 1D
//! reduction.

use chartfem::applications::fixtures::ScaleStress;
use chartfem::fem::{solve_bvp, AssemblyOptions};
use chartfem::mesh::quality;
use chartfem::solver::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stress = ScaleStress::default();
    match stress.standard_mesh() {
        Ok(_) => println!("standard mesh accepted"),
        Err(e) => println!("standard mesh rejected: {e}"),
    }
    let spec = stress.compressed_spec()?;
    let q = quality(&spec.mesh);
    println!("compressed mesh aspect ratios: min {:.3}, max {:.3}", q.min, q.max);
    let w = solve_bvp(&spec, &AssemblyOptions::default(), &SolverConfig::default().with_tol(1e-12))?.energy;
    let reference = stress.reference_energy();
    println!("energy {w:.9e}, 1D reduction {reference:.9e}, relative gap {:.2e}", (w - reference).abs() / reference);
    Ok(())
}
