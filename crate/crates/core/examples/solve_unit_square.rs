//! Laplace on the unit square with `u = 0` on the left and `u = 1` on the
//! right. The exact solution is `u = x`, so every nodal value is checked.
//!
//! ```text
//! cargo run --example solve_unit_square -- [divisions] [out.vtk]
//! ```

use chartfem::applications::fixtures::unit_square_spec;
use chartfem::fem::{solve_bvp, AssemblyOptions};
use chartfem::mesh::{write_vtk, VtkField};
use chartfem::solver::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(16);
    let spec = unit_square_spec(n)?;
    let sol = solve_bvp(&spec, &AssemblyOptions::default(), &SolverConfig::default().with_tol(1e-12))?;

    let worst = spec.mesh.nodes().iter().zip(&sol.potential).map(|(p, u)| (u - p[0]).abs()).fold(0.0, f64::max);
    println!("{n}x{n} mesh, {} elements", spec.mesh.element_count());
    println!("energy      {:.15}", sol.energy);
    println!("iterations  {}", sol.iterations);
    println!("max |u - x| {worst:.3e}");

    if let Some(path) = args.next() {
        let u = VtkField::NodalScalar { name: "u".into(), values: sol.potential };
        write_vtk(&spec.mesh, &[u], &path)?;
        println!("wrote {path}");
    }
    Ok(())
}
