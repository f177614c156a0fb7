//! Rewrites the unit-square problem in a rotated chart squeezed by a factor
//! of 1e5 between the axes, then compares stiffness matrices and energies.

use chartfem::applications::fixtures::unit_square_spec;
use chartfem::applications::{reparameterize, reparameterize_fixed_metric};
use chartfem::fem::{assemble_stiffness, compare_matrices, solve_bvp, AssemblyOptions};
use chartfem::geometry::{ChartMap, MatrixField, MetricField};
use chartfem::linalg::from_rows;
use chartfem::solver::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = unit_square_spec(32)?;
    let g = ChartMap::compose(ChartMap::axis_scaling(&[1e3, 1e-2])?, ChartMap::rotation2(0.7));
    let opts = AssemblyOptions::default();
    let cfg = SolverConfig::default().with_tol(1e-13);
    let reference = assemble_stiffness(&spec, &opts)?;
    let w = solve_bvp(&spec, &opts, &cfg)?.energy;

    // Same metric in both charts: only the material absorbs the map.
    let euclid = reparameterize_fixed_metric(&spec, &g)?;
    // A non-Euclidean metric in the new chart: metric and material share it.
    let skew = MetricField::uniform("S_g", MatrixField::constant(from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]])));
    let general = reparameterize(&spec, &g, skew)?;

    for (name, mapped) in [("euclidean metric", &euclid), ("skew metric", &general)] {
        let c = compare_matrices(&reference, &assemble_stiffness(mapped, &opts)?)?;
        let wg = solve_bvp(mapped, &opts, &cfg)?.energy;
        println!(
            "{name:>16}: Frobenius {:.2e}, max entry {:.2e}, energy gap {:.2e}",
            c.frobenius_relative,
            c.max_entry_deviation,
            (wg - w).abs() / w
        );
    }
    Ok(())
}
