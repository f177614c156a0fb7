//! Parallel-plate capacitor whose gap widens over a sweep. The mesh never
//! moves: each step changes the metric of the gap region, only the affected
//! matrix entries are re-summed, and the solver starts from the previous
//! solution.

use chartfem::applications::fixtures::ParallelPlate;
use chartfem::applications::{motion_csv, motion_sweep, MotionMode, MotionOptions};
use chartfem::solver::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plate = ParallelPlate::default();
    let gaps = [1.0, 1.25, 1.5, 2.0, 3.0];
    let opts = MotionOptions { solver: SolverConfig::default().with_tol(1e-12), measure_cold: true, ..MotionOptions::default() };

    for mode in [MotionMode::MetricChange, MotionMode::MaterialChange] {
        println!("{mode:?}");
        let steps = motion_sweep(&plate.sweep(&gaps, mode)?, &opts)?;
        for (step, gap) in steps.iter().zip(gaps) {
            println!(
                "  gap {gap:<5} energy {:.12} (1/d = {:.12}), {} changed entries, {} warm / {} cold iterations",
                step.solution.energy,
                plate.analytic_energy(gap),
                step.changed_entries,
                step.iterations,
                step.cold_iterations.unwrap_or(0)
            );
        }
        if mode == MotionMode::MetricChange {
            print!("{}", motion_csv(&steps, false));
        }
    }
    Ok(())
}
