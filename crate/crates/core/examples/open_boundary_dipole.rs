//! Exterior dipole `u = cos θ / r` outside the unit disc, with all of
//! `r > 1` folded into a finite annulus by a Kelvin shell map. Prints the
//! error for two mesh levels.
//!
//! ```text
//! cargo run --release --example open_boundary_dipole -- [n_theta] [n_shell]
//! ```

use chartfem::applications::{exterior_dipole, DipoleConfig};
use chartfem::fem::AssemblyOptions;
use chartfem::solver::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>());
    let n_theta = args.next().transpose()?.unwrap_or(64);
    let n_shell = args.next().transpose()?.unwrap_or(16);
    let cfg = DipoleConfig::new(n_theta, n_shell);
    let opts = AssemblyOptions::default();
    let solver = SolverConfig::default().with_tol(1e-12);

    let mut previous: Option<f64> = None;
    for level in [cfg.clone(), cfg.refined()] {
        let r = exterior_dipole(&level, &opts, &solver)?;
        let rate = previous.map_or(String::new(), |p| format!(", reduction {:.2}", p / r.l2_relative_error));
        println!(
            "{:>7} elements: L2 error {:.3e}, energy {:.6} (exact {:.6}), {} iterations{rate}",
            r.elements, r.l2_relative_error, r.energy, r.exact_energy, r.iterations
        );
        previous = Some(r.l2_relative_error);
    }
    Ok(())
}
