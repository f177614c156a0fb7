//! Two unit squares side by side. The left one uses the standard chart; the
//! right one is stored in a stretched, rotated and shifted chart with the
//! matching material. Interface nodes are merged into one global system.

use chartfem::applications::euclidean_equivalent_material;
use chartfem::atlas::{solve_atlas, Atlas, AtlasDirichlet, AtlasRegion, Interface};
use chartfem::fem::{AssemblyOptions, BoundaryValue, DirichletCondition};
use chartfem::geometry::{ChartMap, MatrixField, MetricField};
use chartfem::mesh::{generate_structured, side_tag, Shape};
use chartfem::solver::SolverConfig;
use chartfem::triplet::{MaterialField, Triplet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 8;
    let square = |x0: f64| generate_structured(&Shape::Box { min: vec![x0, 0.0], max: vec![x0 + 1.0, 1.0] }, &[n, n]);
    let g = ChartMap::chain(vec![
        ChartMap::axis_scaling(&[3.0, 0.5])?,
        ChartMap::rotation2(0.4),
        ChartMap::translation(&[-2.0, 5.0]),
    ]);
    let right_material = euclidean_equivalent_material(&MatrixField::scalar(2, 3.0), &g);
    let left = Triplet::standard(2, MaterialField::new().scalar(1, 2, 1.0));
    let right = Triplet::new("rotated", g, MetricField::euclidean(2), MaterialField::new().with_region(1, right_material));

    let atlas = Atlas::new(
        vec![AtlasRegion::from_universal_mesh(1, left, &square(0.0)?)?, AtlasRegion::from_universal_mesh(2, right, &square(1.0)?)?],
        vec![Interface { regions: (0, 1), tags: (side_tag(0, true), side_tag(0, false)) }],
    )?;
    let dirichlet = vec![
        AtlasDirichlet { region: 0, condition: DirichletCondition::boundary(side_tag(0, false), BoundaryValue::Constant(0.0)) },
        AtlasDirichlet { region: 1, condition: DirichletCondition::boundary(side_tag(0, true), BoundaryValue::Constant(1.0)) },
    ];
    let sol = solve_atlas(&atlas, &dirichlet, &AssemblyOptions::default(), &SolverConfig::default().with_tol(1e-12))?;

    // Series conductors 1 and 3 over unit lengths: E = 3/4 in the left square.
    println!("{} global dofs, energy {:.12} (exact {:.12})", sol.index.total, sol.energy, 0.75);
    let mid = sol.region_potential(0);
    println!("left square potential range [{:.6}, {:.6}]", mid.iter().copied().fold(f64::INFINITY, f64::min), mid.iter().copied().fold(0.0, f64::max));
    Ok(())
}
