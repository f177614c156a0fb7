use super::assembly::{assemble, p1_gradients, AssemblyOptions, Block, BvpSpec};
use super::quadrature::QuadratureChoice;
use super::FemError;
use crate::linalg::Vector;
use crate::solver::{self, SolverConfig};
use crate::triplet::FieldVector;

/// Nodal potential with derived element fields and the energy `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub potential: Vec<f64>,
    /// `E = −S⁻¹∇u` per element, evaluated at the centroid.
    pub fields: Vec<FieldVector>,
    /// `∫ Eᵀ S ε E dv` without a factor ½.
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
    pub preconditioner_fell_back: bool,
}

/// Assembles, eliminates and solves `spec`.
pub fn solve_bvp(spec: &BvpSpec, opts: &AssemblyOptions, cfg: &SolverConfig) -> Result<Solution, FemError> {
    let system = assemble(spec, opts)?;
    let report = solver::solve(&system.matrix, &system.rhs, cfg)?;
    solution_from_potential(spec, report.x, opts.quadrature, report.iterations, report.residual, report.preconditioner_fell_back)
}

pub(crate) fn solution_from_potential(
    spec: &BvpSpec,
    potential: Vec<f64>,
    quadrature: QuadratureChoice,
    iterations: usize,
    residual: f64,
    preconditioner_fell_back: bool,
) -> Result<Solution, FemError> {
    let fields = element_fields(spec, &potential)?;
    let energy = energy_of(spec, &potential, quadrature)?;
    Ok(Solution { potential, fields, energy, iterations, residual, preconditioner_fell_back })
}

fn element_gradient(block: &Block<'_>, element: usize, u: &[f64]) -> Result<Vector, FemError> {
    let (g, _) = p1_gradients(&block.mesh.element_points(element)).map_err(|e| e.at_element(element))?;
    let dofs = block.element_dofs(element);
    let values = Vector::from_iterator(dofs.len(), dofs.iter().map(|&d| u[d]));
    Ok(g.transpose() * values)
}

fn block_field(block: &Block<'_>, element: usize, u: &[f64], label: &str) -> Result<FieldVector, FemError> {
    let grad = element_gradient(block, element, u)?;
    let region = block.mesh.elements()[element].region;
    let c = block.mesh.centroid(element);
    let s = block.metric.at(region, &c);
    let s_inv = s.try_inverse().ok_or_else(|| FemError::from(crate::triplet::TripletError::SingularMetric).at_element(element))?;
    Ok(FieldVector::new(-(s_inv * grad), c, label))
}

pub(crate) fn block_energy(block: &Block<'_>, u: &[f64], choice: QuadratureChoice) -> Result<f64, FemError> {
    let mut w = 0.0;
    for element in 0..block.mesh.element_count() {
        let pts = block.mesh.element_points(element);
        let (g, volume) = p1_gradients(&pts).map_err(|e| e.at_element(element))?;
        let dofs = block.element_dofs(element);
        let grad = g.transpose() * Vector::from_iterator(dofs.len(), dofs.iter().map(|&d| u[d]));
        let region = block.mesh.elements()[element].region;
        let rule = block.rule(region, choice);
        let mut local = 0.0;
        for (x, weight) in rule.points(&pts).iter().zip(&rule.weights) {
            // Eᵀ S ε E with E = −S⁻¹∇u equals ∇uᵀ (εS⁻¹) ∇u; the latter avoids
            // the cancellation of forming S⁻¹∇u when ε is badly scaled.
            let k = block.coefficient(region, x).map_err(|e| FemError::from(e).at_element(element))?;
            local += weight * grad.dot(&(&k * &grad));
        }
        w += local * volume;
    }
    Ok(w)
}

fn check_len(spec: &BvpSpec, u: &[f64]) -> Result<(), FemError> {
    let n = spec.mesh.node_count();
    if u.len() != n {
        return Err(FemError::DimensionMismatch { expected: n, found: u.len() });
    }
    Ok(())
}

/// `W = Σ_elem ∫ Eᵀ S ε E dx` for a nodal potential.
pub fn energy_of(spec: &BvpSpec, potential: &[f64], quadrature: QuadratureChoice) -> Result<f64, FemError> {
    check_len(spec, potential)?;
    block_energy(&spec.block(), potential, quadrature)
}

/// Energy of a solution with automatic quadrature.
pub fn energy(sol: &Solution, spec: &BvpSpec) -> Result<f64, FemError> {
    energy_of(spec, &sol.potential, QuadratureChoice::Auto)
}

/// `E = −S⁻¹∇u` on one element, with `S` at the centroid.
pub fn element_field(sol: &Solution, spec: &BvpSpec, element: usize) -> Result<FieldVector, FemError> {
    check_len(spec, &sol.potential)?;
    if element >= spec.mesh.element_count() {
        return Err(FemError::NoSuchElement(element));
    }
    block_field(&spec.block(), element, &sol.potential, &spec.triplet.label)
}

pub(crate) fn element_fields(spec: &BvpSpec, u: &[f64]) -> Result<Vec<FieldVector>, FemError> {
    check_len(spec, u)?;
    let block = spec.block();
    (0..spec.mesh.element_count()).map(|e| block_field(&block, e, u, &spec.triplet.label)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_stiffness, BoundaryValue, DirichletCondition};
    use crate::geometry::{MatrixField, MetricField};
    use crate::linalg::diag;
    use crate::mesh::{generate_structured, side_tag, Shape};
    use crate::triplet::{MaterialField, Triplet};

    fn square(n: usize, triplet: Triplet) -> BvpSpec {
        let mesh = generate_structured(&Shape::Box { min: vec![0.0, 0.0], max: vec![1.0, 1.0] }, &[n, n]).unwrap();
        let bc = vec![
            DirichletCondition::boundary(side_tag(0, false), BoundaryValue::Constant(0.0)),
            DirichletCondition::boundary(side_tag(0, true), BoundaryValue::Constant(1.0)),
        ];
        BvpSpec::new(mesh, triplet, bc).unwrap()
    }

    fn cfg() -> SolverConfig {
        SolverConfig::default().with_tol(1e-14)
    }

    #[test]
    fn two_triangle_square_reproduces_linear_solution() {
        let spec = square(1, Triplet::standard(2, MaterialField::new().scalar(1, 2, 1.0)));
        let sol = solve_bvp(&spec, &AssemblyOptions::default(), &cfg()).unwrap();
        for (p, u) in spec.mesh.nodes().iter().zip(&sol.potential) {
            assert!((u - p[0]).abs() <= 1e-14);
        }
        assert!((sol.energy - 1.0).abs() < 1e-14);
        let e = element_field(&sol, &spec, 0).unwrap();
        assert!((e.components[0] + 1.0).abs() < 1e-14 && e.components[1].abs() < 1e-14);
    }

    #[test]
    fn metric_scales_field_and_energy_matches_quadratic_form() {
        let metric = MetricField::uniform("diag", MatrixField::constant(diag(&[2.0, 1.0])));
        let material = MaterialField::new().with_region(1, MatrixField::constant(diag(&[2.0, 1.0])));
        let spec = square(4, Triplet::new("t", crate::geometry::ChartMap::identity(), metric, material));
        let sol = solve_bvp(&spec, &AssemblyOptions::default(), &cfg()).unwrap();
        let e = element_field(&sol, &spec, 3).unwrap();
        assert!((e.components[0] + 0.5).abs() < 1e-12, "{:?}", e.components);
        let a = assemble_stiffness(&spec, &AssemblyOptions::default()).unwrap();
        assert!((a.quadratic_form(&sol.potential) - sol.energy).abs() < 1e-12);
    }

    #[test]
    fn energy_is_linear_in_material() {
        let s1 = square(3, Triplet::standard(2, MaterialField::new().scalar(1, 2, 1.0)));
        let s3 = square(3, Triplet::standard(2, MaterialField::new().scalar(1, 2, 3.0)));
        let o = AssemblyOptions::default();
        let w1 = solve_bvp(&s1, &o, &cfg()).unwrap().energy;
        let w3 = solve_bvp(&s3, &o, &cfg()).unwrap().energy;
        assert!((w3 - 3.0 * w1).abs() < 1e-12);
    }

    #[test]
    fn constant_dirichlet_everywhere_gives_constant() {
        let mut spec = square(4, Triplet::standard(2, MaterialField::new().scalar(1, 2, 1.0)));
        spec.dirichlet = (1..=4).map(|t| DirichletCondition::boundary(t, BoundaryValue::Constant(2.5))).collect();
        let sol = solve_bvp(&spec, &AssemblyOptions::default(), &cfg()).unwrap();
        assert!(sol.potential.iter().all(|u| (u - 2.5).abs() < 1e-12));
        assert!(sol.energy.abs() < 1e-20);
    }

    #[test]
    fn wrong_length_rejected() {
        let spec = square(1, Triplet::standard(2, MaterialField::new().scalar(1, 2, 1.0)));
        assert!(matches!(energy_of(&spec, &[0.0], QuadratureChoice::Auto), Err(FemError::DimensionMismatch { .. })));
    }
}
