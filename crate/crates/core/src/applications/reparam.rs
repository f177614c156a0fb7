use super::ApplicationError;
use crate::fem::{BoundaryValue, BvpSpec, DirichletCondition};
use crate::geometry::{ChartMap, MatrixField, MetricField, Point};
use crate::linalg::Matrix;
use crate::mesh::map_mesh;
use crate::triplet::{transform_material_euclidean_with, transform_material_with, MaterialField, Triplet};
use std::collections::BTreeMap;

/// Wraps a pointwise evaluator; evaluation failures become NaN, which
/// assembly reports as a non-finite coefficient.
fn field_from(cellwise: bool, f: impl Fn(&Point) -> Option<Matrix> + Send + Sync + 'static) -> MatrixField {
    let eval = move |y: &Point| f(y).unwrap_or_else(|| Matrix::from_element(y.dim(), y.dim(), f64::NAN));
    if cellwise {
        MatrixField::cellwise(eval)
    } else {
        MatrixField::pointwise(eval)
    }
}

fn origin_jacobian(g: &ChartMap, n: usize) -> Option<Matrix> {
    g.jacobian(&Point::new(&vec![0.0; n])).ok().map(|j| j.entries)
}

/// Material in the codomain of `g` equivalent to `eps_f` with a Euclidean
/// metric on both sides: `ε_g(y) = J ε_f(x) Jᵀ / |J|`, `x = g⁻¹(y)`.
pub fn euclidean_equivalent_material(eps_f: &MatrixField, g: &ChartMap) -> MatrixField {
    if let (true, Some(eps)) = (g.is_affine(), eps_f.as_constant()) {
        if let Some(m) = origin_jacobian(g, eps.nrows()).and_then(|j| transform_material_euclidean_with(eps, &j).ok()) {
            return MatrixField::constant(m);
        }
    }
    let cellwise = g.is_piecewise_affine() && eps_f.is_cellwise_constant();
    let (eps_f, g) = (eps_f.clone(), g.clone());
    field_from(cellwise, move |y| {
        let x = g.inverse(y).ok()?;
        let j = g.jacobian(&x).ok()?;
        transform_material_euclidean_with(&eps_f.eval(&x), &j.entries).ok()
    })
}

/// General equivalent material: `ε_j(y) = J ε_i(x) S_i(x)⁻¹ Jᵀ S_j(y) |J⁻¹|`
/// with `x = g⁻¹(y)`.
pub fn equivalent_material(eps_i: &MatrixField, s_i: &MatrixField, s_j: &MatrixField, g: &ChartMap) -> MatrixField {
    if let (true, Some(e), Some(si), Some(sj)) = (g.is_affine(), eps_i.as_constant(), s_i.as_constant(), s_j.as_constant()) {
        if let Some(m) = origin_jacobian(g, e.nrows()).and_then(|j| transform_material_with(e, si, sj, &j).ok()) {
            return MatrixField::constant(m);
        }
    }
    let cellwise =
        g.is_piecewise_affine() && eps_i.is_cellwise_constant() && s_i.is_cellwise_constant() && s_j.is_cellwise_constant();
    let (eps_i, s_i, s_j, g) = (eps_i.clone(), s_i.clone(), s_j.clone(), g.clone());
    field_from(cellwise, move |y| {
        let x = g.inverse(y).ok()?;
        let j = g.jacobian(&x).ok()?;
        transform_material_with(&eps_i.eval(&x), &s_i.eval(&x), &s_j.eval(y), &j.entries).ok()
    })
}

/// Dirichlet data that keep their node values after the mesh is mapped.
fn carry_dirichlet(spec: &BvpSpec) -> Vec<DirichletCondition> {
    spec.dirichlet
        .iter()
        .map(|c| match &c.value {
            BoundaryValue::Function(f) => {
                let nodes = match c.target {
                    crate::fem::DirichletTarget::Boundary(t) => spec.mesh.boundary_nodes(t),
                    crate::fem::DirichletTarget::Region(t) => spec.mesh.region_nodes(t),
                };
                let values: BTreeMap<usize, f64> = nodes.into_iter().map(|k| (k, f(&spec.mesh.nodes()[k]))).collect();
                DirichletCondition { target: c.target, value: BoundaryValue::Nodal(values) }
            }
            _ => c.clone(),
        })
        .collect()
}

/// Moves `spec` to the chart `g ∘ spec.triplet.chart` with the given metric
/// there. Nodes are mapped through `g`, materials follow the general
/// equivalence rule and Dirichlet values stay attached to their nodes.
pub fn reparameterize(spec: &BvpSpec, g: &ChartMap, metric: MetricField) -> Result<BvpSpec, ApplicationError> {
    let mesh = map_mesh(&spec.mesh, g)?;
    let mut material = MaterialField::new();
    for region in spec.mesh.region_tags() {
        let eps_i = spec.triplet.material.field(region)?;
        let s_i = spec.triplet.metric.field(region);
        let s_j = metric.field(region);
        let field = if s_i.is_identity() && s_j.is_identity() {
            euclidean_equivalent_material(eps_i, g)
        } else {
            equivalent_material(eps_i, s_i, s_j, g)
        };
        material.insert(region, field);
    }
    let chart = ChartMap::compose(g.clone(), spec.triplet.chart.clone());
    let label = format!("{} via {}", spec.triplet.label, g.label());
    let triplet = Triplet::new(label, chart, metric, material);
    Ok(BvpSpec::new(mesh, triplet, carry_dirichlet(spec))?)
}

/// Reparameterization with the metric hardwired to the identity in the new
/// chart, so only the materials absorb the change of chart.
pub fn reparameterize_fixed_metric(spec: &BvpSpec, g: &ChartMap) -> Result<BvpSpec, ApplicationError> {
    reparameterize(spec, g, MetricField::euclidean(spec.mesh.dim()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{compare_matrices, solve_bvp, assemble_stiffness, AssemblyOptions};
    use crate::mesh::{generate_structured, side_tag, Shape};
    use crate::solver::SolverConfig;

    fn spec() -> BvpSpec {
        let mesh = generate_structured(&Shape::Box { min: vec![0.0, 0.0], max: vec![2.0, 1.0] }, &[6, 3]).unwrap();
        let t = Triplet::standard(2, MaterialField::new().scalar(1, 2, 2.0));
        let bc = vec![
            DirichletCondition::boundary(side_tag(0, false), BoundaryValue::function(|p| p[1] * p[1])),
            DirichletCondition::boundary(side_tag(0, true), BoundaryValue::Constant(1.0)),
        ];
        BvpSpec::new(mesh, t, bc).unwrap()
    }

    #[test]
    fn identity_leaves_problem_unchanged() {
        let s = spec();
        let r = reparameterize_fixed_metric(&s, &ChartMap::identity()).unwrap();
        assert_eq!(r.mesh, s.mesh);
        let o = AssemblyOptions::default();
        assert_eq!(assemble_stiffness(&r, &o).unwrap(), assemble_stiffness(&s, &o).unwrap());
        assert_eq!(r.constraints().unwrap(), s.constraints().unwrap());
    }

    #[test]
    fn rotation_keeps_scalar_material() {
        let r = reparameterize_fixed_metric(&spec(), &ChartMap::rotation2(0.3)).unwrap();
        let eps = r.triplet.material.at(1, &Point::xy(0.0, 0.0)).unwrap();
        assert!((eps - Matrix::identity(2, 2) * 2.0).amax() < 1e-15);
    }

    #[test]
    fn energies_agree_after_nonlinear_reparameterization() {
        let s = spec();
        let g = ChartMap::piecewise_linear_axis(2, 0, &[0.0, 1.0, 2.0], &[0.0, 0.25, 2.0]).unwrap();
        let r = reparameterize_fixed_metric(&s, &g).unwrap();
        let cfg = SolverConfig::default().with_tol(1e-13);
        let o = AssemblyOptions::default();
        let (w0, w1) = (solve_bvp(&s, &o, &cfg).unwrap().energy, solve_bvp(&r, &o, &cfg).unwrap().energy);
        assert!(((w0 - w1) / w0).abs() < 1e-10, "{w0} {w1}");
        let c = compare_matrices(&assemble_stiffness(&s, &o).unwrap(), &assemble_stiffness(&r, &o).unwrap()).unwrap();
        assert!(c.frobenius_relative < 1e-13);
    }

    #[test]
    fn general_metric_keeps_matrix() {
        let s = spec();
        let sj = crate::linalg::from_rows(&[vec![2.0, 0.4], vec![0.4, 0.7]]);
        let g = ChartMap::affine(crate::linalg::from_rows(&[vec![1.5, 0.2], vec![-0.3, 0.8]]), &[0.1, -2.0]).unwrap();
        let r = reparameterize(&s, &g, MetricField::uniform("s", MatrixField::constant(sj))).unwrap();
        let o = AssemblyOptions::default();
        let c = compare_matrices(&assemble_stiffness(&s, &o).unwrap(), &assemble_stiffness(&r, &o).unwrap()).unwrap();
        assert!(c.frobenius_relative < 1e-13, "{c:?}");
    }
}
