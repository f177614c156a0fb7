use super::quadrature::{QuadratureChoice, QuadratureRule};
use super::{FemError, SparseSymMatrix};
use crate::geometry::{MetricField, Point};
use crate::linalg::Matrix;
use crate::mesh::{BoundaryTag, Mesh, RegionTag};
use crate::triplet::{effective_coefficient, MaterialField, TripletError, Triplet};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// Where a Dirichlet value is imposed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirichletTarget {
    /// Nodes of all boundary facets with this tag.
    Boundary(BoundaryTag),
    /// Every node of the region (an ideal conductor filling it).
    Region(RegionTag),
}

#[derive(Clone)]
pub enum BoundaryValue {
    Constant(f64),
    /// Evaluated at the node position in the mesh chart.
    Function(Arc<dyn Fn(&Point) -> f64 + Send + Sync>),
    /// Explicit value per node index; every targeted node must be present.
    Nodal(BTreeMap<usize, f64>),
}

impl BoundaryValue {
    pub fn function(f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        BoundaryValue::Function(Arc::new(f))
    }
}

impl fmt::Debug for BoundaryValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryValue::Constant(c) => write!(f, "Constant({c})"),
            BoundaryValue::Function(_) => write!(f, "Function"),
            BoundaryValue::Nodal(m) => write!(f, "Nodal({} nodes)", m.len()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DirichletCondition {
    pub target: DirichletTarget,
    pub value: BoundaryValue,
}

impl DirichletCondition {
    pub fn boundary(tag: BoundaryTag, value: BoundaryValue) -> Self {
        DirichletCondition { target: DirichletTarget::Boundary(tag), value }
    }

    pub fn region(tag: RegionTag, value: BoundaryValue) -> Self {
        DirichletCondition { target: DirichletTarget::Region(tag), value }
    }
}

/// A boundary value problem: mesh in the triplet's chart, the triplet, and
/// Dirichlet data. Facets without a condition are natural (zero flux).
#[derive(Clone, Debug)]
pub struct BvpSpec {
    pub mesh: Mesh,
    pub triplet: Triplet,
    pub dirichlet: Vec<DirichletCondition>,
}

impl BvpSpec {
    pub fn new(mesh: Mesh, triplet: Triplet, dirichlet: Vec<DirichletCondition>) -> Result<Self, FemError> {
        let spec = BvpSpec { mesh, triplet, dirichlet };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks Dirichlet targets, material coverage and field dimensions.
    pub fn validate(&self) -> Result<(), FemError> {
        if self.dirichlet.is_empty() {
            return Err(FemError::NoDirichlet);
        }
        let (btags, rtags) = (self.mesh.boundary_tags(), self.mesh.region_tags());
        for c in &self.dirichlet {
            match c.target {
                DirichletTarget::Boundary(t) if !btags.contains(&t) => return Err(FemError::UnknownBoundaryTag(t)),
                DirichletTarget::Region(t) if !rtags.contains(&t) => return Err(FemError::UnknownRegionTag(t)),
                _ => {}
            }
        }
        let n = self.mesh.dim();
        for &region in &rtags {
            if !self.triplet.material.contains(region) {
                return Err(FemError::MissingMaterial(region));
            }
            let e = self.mesh.elements().iter().position(|e| e.region == region).expect("region has elements");
            let c = self.mesh.centroid(e);
            let eps = self.triplet.material.at(region, &c)?;
            let s = self.triplet.metric.at(region, &c);
            for m in [&eps, &s] {
                if m.nrows() != n || m.ncols() != n {
                    return Err(FemError::DimensionMismatch { expected: n, found: m.nrows() });
                }
            }
        }
        self.constraints().map(|_| ())
    }

    pub(crate) fn block(&self) -> Block<'_> {
        Block { mesh: &self.mesh, metric: &self.triplet.metric, material: &self.triplet.material, dofs: None }
    }

    /// Prescribed value per node; the earliest declared condition wins.
    pub fn constraints(&self) -> Result<Vec<Option<f64>>, FemError> {
        let mut out = vec![None; self.mesh.node_count()];
        for c in &self.dirichlet {
            let nodes: BTreeSet<usize> = match c.target {
                DirichletTarget::Boundary(t) => self.mesh.boundary_nodes(t),
                DirichletTarget::Region(t) => self.mesh.region_nodes(t),
            };
            for k in nodes {
                if out[k].is_some() {
                    continue;
                }
                let v = match &c.value {
                    BoundaryValue::Constant(v) => *v,
                    BoundaryValue::Function(f) => f(&self.mesh.nodes()[k]),
                    BoundaryValue::Nodal(map) => *map.get(&k).ok_or(FemError::MissingNodalValue { node: k })?,
                };
                if !v.is_finite() {
                    return Err(FemError::NonFiniteBoundaryValue { node: k });
                }
                out[k] = Some(v);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AssemblyOptions {
    pub quadrature: QuadratureChoice,
    /// Worker threads for element integration; accumulation is always
    /// sequential in element order, so the result does not depend on it.
    pub threads: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { quadrature: QuadratureChoice::Auto, threads: 1 }
    }
}

/// Assembled system. `stiffness` is the matrix before Dirichlet
/// elimination; `matrix`/`rhs` are the eliminated system of full dimension
/// with identity rows on constrained dofs.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub stiffness: SparseSymMatrix,
    pub matrix: SparseSymMatrix,
    pub rhs: Vec<f64>,
    pub constraints: Vec<Option<f64>>,
}

/// P1 gradients (row `a` is `∇λ_a`) and volume of a simplex.
pub fn p1_gradients(points: &[&Point]) -> Result<(Matrix, f64), FemError> {
    let n = points.len() - 1;
    let e = Matrix::from_fn(n, n, |r, c| points[c + 1][r] - points[0][r]);
    let volume = e.determinant() / crate::linalg::factorial(n);
    let inv = match e.try_inverse() {
        Some(inv) if volume > 0.0 && volume.is_finite() => inv,
        _ => return Err(FemError::DegenerateSimplex { volume }),
    };
    let mut g = Matrix::zeros(n + 1, n);
    for k in 0..n {
        for c in 0..n {
            g[(k + 1, c)] = inv[(k, c)];
            g[(0, c)] -= inv[(k, c)];
        }
    }
    Ok((g, volume))
}

/// `∫ ∇φ_aᵀ K ∇φ_b dx` over a P1 simplex, with `K` averaged by `rule`.
pub fn local_stiffness(
    points: &[&Point],
    k: impl Fn(&Point) -> Result<Matrix, TripletError>,
    rule: &QuadratureRule,
) -> Result<Matrix, FemError> {
    let (g, volume) = p1_gradients(points)?;
    let n = g.ncols();
    let mut k_avg = Matrix::zeros(n, n);
    for (x, w) in rule.points(points).iter().zip(&rule.weights) {
        k_avg += k(x)? * *w;
    }
    Ok(&g * k_avg * g.transpose() * volume)
}

/// One mesh with its fields and optional local-to-global dof map.
pub(crate) struct Block<'a> {
    pub mesh: &'a Mesh,
    pub metric: &'a MetricField,
    pub material: &'a MaterialField,
    pub dofs: Option<&'a [usize]>,
}

impl Block<'_> {
    pub fn dof(&self, node: usize) -> usize {
        self.dofs.map_or(node, |d| d[node])
    }

    pub fn element_dofs(&self, element: usize) -> Vec<usize> {
        self.mesh.elements()[element].nodes.iter().map(|&k| self.dof(k)).collect()
    }

    pub fn rule(&self, region: RegionTag, choice: QuadratureChoice) -> QuadratureRule {
        let dim = self.mesh.dim();
        match choice {
            QuadratureChoice::Centroid => QuadratureRule::centroid(dim),
            QuadratureChoice::HighOrder => QuadratureRule::high_order(dim),
            QuadratureChoice::Auto => {
                let constant = self.metric.field(region).is_cellwise_constant()
                    && self.material.field(region).map_or(false, |f| f.is_cellwise_constant());
                if constant {
                    QuadratureRule::centroid(dim)
                } else {
                    QuadratureRule::high_order(dim)
                }
            }
        }
    }

    pub fn coefficient(&self, region: RegionTag, p: &Point) -> Result<Matrix, TripletError> {
        effective_coefficient(&self.material.at(region, p)?, &self.metric.at(region, p))
    }

    pub fn element_matrix(&self, element: usize, choice: QuadratureChoice) -> Result<Matrix, FemError> {
        let region = self.mesh.elements()[element].region;
        let rule = self.rule(region, choice);
        local_stiffness(&self.mesh.element_points(element), |p| self.coefficient(region, p), &rule)
            .map_err(|e| e.at_element(element))
    }

    pub fn element_matrices(&self, opts: &AssemblyOptions) -> Result<Vec<Matrix>, FemError> {
        let count = self.mesh.element_count();
        if opts.threads <= 1 {
            return (0..count).map(|e| self.element_matrix(e, opts.quadrature)).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| FemError::Parallel(e.to_string()))?;
        pool.install(|| (0..count).into_par_iter().map(|e| self.element_matrix(e, opts.quadrature)).collect())
    }
}

/// Sparsity pattern from element dof lists.
pub(crate) fn pattern(ndof: usize, element_dofs: &[Vec<usize>]) -> SparseSymMatrix {
    let mut rows = vec![Vec::new(); ndof];
    for dofs in element_dofs {
        for &a in dofs {
            rows[a].extend_from_slice(dofs);
        }
    }
    SparseSymMatrix::from_pattern(rows)
}

/// Sums element matrices in element order, row-major within each element.
pub(crate) fn accumulate(matrix: &mut SparseSymMatrix, element_dofs: &[Vec<usize>], locals: &[Matrix]) {
    for (dofs, local) in element_dofs.iter().zip(locals) {
        for (a, &i) in dofs.iter().enumerate() {
            for (b, &j) in dofs.iter().enumerate() {
                let pos = matrix.position(i, j).expect("entry in pattern");
                matrix.values_mut()[pos] += local[(a, b)];
            }
        }
    }
}

pub(crate) fn assemble_blocks(ndof: usize, blocks: &[Block<'_>], opts: &AssemblyOptions) -> Result<SparseSymMatrix, FemError> {
    let mut all_dofs = Vec::new();
    let mut all_locals = Vec::new();
    for block in blocks {
        all_dofs.extend((0..block.mesh.element_count()).map(|e| block.element_dofs(e)));
        all_locals.extend(block.element_matrices(opts)?);
    }
    let mut m = pattern(ndof, &all_dofs);
    accumulate(&mut m, &all_dofs, &all_locals);
    Ok(m)
}

/// Global stiffness matrix before Dirichlet elimination.
pub fn assemble_stiffness(spec: &BvpSpec, opts: &AssemblyOptions) -> Result<SparseSymMatrix, FemError> {
    assemble_blocks(spec.mesh.node_count(), &[spec.block()], opts)
}

/// Element matrix of one element of `spec`.
pub fn element_stiffness(spec: &BvpSpec, element: usize, choice: QuadratureChoice) -> Result<Matrix, FemError> {
    spec.block().element_matrix(element, choice)
}

/// Symmetric elimination: constrained rows and columns become identity,
/// their values move to the right-hand side of the free rows.
pub fn apply_dirichlet(stiffness: &SparseSymMatrix, constraints: &[Option<f64>]) -> (SparseSymMatrix, Vec<f64>) {
    let n = stiffness.dim();
    let mut matrix = stiffness.clone();
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let positions: Vec<(usize, usize)> = matrix.row_positions(i).collect();
        match constraints[i] {
            Some(g) => {
                rhs[i] = g;
                for (j, pos) in positions {
                    matrix.values_mut()[pos] = if i == j { 1.0 } else { 0.0 };
                }
            }
            None => {
                for (j, pos) in positions {
                    if let Some(g) = constraints[j] {
                        rhs[i] -= stiffness.values()[pos] * g;
                        matrix.values_mut()[pos] = 0.0;
                    }
                }
            }
        }
    }
    (matrix, rhs)
}

pub fn assemble(spec: &BvpSpec, opts: &AssemblyOptions) -> Result<LinearSystem, FemError> {
    let stiffness = assemble_stiffness(spec, opts)?;
    let constraints = spec.constraints()?;
    let (matrix, rhs) = apply_dirichlet(&stiffness, &constraints);
    Ok(LinearSystem { stiffness, matrix, rhs, constraints })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured, side_tag, Shape};

    fn unit_triangle() -> [Point; 3] {
        [Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0)]
    }

    #[test]
    fn unit_right_triangle_stiffness() {
        let t = unit_triangle();
        let pts: Vec<&Point> = t.iter().collect();
        let k = local_stiffness(&pts, |_| Ok(Matrix::identity(2, 2)), &QuadratureRule::centroid(2)).unwrap();
        let expected = crate::linalg::from_rows(&[vec![1.0, -0.5, -0.5], vec![-0.5, 0.5, 0.0], vec![-0.5, 0.0, 0.5]]);
        assert!((k - &expected).abs().max() <= 1e-15);
        let k2 = local_stiffness(&pts, |_| Ok(Matrix::identity(2, 2) * 2.0), &QuadratureRule::high_order(2)).unwrap();
        assert!((k2 - expected * 2.0).abs().max() <= 1e-15);
    }

    #[test]
    fn rows_sum_to_zero() {
        let t = [Point::xyz(0.1, 0.0, 0.0), Point::xyz(1.0, 0.2, 0.0), Point::xyz(0.0, 1.0, 0.3), Point::xyz(0.2, 0.1, 1.0)];
        let pts: Vec<&Point> = t.iter().collect();
        let k = local_stiffness(&pts, |p| Ok(Matrix::identity(3, 3) * (1.0 + p[0])), &QuadratureRule::high_order(3)).unwrap();
        for r in 0..4 {
            assert!(k.row(r).sum().abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_simplex_rejected() {
        let t = [Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(2.0, 0.0)];
        let pts: Vec<&Point> = t.iter().collect();
        let r = local_stiffness(&pts, |_| Ok(Matrix::identity(2, 2)), &QuadratureRule::centroid(2));
        assert!(matches!(r, Err(FemError::DegenerateSimplex { .. })));
    }

    fn square_spec(n: usize) -> BvpSpec {
        let mesh = generate_structured(&Shape::Box { min: vec![0.0, 0.0], max: vec![1.0, 1.0] }, &[n, n]).unwrap();
        let triplet = Triplet::standard(2, MaterialField::new().scalar(1, 2, 1.0));
        let bc = vec![
            DirichletCondition::boundary(side_tag(0, false), BoundaryValue::Constant(0.0)),
            DirichletCondition::boundary(side_tag(0, true), BoundaryValue::Constant(1.0)),
        ];
        BvpSpec::new(mesh, triplet, bc).unwrap()
    }

    #[test]
    fn constants_in_kernel_and_symmetric() {
        let spec = square_spec(5);
        let a = assemble_stiffness(&spec, &AssemblyOptions::default()).unwrap();
        assert!(a.mul_vec(&vec![1.0; a.dim()]).iter().all(|v| v.abs() < 1e-12));
        assert_eq!(a.relative_asymmetry(), 0.0);
    }

    #[test]
    fn parallel_assembly_is_bitwise_identical() {
        let spec = square_spec(12);
        let seq = assemble_stiffness(&spec, &AssemblyOptions::default()).unwrap();
        let par = assemble_stiffness(&spec, &AssemblyOptions { threads: 4, ..Default::default() }).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn first_declared_condition_wins() {
        let mut spec = square_spec(2);
        spec.dirichlet.push(DirichletCondition::boundary(side_tag(1, false), BoundaryValue::Constant(7.0)));
        let c = spec.constraints().unwrap();
        // Corner (0,0) is on the left side (declared first) and the bottom.
        assert_eq!(c[0], Some(0.0));
        assert_eq!(c[1], Some(7.0));
    }

    #[test]
    fn validation_errors() {
        let spec = square_spec(2);
        let r = BvpSpec::new(spec.mesh.clone(), spec.triplet.clone(), vec![]);
        assert!(matches!(r, Err(FemError::NoDirichlet)));
        let bad = vec![DirichletCondition::boundary(42, BoundaryValue::Constant(0.0))];
        assert!(matches!(BvpSpec::new(spec.mesh.clone(), spec.triplet.clone(), bad), Err(FemError::UnknownBoundaryTag(42))));
        let t = Triplet::standard(2, MaterialField::new().scalar(9, 2, 1.0));
        assert!(matches!(BvpSpec::new(spec.mesh.clone(), t, spec.dirichlet.clone()), Err(FemError::MissingMaterial(1))));
    }

    #[test]
    fn elimination_keeps_symmetry() {
        let spec = square_spec(3);
        let sys = assemble(&spec, &AssemblyOptions::default()).unwrap();
        assert_eq!(sys.matrix.relative_asymmetry(), 0.0);
        for (i, c) in sys.constraints.iter().enumerate() {
            if let Some(g) = c {
                assert_eq!(sys.rhs[i], *g);
                assert_eq!(sys.matrix.get(i, i), 1.0);
            }
        }
    }
}
