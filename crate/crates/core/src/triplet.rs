//! Material-equivalence algebra.
//!
//! Two triplets `{chart, metric, material}` describe the same electrostatic
//! problem when virtual work and stored energy agree for corresponding
//! fields. With `J` the Jacobian of the transition map from chart `i` to
//! chart `j` this fixes
//!
//! * fields: `E_i = S_i⁻¹ Jᵀ S_j E_j`
//! * materials: `ε_j = J ε_i S_i⁻¹ Jᵀ S_j |J⁻¹|`
//!
//! and the two special cases used by the drivers: a hardwired Euclidean
//! metric on both sides (`ε_g = J ε_f Jᵀ / |J|`), and a fixed scalar
//! material with a moving metric (`S_g = |J| J⁻ᵀ J⁻¹`).
//!
//! Determinants enter through the change-of-variables theorem and are taken
//! in absolute value.

use crate::geometry::{ChartMap, GeometryError, JacobianMatrix, MatrixField, MetricField, Point};
use crate::linalg::{self, Matrix, Vector};
use crate::mesh::RegionTag;
use std::collections::BTreeMap;
use thiserror::Error;

/// Relative asymmetry of `ε S⁻¹` tolerated before symmetrization.
pub const COEFFICIENT_ASYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TripletError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("singular Jacobian (det = {det:e})")]
    SingularJacobian { det: f64 },
    #[error("effective coefficient ε·S⁻¹ is asymmetric (relative asymmetry {asymmetry:e})")]
    AsymmetricCoefficient { asymmetry: f64 },
    #[error("metric tensor is not invertible")]
    SingularMetric,
    #[error("no material declared for region {0}")]
    MissingRegion(RegionTag),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("material or metric is not finite at an evaluation point")]
    NonFinite,
}

/// Material parameters `ε` per region, expressed in the owning triplet's
/// chart and relative to its metric.
#[derive(Clone, Debug, Default)]
pub struct MaterialField {
    regions: BTreeMap<RegionTag, MatrixField>,
}

impl MaterialField {
    pub fn new() -> Self {
        MaterialField::default()
    }

    pub fn with_region(mut self, region: RegionTag, field: MatrixField) -> Self {
        self.regions.insert(region, field);
        self
    }

    pub fn scalar(self, region: RegionTag, dim: usize, value: f64) -> Self {
        self.with_region(region, MatrixField::scalar(dim, value))
    }

    pub fn insert(&mut self, region: RegionTag, field: MatrixField) {
        self.regions.insert(region, field);
    }

    pub fn field(&self, region: RegionTag) -> Result<&MatrixField, TripletError> {
        self.regions.get(&region).ok_or(TripletError::MissingRegion(region))
    }

    pub fn at(&self, region: RegionTag, p: &Point) -> Result<Matrix, TripletError> {
        Ok(self.field(region)?.eval(p))
    }

    pub fn regions(&self) -> impl Iterator<Item = (RegionTag, &MatrixField)> {
        self.regions.iter().map(|(k, v)| (*k, v))
    }

    pub fn contains(&self, region: RegionTag) -> bool {
        self.regions.contains_key(&region)
    }
}

/// One representative of a material-equivalence class.
///
/// `chart` is the transition map from the (implicit) universal standard
/// parameterization to the coordinates the mesh and fields live in.
#[derive(Clone, Debug)]
pub struct Triplet {
    pub label: String,
    pub chart: ChartMap,
    pub metric: MetricField,
    pub material: MaterialField,
}

impl Triplet {
    pub fn new(label: impl Into<String>, chart: ChartMap, metric: MetricField, material: MaterialField) -> Self {
        Triplet { label: label.into(), chart, metric, material }
    }

    /// Standard parameterization: identity chart and Euclidean metric.
    pub fn standard(dim: usize, material: MaterialField) -> Self {
        Triplet::new("standard", ChartMap::identity(), MetricField::euclidean(dim), material)
    }

    /// `K = ε S⁻¹` of `region` at `p`.
    pub fn coefficient(&self, region: RegionTag, p: &Point) -> Result<Matrix, TripletError> {
        effective_coefficient(&self.material.at(region, p)?, &self.metric.at(region, p))
    }
}

/// Field intensity `E` at a point, tagged with the triplet it is expressed in.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldVector {
    pub components: Vector,
    pub at: Point,
    pub triplet: String,
}

impl FieldVector {
    pub fn new(components: Vector, at: Point, triplet: impl Into<String>) -> Self {
        FieldVector { components, at, triplet: triplet.into() }
    }

    pub fn in_triplet(mut self, label: impl Into<String>) -> Self {
        self.triplet = label.into();
        self
    }
}

fn checked_det(j: &Matrix) -> Result<f64, TripletError> {
    let det = j.determinant();
    if det.abs() > 1e-300 && det.is_finite() {
        Ok(det)
    } else {
        Err(TripletError::SingularJacobian { det })
    }
}

fn check_square(m: &Matrix, n: usize) -> Result<(), TripletError> {
    if m.nrows() != n || m.ncols() != n {
        return Err(TripletError::DimensionMismatch { expected: n, found: m.nrows().max(m.ncols()) });
    }
    Ok(())
}

fn inverse_metric(s: &Matrix) -> Result<Matrix, TripletError> {
    s.clone().try_inverse().ok_or(TripletError::SingularMetric)
}

/// `ε_j = J ε_i S_i⁻¹ Jᵀ S_j |J⁻¹|`.
pub fn transform_material(
    eps_i: &Matrix,
    s_i: &Matrix,
    s_j: &Matrix,
    j: &JacobianMatrix,
) -> Result<Matrix, TripletError> {
    transform_material_with(eps_i, s_i, s_j, &j.entries)
}

pub(crate) fn transform_material_with(
    eps_i: &Matrix,
    s_i: &Matrix,
    s_j: &Matrix,
    j: &Matrix,
) -> Result<Matrix, TripletError> {
    let n = j.nrows();
    for m in [eps_i, s_i, s_j, j] {
        check_square(m, n)?;
    }
    let det = checked_det(j)?;
    let s_i_inv = inverse_metric(s_i)?;
    Ok(j * eps_i * s_i_inv * j.transpose() * s_j / det.abs())
}

/// `ε_g = J ε_f Jᵀ / |J|`, the Euclidean-to-Euclidean special case.
pub fn transform_material_euclidean(eps_f: &Matrix, j: &JacobianMatrix) -> Result<Matrix, TripletError> {
    transform_material_euclidean_with(eps_f, &j.entries)
}

pub(crate) fn transform_material_euclidean_with(eps_f: &Matrix, j: &Matrix) -> Result<Matrix, TripletError> {
    check_square(eps_f, j.nrows())?;
    let det = checked_det(j)?;
    Ok(j * eps_f * j.transpose() / det.abs())
}

/// `S_g = |J| J⁻ᵀ J⁻¹`: the metric that keeps a scalar material unchanged
/// under the transition with Jacobian `J`.
pub fn metric_for_motion(j: &JacobianMatrix) -> Result<Matrix, TripletError> {
    metric_for_motion_with(&j.entries)
}

pub(crate) fn metric_for_motion_with(j: &Matrix) -> Result<Matrix, TripletError> {
    let det = checked_det(j)?;
    let inv = j.clone().try_inverse().ok_or(TripletError::SingularJacobian { det })?;
    Ok(inv.transpose() * inv * det.abs())
}

/// `E_i = S_i⁻¹ Jᵀ S_j E_j`; the result is based at `j.at` and carries an
/// empty triplet label (see [`FieldVector::in_triplet`]).
pub fn transform_field(
    e_j: &FieldVector,
    s_i: &Matrix,
    s_j: &Matrix,
    j: &JacobianMatrix,
) -> Result<FieldVector, TripletError> {
    let n = j.dim();
    check_square(s_i, n)?;
    check_square(s_j, n)?;
    if e_j.components.len() != n {
        return Err(TripletError::DimensionMismatch { expected: n, found: e_j.components.len() });
    }
    checked_det(&j.entries)?;
    let s_i_inv = inverse_metric(s_i)?;
    let components = s_i_inv * j.entries.transpose() * s_j * &e_j.components;
    Ok(FieldVector::new(components, j.at.clone(), ""))
}

/// Virtual emf `Eᵀ S dr` along the displacement `dr`.
pub fn virtual_emf(e: &FieldVector, s: &Matrix, dr: &crate::geometry::CoordVector) -> Result<f64, TripletError> {
    let n = s.nrows();
    check_square(s, n)?;
    for len in [e.components.len(), dr.components.len()] {
        if len != n {
            return Err(TripletError::DimensionMismatch { expected: n, found: len });
        }
    }
    Ok(e.components.dot(&(s * &dr.components)))
}

/// `K = ε S⁻¹`, the coefficient of the Galerkin form once `E = -S⁻¹∇u` is
/// substituted into the energy. Symmetrized after checking the asymmetry is
/// below [`COEFFICIENT_ASYMMETRY_TOL`].
pub fn effective_coefficient(eps: &Matrix, s: &Matrix) -> Result<Matrix, TripletError> {
    check_square(eps, s.nrows())?;
    check_square(s, s.nrows())?;
    if !eps.iter().chain(s.iter()).all(|v| v.is_finite()) {
        return Err(TripletError::NonFinite);
    }
    let k = eps * inverse_metric(s)?;
    let asymmetry = linalg::relative_asymmetry(&k);
    if !(asymmetry <= COEFFICIENT_ASYMMETRY_TOL) {
        return Err(TripletError::AsymmetricCoefficient { asymmetry });
    }
    Ok(linalg::symmetrize(&k))
}

/// Outcome of [`verify_material_equivalence`].
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    /// Largest `‖ε_actual − ε_expected‖_F / ‖ε_expected‖_F` over all checks.
    pub max_relative_deviation: f64,
    /// Region and sample index of the largest deviation.
    pub worst: Option<(RegionTag, usize)>,
    pub checks: usize,
}

/// Checks that `t_j`'s materials equal `t_i`'s transformed through the
/// transition `t_j.chart ∘ t_i.chart⁻¹`, for every region of `t_i`.
///
/// `samples` are points of the universal chart both triplets map from.
pub fn verify_material_equivalence(
    t_i: &Triplet,
    t_j: &Triplet,
    samples: &[Point],
) -> Result<EquivalenceReport, TripletError> {
    let per_region: Vec<(RegionTag, &[Point])> = t_i.material.regions().map(|(r, _)| (r, samples)).collect();
    verify_material_equivalence_by_region(t_i, t_j, &per_region)
}

/// As [`verify_material_equivalence`], with separate universal-chart
/// samples per region (regions not listed are not checked).
pub fn verify_material_equivalence_by_region(
    t_i: &Triplet,
    t_j: &Triplet,
    samples: &[(RegionTag, &[Point])],
) -> Result<EquivalenceReport, TripletError> {
    let same_chart = t_i.chart == t_j.chart;
    let mut report = EquivalenceReport { max_relative_deviation: 0.0, worst: None, checks: 0 };
    for &(region, points) in samples {
        let eps_field = t_i.material.field(region)?;
        let eps_j_field = t_j.material.field(region)?;
        for (k, p) in points.iter().enumerate() {
            let x_i = t_i.chart.forward(p)?;
            let x_j = t_j.chart.forward(p)?;
            let n = x_i.dim();
            let transition = if same_chart {
                Matrix::identity(n, n)
            } else {
                let ji = t_i.chart.jacobian(p)?;
                let jj = t_j.chart.jacobian(p)?;
                jj.entries * ji.inverse()?
            };
            let expected = transform_material_with(
                &eps_field.eval(&x_i),
                &t_i.metric.at(region, &x_i),
                &t_j.metric.at(region, &x_j),
                &transition,
            )?;
            let actual = eps_j_field.eval(&x_j);
            let scale = expected.norm();
            let dev = if scale == 0.0 { actual.norm() } else { (&actual - &expected).norm() / scale };
            report.checks += 1;
            if dev > report.max_relative_deviation || report.worst.is_none() {
                report.max_relative_deviation = report.max_relative_deviation.max(dev);
                report.worst = Some((region, k));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, from_rows};

    fn jac(m: Matrix) -> JacobianMatrix {
        let n = m.nrows();
        JacobianMatrix::new(m, Point::new(&vec![0.0; n]))
    }

    fn rot(theta: f64) -> Matrix {
        let (s, c) = theta.sin_cos();
        from_rows(&[vec![c, -s], vec![s, c]])
    }

    #[test]
    fn transform_material_identity_cases() {
        let eps = from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]);
        let i2 = Matrix::identity(2, 2);
        assert_eq!(transform_material(&eps, &i2, &i2, &jac(i2.clone())).unwrap(), eps);
        let s = from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]);
        let e = Matrix::identity(2, 2) * 1.5;
        assert_eq!(transform_material(&e, &i2, &s, &jac(i2.clone())).unwrap(), &e * &s);
    }

    #[test]
    fn euclidean_examples() {
        let r = jac(rot(0.4));
        let out = transform_material_euclidean(&(Matrix::identity(2, 2) * 3.0), &r).unwrap();
        assert!((out - Matrix::identity(2, 2) * 3.0).amax() < 1e-15);
        let c = jac(Matrix::identity(2, 2) * 7.0);
        assert_eq!(transform_material_euclidean(&(Matrix::identity(2, 2) * 2.0), &c).unwrap(), Matrix::identity(2, 2) * 2.0);
        let d = jac(diag(&[2.0, 1.0]));
        assert_eq!(transform_material_euclidean(&Matrix::identity(2, 2), &d).unwrap(), diag(&[2.0, 0.5]));
    }

    #[test]
    fn motion_metric_examples() {
        assert_eq!(metric_for_motion(&jac(Matrix::identity(2, 2))).unwrap(), Matrix::identity(2, 2));
        let m = metric_for_motion(&jac(rot(1.1))).unwrap();
        assert!((m - Matrix::identity(2, 2)).amax() < 1e-15);
        assert_eq!(metric_for_motion(&jac(diag(&[2.0, 1.0]))).unwrap(), diag(&[0.5, 2.0]));
    }

    #[test]
    fn singular_jacobian_rejected() {
        let j = jac(from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]));
        let i2 = Matrix::identity(2, 2);
        assert!(matches!(transform_material(&i2, &i2, &i2, &j), Err(TripletError::SingularJacobian { .. })));
        assert!(matches!(transform_material_euclidean(&i2, &j), Err(TripletError::SingularJacobian { .. })));
        assert!(matches!(metric_for_motion(&j), Err(TripletError::SingularJacobian { .. })));
    }

    #[test]
    fn field_examples() {
        let e = FieldVector::new(Vector::from_column_slice(&[0.3, -1.2]), Point::xy(0.0, 0.0), "j");
        let i2 = Matrix::identity(2, 2);
        assert_eq!(transform_field(&e, &i2, &i2, &jac(i2.clone())).unwrap().components, e.components);
        let q = rot(0.6);
        let out = transform_field(&e, &i2, &i2, &jac(q.clone())).unwrap();
        assert!((out.components - q.transpose() * &e.components).amax() < 1e-15);
    }

    #[test]
    fn emf_examples() {
        use crate::geometry::CoordVector;
        let o = Point::xy(0.0, 0.0);
        let e = FieldVector::new(Vector::from_column_slice(&[1.0, 0.0]), o.clone(), "");
        let dr = CoordVector::new(o.clone(), &[0.0, 1.0]);
        assert_eq!(virtual_emf(&e, &Matrix::identity(2, 2), &dr).unwrap(), 0.0);
        let e = FieldVector::new(Vector::from_column_slice(&[1.0, 2.0]), o.clone(), "");
        let dr = CoordVector::new(o, &[1.0, 1.0]);
        assert_eq!(virtual_emf(&e, &diag(&[2.0, 3.0]), &dr).unwrap(), 8.0);
    }

    #[test]
    fn effective_coefficient_examples() {
        let k = effective_coefficient(&(Matrix::identity(2, 2) * 2.0), &Matrix::identity(2, 2)).unwrap();
        assert_eq!(k, Matrix::identity(2, 2) * 2.0);
        let eps = transform_material_euclidean(&Matrix::identity(2, 2), &jac(diag(&[2.0, 1.0]))).unwrap();
        assert_eq!(effective_coefficient(&eps, &Matrix::identity(2, 2)).unwrap(), diag(&[2.0, 0.5]));
    }

    #[test]
    fn asymmetric_coefficient_rejected() {
        let eps = diag(&[1.0, 2.0]);
        let s = from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!(matches!(effective_coefficient(&eps, &s), Err(TripletError::AsymmetricCoefficient { .. })));
    }

    #[test]
    fn equivalence_with_itself_is_exact() {
        let mat = MaterialField::new().scalar(1, 2, 4.0);
        let t = Triplet::new("t", ChartMap::rotation2(0.3), MetricField::euclidean(2), mat);
        let samples = [Point::xy(0.1, 0.2), Point::xy(-3.0, 1.0)];
        let report = verify_material_equivalence(&t, &t, &samples).unwrap();
        assert_eq!(report.max_relative_deviation, 0.0);
        assert_eq!(report.checks, 2);
    }

    #[test]
    fn perturbed_material_detected() {
        let chart = ChartMap::axis_scaling(&[2.0, 0.5]).unwrap();
        let eps_j = transform_material_euclidean(&Matrix::identity(2, 2), &jac(diag(&[2.0, 0.5]))).unwrap();
        let t_i = Triplet::standard(2, MaterialField::new().scalar(1, 2, 1.0));
        let good = Triplet::new("g", chart.clone(), MetricField::euclidean(2),
            MaterialField::new().with_region(1, MatrixField::constant(eps_j.clone())));
        let bad = Triplet::new("b", chart, MetricField::euclidean(2),
            MaterialField::new().with_region(1, MatrixField::constant(eps_j * 1.01)));
        let samples = [Point::xy(0.5, 0.5)];
        assert!(verify_material_equivalence(&t_i, &good, &samples).unwrap().max_relative_deviation < 1e-15);
        let dev = verify_material_equivalence(&t_i, &bad, &samples).unwrap().max_relative_deviation;
        assert!((dev - 1e-2).abs() < 1e-12);
    }

    #[test]
    fn missing_region_reported() {
        let t_i = Triplet::standard(2, MaterialField::new().scalar(1, 2, 1.0));
        let t_j = Triplet::standard(2, MaterialField::new().scalar(2, 2, 1.0));
        assert!(matches!(
            verify_material_equivalence(&t_i, &t_j, &[Point::xy(0.0, 0.0)]),
            Err(TripletError::MissingRegion(1))
        ));
    }
}
