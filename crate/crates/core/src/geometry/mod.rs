//! Coordinate substrate: points, domains, chart maps with analytic
//! Jacobians, push-forwards and metric tensor fields.
//!
//! The abstract manifold never appears as a value. Points of it are identified
//! across charts through transition maps, and tangent vectors only exist as
//! their coordinate images ([`CoordVector`]) moved around by Jacobians.

mod chart;
mod domain;
mod field;
mod point;

pub use chart::{ChartFamily, ChartMap, RadialProfile};
pub use domain::Domain;
pub use field::{MatrixField, MetricField};
pub use point::{CoordVector, JacobianMatrix, Point};

use crate::linalg::Matrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point {point:?} is outside the domain of chart {chart}")]
    PointOutsideDomain { chart: String, point: Vec<f64> },
    #[error("point {point:?} is outside the image of chart {chart}")]
    PointOutsideImage { chart: String, point: Vec<f64> },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("singular Jacobian (det = {det:e})")]
    SingularJacobian { det: f64 },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
}

/// Pushes a coordinate vector forward through `j`: `dr_j = J dr_i`.
///
/// The result is based at the image point recorded in the Jacobian.
pub fn push_forward(j: &JacobianMatrix, v: &CoordVector) -> Result<CoordVector, GeometryError> {
    let n = j.entries.ncols();
    if v.components.len() != n {
        return Err(GeometryError::DimensionMismatch { expected: n, found: v.components.len() });
    }
    Ok(CoordVector { components: &j.entries * &v.components, base: j.image.clone() })
}

/// `vᵀ S w`.
pub fn inner_product(s: &Matrix, v: &CoordVector, w: &CoordVector) -> Result<f64, GeometryError> {
    let n = s.nrows();
    for len in [s.ncols(), v.components.len(), w.components.len()] {
        if len != n {
            return Err(GeometryError::DimensionMismatch { expected: n, found: len });
        }
    }
    Ok(v.components.dot(&(s * &w.components)))
}

/// `true` when `JᵀJ = I` to `1e-10` at every sample, i.e. the chart keeps the
/// Euclidean 2-norm. An empty sample list is vacuously isometric; samples the
/// chart cannot evaluate count as failures.
pub fn check_isometry(chart: &ChartMap, samples: &[Point]) -> bool {
    samples.iter().all(|x| match chart.jacobian(x) {
        Ok(j) => {
            let n = j.entries.nrows();
            let gram = j.entries.transpose() * &j.entries;
            (gram - Matrix::identity(n, n)).amax() <= 1e-10
        }
        Err(_) => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag;

    fn vec2(x: f64, y: f64) -> CoordVector {
        CoordVector::new(Point::xy(0.0, 0.0), &[x, y])
    }

    #[test]
    fn push_forward_examples() {
        let at = Point::xy(0.0, 0.0);
        let id = JacobianMatrix::new(Matrix::identity(2, 2), at.clone());
        assert_eq!(push_forward(&id, &vec2(1.0, 0.0)).unwrap().components.as_slice(), &[1.0, 0.0]);
        let twice = JacobianMatrix::new(Matrix::identity(2, 2) * 2.0, at.clone());
        assert_eq!(push_forward(&twice, &vec2(1.0, 0.0)).unwrap().components.as_slice(), &[2.0, 0.0]);
        let d = JacobianMatrix::new(diag(&[3.0, 5.0]), at);
        assert_eq!(push_forward(&d, &vec2(1.0, 1.0)).unwrap().components.as_slice(), &[3.0, 5.0]);
    }

    #[test]
    fn push_forward_dimension_mismatch() {
        let j = JacobianMatrix::new(Matrix::identity(3, 3), Point::xyz(0.0, 0.0, 0.0));
        assert!(matches!(push_forward(&j, &vec2(1.0, 0.0)), Err(GeometryError::DimensionMismatch { .. })));
    }

    #[test]
    fn inner_product_examples() {
        let i2 = Matrix::identity(2, 2);
        assert_eq!(inner_product(&i2, &vec2(1.0, 0.0), &vec2(0.0, 1.0)).unwrap(), 0.0);
        let s = diag(&[2.0, 3.0]);
        assert_eq!(inner_product(&s, &vec2(1.0, 2.0), &vec2(1.0, 1.0)).unwrap(), 8.0);
        assert!(inner_product(&Matrix::identity(3, 3), &vec2(1.0, 0.0), &vec2(0.0, 1.0)).is_err());
    }

    #[test]
    fn isometry_examples() {
        let samples: Vec<Point> =
            (0..10).map(|k| Point::xy(1.5 + 0.3 * k as f64, -0.7 + 0.2 * k as f64)).collect();
        assert!(check_isometry(&ChartMap::rotation2(0.9), &samples));
        assert!(!check_isometry(&ChartMap::axis_scaling(&[2.0, 1.0]).unwrap(), &samples));
        let shell = ChartMap::kelvin_shell(&[0.0, 0.0], 1.0, 2.0).unwrap();
        assert!(!check_isometry(&shell, &samples));
        assert!(check_isometry(&shell, &[]));
    }
}
