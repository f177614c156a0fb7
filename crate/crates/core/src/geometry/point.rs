use super::GeometryError;
use crate::linalg::{Matrix, Vector};
use std::ops::Index;

/// A tuple of chart coordinates (dimension 2 or 3 in practice).
#[derive(Clone, Debug, PartialEq)]
pub struct Point(Vector);

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        Point(Vector::from_column_slice(coords))
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Point::new(&[x, y])
    }

    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Point::new(&[x, y, z])
    }

    pub fn from_vector(v: Vector) -> Self {
        Point(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &Vector {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<(), GeometryError> {
        if self.dim() == n {
            Ok(())
        } else {
            Err(GeometryError::DimensionMismatch { expected: n, found: self.dim() })
        }
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vector> for Point {
    fn from(v: Vector) -> Self {
        Point(v)
    }
}

/// Coordinate image of a tangent vector, attached to its base point.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordVector {
    pub components: Vector,
    pub base: Point,
}

impl CoordVector {
    pub fn new(base: Point, components: &[f64]) -> Self {
        CoordVector { components: Vector::from_column_slice(components), base }
    }
}

/// Jacobian of a chart or transition map at `at`; `image` is where `at` lands.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianMatrix {
    pub entries: Matrix,
    pub at: Point,
    pub image: Point,
}

impl JacobianMatrix {
    /// Jacobian whose image point is unknown or irrelevant (recorded as `at`).
    pub fn new(entries: Matrix, at: Point) -> Self {
        JacobianMatrix { entries, image: at.clone(), at }
    }

    pub fn det(&self) -> f64 {
        self.entries.determinant()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn inverse(&self) -> Result<Matrix, GeometryError> {
        let det = self.det();
        if !(det.abs() > 1e-300) {
            return Err(GeometryError::SingularJacobian { det });
        }
        self.entries.clone().try_inverse().ok_or(GeometryError::SingularJacobian { det })
    }
}
