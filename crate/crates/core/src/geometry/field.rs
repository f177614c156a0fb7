use super::Point;
use crate::linalg::{self, Matrix};
use crate::mesh::RegionTag;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

type Evaluator = Arc<dyn Fn(&Point) -> Matrix + Send + Sync>;

/// An `n×n` matrix-valued field over a chart codomain.
#[derive(Clone)]
pub enum MatrixField {
    Constant(Matrix),
    /// Evaluated pointwise. `cellwise_constant` promises the value does not
    /// vary inside any element of the mesh the field is used with, which
    /// lets assembly use the one-point rule.
    Pointwise { eval: Evaluator, cellwise_constant: bool },
}

impl MatrixField {
    pub fn constant(m: Matrix) -> Self {
        MatrixField::Constant(m)
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        MatrixField::Constant(Matrix::identity(dim, dim) * value)
    }

    pub fn identity(dim: usize) -> Self {
        MatrixField::Constant(Matrix::identity(dim, dim))
    }

    pub fn pointwise(f: impl Fn(&Point) -> Matrix + Send + Sync + 'static) -> Self {
        MatrixField::Pointwise { eval: Arc::new(f), cellwise_constant: false }
    }

    pub fn cellwise(f: impl Fn(&Point) -> Matrix + Send + Sync + 'static) -> Self {
        MatrixField::Pointwise { eval: Arc::new(f), cellwise_constant: true }
    }

    pub fn eval(&self, p: &Point) -> Matrix {
        match self {
            MatrixField::Constant(m) => m.clone(),
            MatrixField::Pointwise { eval, .. } => eval(p),
        }
    }

    pub fn as_constant(&self) -> Option<&Matrix> {
        match self {
            MatrixField::Constant(m) => Some(m),
            MatrixField::Pointwise { .. } => None,
        }
    }

    pub fn is_cellwise_constant(&self) -> bool {
        match self {
            MatrixField::Constant(_) => true,
            MatrixField::Pointwise { cellwise_constant, .. } => *cellwise_constant,
        }
    }

    /// Exactly the identity matrix everywhere (known without evaluation).
    pub fn is_identity(&self) -> bool {
        matches!(self, MatrixField::Constant(m) if m.is_square() && *m == Matrix::identity(m.nrows(), m.nrows()))
    }
}

impl fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixField::Constant(m) => write!(f, "Constant({:?})", m.as_slice()),
            MatrixField::Pointwise { cellwise_constant, .. } => {
                write!(f, "Pointwise {{ cellwise_constant: {cellwise_constant} }}")
            }
        }
    }
}

/// Metric tensor `S` of a chart, possibly different per region.
#[derive(Clone, Debug)]
pub struct MetricField {
    pub label: String,
    default: MatrixField,
    regions: BTreeMap<RegionTag, MatrixField>,
}

impl MetricField {
    pub fn euclidean(dim: usize) -> Self {
        MetricField { label: "euclidean".into(), default: MatrixField::identity(dim), regions: BTreeMap::new() }
    }

    pub fn uniform(label: impl Into<String>, field: MatrixField) -> Self {
        MetricField { label: label.into(), default: field, regions: BTreeMap::new() }
    }

    pub fn with_region(mut self, region: RegionTag, field: MatrixField) -> Self {
        self.regions.insert(region, field);
        self
    }

    pub fn field(&self, region: RegionTag) -> &MatrixField {
        self.regions.get(&region).unwrap_or(&self.default)
    }

    pub fn at(&self, region: RegionTag, p: &Point) -> Matrix {
        self.field(region).eval(p)
    }

    pub fn is_euclidean_in(&self, region: RegionTag) -> bool {
        self.field(region).is_identity()
    }

    /// First sample where the metric is not symmetric positive definite
    /// (asymmetry above `1e-14` of its norm), if any.
    pub fn find_invalid(&self, region: RegionTag, samples: &[Point]) -> Option<Point> {
        samples
            .iter()
            .find(|p| {
                let s = self.at(region, p);
                !(linalg::relative_asymmetry(&s) <= 1e-14 && linalg::is_spd(&s))
            })
            .cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;

    #[test]
    fn region_override_and_default() {
        let s = from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let m = MetricField::euclidean(2).with_region(3, MatrixField::constant(s.clone()));
        assert!(m.is_euclidean_in(1));
        assert!(!m.is_euclidean_in(3));
        assert_eq!(m.at(3, &Point::xy(0.0, 0.0)), s);
        assert!(m.find_invalid(3, &[Point::xy(0.0, 0.0)]).is_none());
    }

    #[test]
    fn invalid_metric_detected() {
        let bad = from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        let m = MetricField::uniform("bad", MatrixField::constant(bad));
        assert!(m.find_invalid(1, &[Point::xy(0.0, 0.0)]).is_some());
        let asym = from_rows(&[vec![2.0, 0.1], vec![0.0, 2.0]]);
        let m = MetricField::uniform("asym", MatrixField::constant(asym));
        assert!(m.find_invalid(1, &[Point::xy(0.0, 0.0)]).is_some());
    }
}
