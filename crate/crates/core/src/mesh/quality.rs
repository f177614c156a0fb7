use super::{Mesh, MeshError};
use crate::geometry::Point;
use crate::linalg::{Matrix, Vector};

/// Per-element shape quality of a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityReport {
    /// `circumradius / (n · inradius)`; 1 for the regular simplex.
    pub aspect_ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub worst_element: usize,
}

/// Normalized aspect ratio of a triangle or tetrahedron.
pub fn aspect_ratio(points: &[&Point]) -> f64 {
    let n = points.len() - 1;
    let edge = |a: usize, b: usize| points[a].coords() - points[b].coords();
    if n == 2 {
        let (a, b, c) = (edge(1, 0).norm(), edge(2, 1).norm(), edge(0, 2).norm());
        let e1 = edge(1, 0);
        let e2 = edge(2, 0);
        let area = 0.5 * (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        let circum = a * b * c / (4.0 * area);
        let inr = area / (0.5 * (a + b + c));
        circum / (2.0 * inr)
    } else {
        let rows: Vec<Vector> = (1..=3).map(|i| edge(i, 0)).collect();
        let m = Matrix::from_fn(3, 3, |r, c| 2.0 * rows[r][c]);
        let rhs = Vector::from_iterator(3, rows.iter().map(|v| v.norm_squared()));
        let circum = m.lu().solve(&rhs).map_or(f64::INFINITY, |c| c.norm());
        let volume = Matrix::from_fn(3, 3, |r, c| rows[c][r]).determinant().abs() / 6.0;
        let face = |a: usize, b: usize, c: usize| {
            let u = edge(b, a);
            let v = edge(c, a);
            0.5 * u.cross(&v).norm()
        };
        let surface = face(0, 1, 2) + face(0, 1, 3) + face(0, 2, 3) + face(1, 2, 3);
        let inr = 3.0 * volume / surface;
        circum / (3.0 * inr)
    }
}

pub fn quality(mesh: &Mesh) -> QualityReport {
    let aspect_ratios: Vec<f64> = (0..mesh.element_count()).map(|e| aspect_ratio(&mesh.element_points(e))).collect();
    let mut worst_element = 0;
    let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for (id, &q) in aspect_ratios.iter().enumerate() {
        min = min.min(q);
        if q > max {
            max = q;
            worst_element = id;
        }
        sum += q;
    }
    let mean = if aspect_ratios.is_empty() { f64::NAN } else { sum / aspect_ratios.len() as f64 };
    QualityReport { aspect_ratios, min, max, mean, worst_element }
}

/// Quality gate used before accepting a generated mesh: every element's
/// aspect ratio must stay at or below `max_aspect_ratio`.
pub fn check_quality(mesh: &Mesh, max_aspect_ratio: f64) -> Result<QualityReport, MeshError> {
    let report = quality(mesh);
    let count = report.aspect_ratios.iter().filter(|&&q| !(q <= max_aspect_ratio)).count();
    if count > 0 {
        return Err(MeshError::PoorQuality {
            count,
            worst_element: report.worst_element,
            worst_ratio: report.max,
            threshold: max_aspect_ratio,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChartMap;
    use crate::mesh::{generate_structured, map_mesh, Element, Shape};

    #[test]
    fn equilateral_is_one() {
        let pts = [Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.5, 3f64.sqrt() / 2.0)];
        let r = aspect_ratio(&pts.iter().collect::<Vec<_>>());
        assert!((r - 1.0).abs() < 1e-14);
        let m = Mesh::new(2, pts.to_vec(), vec![Element { nodes: vec![0, 1, 2], region: 1 }], vec![]).unwrap();
        assert!((quality(&m).max - 1.0).abs() < 1e-14);
    }

    #[test]
    fn regular_tetrahedron_is_one() {
        let pts = [
            Point::xyz(1.0, 1.0, 1.0),
            Point::xyz(1.0, -1.0, -1.0),
            Point::xyz(-1.0, 1.0, -1.0),
            Point::xyz(-1.0, -1.0, 1.0),
        ];
        assert!((aspect_ratio(&pts.iter().collect::<Vec<_>>()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn square_split_is_uniform() {
        let m = generate_structured(&Shape::Box { min: vec![0.0, 0.0], max: vec![1.0, 1.0] }, &[4, 4]).unwrap();
        let q = quality(&m);
        // Right isosceles: R = c/2, r = (a + b - c)/2 with legs 1 and hypotenuse √2.
        let expected = (2f64.sqrt() / 2.0) / (2.0 * (2.0 - 2f64.sqrt()) / 2.0);
        assert!((q.max - q.min).abs() < 1e-12);
        assert!((q.mean - expected).abs() < 1e-12);
    }

    #[test]
    fn stretching_degrades_quality() {
        let m = generate_structured(&Shape::Box { min: vec![0.0, 0.0], max: vec![1.0, 1.0] }, &[4, 4]).unwrap();
        let base = quality(&m).max;
        let stretched = map_mesh(&m, &ChartMap::axis_scaling(&[100.0, 1.0]).unwrap()).unwrap();
        let ratio = quality(&stretched).max / base;
        // Direct computation for legs 100h, h: R ≈ 50.005h, r ≈ h(101 − √10001)/2.
        let (a, b) = (100.0_f64, 1.0_f64);
        let c = (a * a + b * b).sqrt();
        let direct = (c / 2.0) / (2.0 * (a + b - c) / 2.0);
        assert!((quality(&stretched).max - direct).abs() < 1e-9 * direct);
        assert!(ratio > 30.0 && ratio < 300.0);
        assert!(check_quality(&stretched, 10.0).is_err());
        assert!(check_quality(&m, 10.0).is_ok());
    }
}
