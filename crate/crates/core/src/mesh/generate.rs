use super::{BoundaryTag, Element, Facet, Mesh, MeshError, RegionTag};
use crate::geometry::Point;

/// Shapes understood by [`generate_structured`].
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Axis-aligned box in 2D or 3D.
    Box { min: Vec<f64>, max: Vec<f64> },
    /// 2D annulus `inner <= r <= outer`.
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
}

/// Boundary tag of the `min` side of `axis` in generated boxes; the `max`
/// side is this plus one (2D: left 1, right 2, bottom 3, top 4).
pub fn side_tag(axis: usize, upper: bool) -> BoundaryTag {
    (2 * axis + 1 + upper as usize) as BoundaryTag
}

pub const ANNULUS_INNER: BoundaryTag = 1;
pub const ANNULUS_OUTER: BoundaryTag = 2;

/// Structured conforming mesh with region tag 1.
///
/// Boxes are split into 2 triangles (2D) or 6 tetrahedra (3D) per cell and
/// get side tags from [`side_tag`]; annuli take `[n_theta, n_radial]`
/// divisions and tag the inner circle 1 and the outer circle 2.
pub fn generate_structured(shape: &Shape, divisions: &[usize]) -> Result<Mesh, MeshError> {
    if divisions.iter().any(|&d| d == 0) {
        return Err(MeshError::DegenerateShape("divisions must be at least 1".into()));
    }
    match shape {
        Shape::Box { min, max } => {
            if min.len() != max.len() || divisions.len() != min.len() {
                return Err(MeshError::DegenerateShape("box bounds and divisions must share a dimension".into()));
            }
            let lines: Vec<Vec<f64>> = (0..min.len())
                .map(|k| {
                    let n = divisions[k];
                    (0..=n).map(|i| if i == n { max[k] } else { min[k] + (max[k] - min[k]) * i as f64 / n as f64 }).collect()
                })
                .collect();
            tensor_grid(&lines, |_| 1)
        }
        Shape::Annulus { center, inner, outer } => {
            if divisions.len() != 2 {
                return Err(MeshError::DegenerateShape("annulus needs [n_theta, n_radial] divisions".into()));
            }
            let nr = divisions[1];
            let radii: Vec<f64> =
                (0..=nr).map(|i| if i == nr { *outer } else { inner + (outer - inner) * i as f64 / nr as f64 }).collect();
            annulus_with_radii(*center, &radii, divisions[0], |_| 1)
        }
    }
}

/// Tensor-product grid over the given coordinate lines (2 or 3 axes).
/// `region_of` receives each cell's center.
pub fn tensor_grid(lines: &[Vec<f64>], region_of: impl Fn(&Point) -> RegionTag) -> Result<Mesh, MeshError> {
    let dim = lines.len();
    if !(dim == 2 || dim == 3) {
        return Err(MeshError::UnsupportedDimension(dim));
    }
    for (axis, l) in lines.iter().enumerate() {
        if l.len() < 2 || l.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MeshError::DegenerateShape(format!("axis {axis} needs strictly increasing lines with nonzero extent")));
        }
    }
    let counts: Vec<usize> = lines.iter().map(Vec::len).collect();
    let index = |ijk: &[usize]| -> usize {
        let mut idx = 0;
        for axis in (0..dim).rev() {
            idx = idx * counts[axis] + ijk[axis];
        }
        idx
    };
    let total: usize = counts.iter().product();
    let mut nodes = Vec::with_capacity(total);
    let mut ijk = vec![0usize; dim];
    for flat in 0..total {
        let mut rem = flat;
        for axis in 0..dim {
            ijk[axis] = rem % counts[axis];
            rem /= counts[axis];
        }
        let coords: Vec<f64> = (0..dim).map(|a| lines[a][ijk[a]]).collect();
        nodes.push(Point::new(&coords));
    }

    let cells: Vec<usize> = counts.iter().map(|c| c - 1).collect();
    let n_cells: usize = cells.iter().product();
    let mut elements = Vec::new();
    for flat in 0..n_cells {
        let mut rem = flat;
        let mut base = vec![0usize; dim];
        for axis in 0..dim {
            base[axis] = rem % cells[axis];
            rem /= cells[axis];
        }
        let center: Vec<f64> = (0..dim).map(|a| 0.5 * (lines[a][base[a]] + lines[a][base[a] + 1])).collect();
        let region = region_of(&Point::new(&center));
        let corner = |bits: &[usize]| -> usize {
            let ijk: Vec<usize> = (0..dim).map(|a| base[a] + bits[a]).collect();
            index(&ijk)
        };
        if dim == 2 {
            let (p00, p10, p11, p01) = (corner(&[0, 0]), corner(&[1, 0]), corner(&[1, 1]), corner(&[0, 1]));
            elements.push(Element { nodes: vec![p00, p10, p11], region });
            elements.push(Element { nodes: vec![p00, p11, p01], region });
        } else {
            // Kuhn subdivision: one tetrahedron per axis permutation, all
            // sharing the main diagonal, conforming across cells.
            for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                let mut bits = [0usize; 3];
                let mut tet = vec![corner(&bits)];
                for axis in perm {
                    bits[axis] = 1;
                    tet.push(corner(&bits));
                }
                elements.push(Element { nodes: tet, region });
            }
        }
    }
    let mesh = Mesh::new(dim, nodes, elements, Vec::new())?;
    let bounds: Vec<(f64, f64)> = lines.iter().map(|l| (l[0], l[l.len() - 1])).collect();
    mesh.retag_boundary(|pts| {
        for (axis, (lo, hi)) in bounds.iter().enumerate() {
            if pts.iter().all(|p| p[axis] == *lo) {
                return Some(side_tag(axis, false));
            }
            if pts.iter().all(|p| p[axis] == *hi) {
                return Some(side_tag(axis, true));
            }
        }
        None
    })
}

/// Polar-cell annulus mesh over the given radii (`radii[0]` inner,
/// last outer), `n_theta` cells around, each cell split in two triangles.
/// `region_of` receives the mid radius of each ring.
pub fn annulus_with_radii(
    center: [f64; 2],
    radii: &[f64],
    n_theta: usize,
    region_of: impl Fn(f64) -> RegionTag,
) -> Result<Mesh, MeshError> {
    if n_theta < 3 {
        return Err(MeshError::DegenerateShape("annulus needs at least 3 angular divisions".into()));
    }
    if radii.len() < 2 || !(radii[0] > 0.0) || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MeshError::DegenerateShape("annulus radii must be positive and strictly increasing".into()));
    }
    let mut nodes = Vec::with_capacity(radii.len() * n_theta);
    for &r in radii {
        for j in 0..n_theta {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n_theta as f64;
            nodes.push(Point::xy(center[0] + r * theta.cos(), center[1] + r * theta.sin()));
        }
    }
    let id = |i: usize, j: usize| i * n_theta + (j % n_theta);
    let mut elements = Vec::with_capacity(2 * n_theta * (radii.len() - 1));
    for i in 0..radii.len() - 1 {
        let region = region_of(0.5 * (radii[i] + radii[i + 1]));
        for j in 0..n_theta {
            elements.push(Element { nodes: vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)], region });
            elements.push(Element { nodes: vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)], region });
        }
    }
    let last = radii.len() - 1;
    let mut facets = Vec::with_capacity(2 * n_theta);
    for j in 0..n_theta {
        facets.push(Facet { nodes: vec![id(0, j), id(0, j + 1)], tag: ANNULUS_INNER });
    }
    for j in 0..n_theta {
        facets.push(Facet { nodes: vec![id(last, j), id(last, j + 1)], tag: ANNULUS_OUTER });
    }
    Mesh::new(2, nodes, elements, facets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::simplex_signed_volume;

    fn unit_square(n: usize) -> Mesh {
        generate_structured(&Shape::Box { min: vec![0.0, 0.0], max: vec![1.0, 1.0] }, &[n, n]).unwrap()
    }

    #[test]
    fn unit_square_counts() {
        let m = unit_square(1);
        assert_eq!((m.node_count(), m.element_count(), m.boundary_facets().len()), (4, 2, 4));
        for n in [2, 5, 8] {
            let m = unit_square(n);
            assert_eq!(m.node_count(), (n + 1) * (n + 1));
            assert_eq!(m.element_count(), 2 * n * n);
            assert_eq!(m.boundary_facets().len(), 4 * n);
        }
        assert_eq!(unit_square(3).boundary_tags().into_iter().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn annulus_elements_positive() {
        let m = generate_structured(&Shape::Annulus { center: [0.0, 0.0], inner: 1.0, outer: 2.0 }, &[8, 2]).unwrap();
        assert_eq!(m.element_count(), 32);
        // Raw orientation straight from the generator, before any normalization.
        for e in m.elements() {
            let pts: Vec<&Point> = e.nodes.iter().map(|&k| &m.nodes()[k]).collect();
            assert!(simplex_signed_volume(&pts) > 0.0);
        }
        assert_eq!(m.boundary_nodes(ANNULUS_INNER).len(), 8);
        assert_eq!(m.boundary_nodes(ANNULUS_OUTER).len(), 8);
    }

    #[test]
    fn box3d_is_conforming() {
        let m = generate_structured(&Shape::Box { min: vec![0.0; 3], max: vec![1.0, 2.0, 3.0] }, &[2, 2, 2]).unwrap();
        assert_eq!(m.element_count(), 48);
        let total: f64 = (0..m.element_count()).map(|e| m.signed_volume(e)).sum();
        assert!((total - 6.0).abs() < 1e-12);
        // Each square face of the boundary is two triangles: 6 faces x 4 squares x 2.
        assert_eq!(m.boundary_facets().len(), 48);
        assert_eq!(m.boundary_tags().len(), 6);
    }

    #[test]
    fn zero_extent_rejected() {
        let err = generate_structured(&Shape::Box { min: vec![0.0, 0.0], max: vec![0.0, 1.0] }, &[2, 2]);
        assert!(matches!(err, Err(MeshError::DegenerateShape(_))));
        let err = generate_structured(&Shape::Box { min: vec![0.0, 0.0], max: vec![1.0, 1.0] }, &[0, 2]);
        assert!(matches!(err, Err(MeshError::DegenerateShape(_))));
    }
}
