//! Simplicial meshes living in one chart codomain.
//!
//! A [`Mesh`] holds straight P1 simplices (triangles or tetrahedra) with a
//! region tag each, plus tagged boundary facets. Equivalent meshes in other
//! charts are obtained by mapping nodes only ([`map_mesh`]); connectivity and
//! tags never change.

mod generate;
mod msh;
mod quality;
mod vtk;

pub use generate::{annulus_with_radii, generate_structured, side_tag, tensor_grid, Shape, ANNULUS_INNER, ANNULUS_OUTER};
pub use msh::{read_msh, read_msh_str, write_msh, write_msh_string};
pub use quality::{aspect_ratio, check_quality, quality, QualityReport};
pub use vtk::{write_probe_csv, write_vtk, write_vtk_string, VtkField};

use crate::geometry::{ChartMap, GeometryError, Point};
use crate::linalg::{factorial, Matrix};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

pub type RegionTag = u32;
pub type BoundaryTag = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("unsupported mesh dimension {0}")]
    UnsupportedDimension(usize),
    #[error("element {element} references node {node}, mesh has {count} nodes")]
    IndexOutOfRange { element: usize, node: usize, count: usize },
    #[error("element {element} has {found} nodes, expected {expected}")]
    WrongArity { element: usize, expected: usize, found: usize },
    #[error("element {element} is degenerate (signed volume {volume:e})")]
    DegenerateElement { element: usize, volume: f64 },
    #[error("boundary facet {facet} is not a facet of exactly one element ({owners} owners)")]
    FacetNotOnBoundary { facet: usize, owners: usize },
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),
    #[error("{count} elements exceed aspect ratio {threshold:e}; worst is element {worst_element} at {worst_ratio:e}")]
    PoorQuality { count: usize, worst_element: usize, worst_ratio: f64, threshold: f64 },
    #[error("unsupported mesh file content: {0}")]
    UnsupportedVersion(String),
    #[error("malformed mesh file at line {line}: {message}")]
    MalformedFile { line: usize, message: String },
    #[error("field `{name}` has {found} values, expected {expected}")]
    LengthMismatch { name: String, expected: usize, found: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MeshError {
    fn from(e: std::io::Error) -> Self {
        MeshError::Io(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub nodes: Vec<usize>,
    pub region: RegionTag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub nodes: Vec<usize>,
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    dim: usize,
    nodes: Vec<Point>,
    elements: Vec<Element>,
    boundary_facets: Vec<Facet>,
}

/// Signed volume of a simplex given by `dim + 1` points.
pub fn simplex_signed_volume(points: &[&Point]) -> f64 {
    let n = points.len() - 1;
    let e = Matrix::from_fn(n, n, |r, c| points[c + 1][r] - points[0][r]);
    e.determinant() / factorial(n)
}

fn longest_edge(points: &[&Point]) -> f64 {
    let mut h = 0.0_f64;
    for a in 0..points.len() {
        for b in (a + 1)..points.len() {
            h = h.max(points[a].distance(points[b]));
        }
    }
    h
}

fn facet_key(nodes: &[usize]) -> Vec<usize> {
    let mut k = nodes.to_vec();
    k.sort_unstable();
    k
}

impl Mesh {
    /// Validates indices and arities, orients every element positively and
    /// checks that each boundary facet belongs to exactly one element.
    pub fn new(
        dim: usize,
        nodes: Vec<Point>,
        mut elements: Vec<Element>,
        boundary_facets: Vec<Facet>,
    ) -> Result<Mesh, MeshError> {
        if !(dim == 2 || dim == 3) {
            return Err(MeshError::UnsupportedDimension(dim));
        }
        for p in &nodes {
            p.check_dim(dim)?;
        }
        for (id, e) in elements.iter_mut().enumerate() {
            if e.nodes.len() != dim + 1 {
                return Err(MeshError::WrongArity { element: id, expected: dim + 1, found: e.nodes.len() });
            }
            if let Some(&bad) = e.nodes.iter().find(|&&k| k >= nodes.len()) {
                return Err(MeshError::IndexOutOfRange { element: id, node: bad, count: nodes.len() });
            }
            let pts: Vec<&Point> = e.nodes.iter().map(|&k| &nodes[k]).collect();
            let vol = simplex_signed_volume(&pts);
            let h = longest_edge(&pts);
            if !(vol.abs() > 1e-14 * h.powi(dim as i32)) {
                return Err(MeshError::DegenerateElement { element: id, volume: vol });
            }
            if vol < 0.0 {
                e.nodes.swap(0, 1);
            }
        }
        let mut owners: HashMap<Vec<usize>, usize> = HashMap::new();
        for e in &elements {
            for skip in 0..=dim {
                let f: Vec<usize> = e.nodes.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &k)| k).collect();
                *owners.entry(facet_key(&f)).or_default() += 1;
            }
        }
        for (id, f) in boundary_facets.iter().enumerate() {
            if f.nodes.len() != dim {
                return Err(MeshError::WrongArity { element: id, expected: dim, found: f.nodes.len() });
            }
            let count = owners.get(&facet_key(&f.nodes)).copied().unwrap_or(0);
            if count != 1 {
                return Err(MeshError::FacetNotOnBoundary { facet: id, owners: count });
            }
        }
        Ok(Mesh { dim, nodes, elements, boundary_facets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn boundary_facets(&self) -> &[Facet] {
        &self.boundary_facets
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn element_points(&self, element: usize) -> Vec<&Point> {
        self.elements[element].nodes.iter().map(|&k| &self.nodes[k]).collect()
    }

    pub fn signed_volume(&self, element: usize) -> f64 {
        simplex_signed_volume(&self.element_points(element))
    }

    pub fn centroid(&self, element: usize) -> Point {
        let pts = self.element_points(element);
        let mut c = pts[0].coords().clone();
        for p in &pts[1..] {
            c += p.coords();
        }
        Point::from(c / pts.len() as f64)
    }

    pub fn region_tags(&self) -> BTreeSet<RegionTag> {
        self.elements.iter().map(|e| e.region).collect()
    }

    pub fn boundary_tags(&self) -> BTreeSet<BoundaryTag> {
        self.boundary_facets.iter().map(|f| f.tag).collect()
    }

    /// Nodes of all facets carrying `tag`, ascending.
    pub fn boundary_nodes(&self, tag: BoundaryTag) -> BTreeSet<usize> {
        self.boundary_facets.iter().filter(|f| f.tag == tag).flat_map(|f| f.nodes.iter().copied()).collect()
    }

    /// Nodes of all elements in `region`, ascending.
    pub fn region_nodes(&self, region: RegionTag) -> BTreeSet<usize> {
        self.elements.iter().filter(|e| e.region == region).flat_map(|e| e.nodes.iter().copied()).collect()
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in &self.nodes {
            for i in 0..self.dim {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        (lo, hi)
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    /// Facets that belong to exactly one element, in element order.
    pub fn exterior_facets(&self) -> Vec<Vec<usize>> {
        let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut order = Vec::new();
        for e in &self.elements {
            for skip in 0..=self.dim {
                let f: Vec<usize> = e.nodes.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &k)| k).collect();
                let c = count.entry(facet_key(&f)).or_default();
                if *c == 0 {
                    order.push(f);
                }
                *c += 1;
            }
        }
        order.into_iter().filter(|f| count[&facet_key(f)] == 1).collect()
    }

    /// Replaces the boundary facets with the exterior facets for which
    /// `tag_of` returns a tag. Facets it rejects stay untagged.
    pub fn retag_boundary(self, tag_of: impl Fn(&[&Point]) -> Option<BoundaryTag>) -> Result<Mesh, MeshError> {
        let facets = self
            .exterior_facets()
            .into_iter()
            .filter_map(|f| {
                let pts: Vec<&Point> = f.iter().map(|&k| &self.nodes[k]).collect();
                tag_of(&pts).map(|tag| Facet { nodes: f, tag })
            })
            .collect();
        Mesh::new(self.dim, self.nodes, self.elements, facets)
    }

    /// Same connectivity with new node positions; volumes must stay positive.
    pub fn with_nodes(&self, nodes: Vec<Point>) -> Result<Mesh, MeshError> {
        let mesh = Mesh {
            dim: self.dim,
            nodes,
            elements: self.elements.clone(),
            boundary_facets: self.boundary_facets.clone(),
        };
        for id in 0..mesh.element_count() {
            let vol = mesh.signed_volume(id);
            if !(vol > 0.0) {
                return Err(MeshError::DegenerateElement { element: id, volume: vol });
            }
        }
        Ok(mesh)
    }
}

/// Equivalent mesh in another chart: every node is mapped through `chart`,
/// connectivity and tags are kept. Fails if the map folds an element.
pub fn map_mesh(mesh: &Mesh, chart: &ChartMap) -> Result<Mesh, MeshError> {
    let nodes = mesh.nodes.iter().map(|p| chart.forward(p)).collect::<Result<Vec<_>, _>>()?;
    mesh.with_nodes(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> Mesh {
        let nodes = vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(1.0, 1.0), Point::xy(0.0, 1.0)];
        let elements = vec![
            Element { nodes: vec![0, 1, 2], region: 1 },
            Element { nodes: vec![0, 3, 2], region: 1 },
        ];
        let facets = vec![Facet { nodes: vec![0, 1], tag: 3 }, Facet { nodes: vec![3, 2], tag: 4 }];
        Mesh::new(2, nodes, elements, facets).unwrap()
    }

    #[test]
    fn orientation_is_normalized() {
        let m = two_triangles();
        assert!(m.signed_volume(0) > 0.0);
        assert!(m.signed_volume(1) > 0.0);
        assert_eq!(m.elements()[1].nodes, vec![3, 0, 2]);
    }

    #[test]
    fn interior_facet_rejected() {
        let m = two_triangles();
        let err = Mesh::new(2, m.nodes.clone(), m.elements.clone(), vec![Facet { nodes: vec![0, 2], tag: 9 }]);
        assert!(matches!(err, Err(MeshError::FacetNotOnBoundary { owners: 2, .. })));
    }

    #[test]
    fn degenerate_and_out_of_range() {
        let nodes = vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(2.0, 0.0)];
        let e = vec![Element { nodes: vec![0, 1, 2], region: 1 }];
        assert!(matches!(Mesh::new(2, nodes.clone(), e, vec![]), Err(MeshError::DegenerateElement { .. })));
        let e = vec![Element { nodes: vec![0, 1, 5], region: 1 }];
        assert!(matches!(Mesh::new(2, nodes, e, vec![]), Err(MeshError::IndexOutOfRange { node: 5, .. })));
    }

    #[test]
    fn folding_map_rejected() {
        let m = two_triangles();
        let mirror = ChartMap::axis_scaling(&[-1.0, 1.0]).unwrap();
        assert!(matches!(map_mesh(&m, &mirror), Err(MeshError::DegenerateElement { .. })));
    }

    #[test]
    fn exterior_facets_of_square() {
        assert_eq!(two_triangles().exterior_facets().len(), 4);
    }
}
