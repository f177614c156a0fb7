//! Several charts covering one domain.
//!
//! Each region carries its own triplet and a mesh drawn in that triplet's
//! chart. Interface nodes are identified by mapping them to the universal
//! chart (the inverse of each region chart), after which all regions share
//! one global dof numbering and are assembled into a single system.

use crate::fem::{
    self, apply_dirichlet, assemble_blocks, AssemblyOptions, Block, BoundaryValue, DirichletCondition, DirichletTarget,
    FemError, LinearSystem,
};
use crate::geometry::{GeometryError, Point};
use crate::mesh::{map_mesh, BoundaryTag, Mesh, MeshError};
use crate::solver::{self, SolverConfig};
use crate::triplet::Triplet;
use std::collections::BTreeSet;
use thiserror::Error;

/// Relative node-matching tolerance (times the bounding-box diagonal).
pub const DEDUP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AtlasError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("interface nodes do not match within {tolerance:e}: {}", describe_unmatched(.unmatched))]
    InterfaceMismatch { tolerance: f64, unmatched: Vec<UnmatchedNode> },
    #[error("no interface declared between regions {from} and {to}")]
    NoSuchInterface { from: usize, to: usize },
    #[error("region index {0} out of range")]
    NoSuchRegion(usize),
    #[error("regions have different dimensions")]
    DimensionMismatch,
    #[error("atlas has no regions")]
    Empty,
}

/// An interface node without a partner on the other side.
#[derive(Debug, Clone, PartialEq)]
pub struct UnmatchedNode {
    pub region: usize,
    pub node: usize,
    /// Distance to the nearest candidate in the universal chart.
    pub distance: f64,
}

fn describe_unmatched(u: &[UnmatchedNode]) -> String {
    let shown: Vec<String> =
        u.iter().take(8).map(|n| format!("region {} node {} (distance {:e})", n.region, n.node, n.distance)).collect();
    let more = if u.len() > 8 { format!(" and {} more", u.len() - 8) } else { String::new() };
    format!("{}{more}", shown.join(", "))
}

#[derive(Clone, Debug)]
pub struct AtlasRegion {
    pub id: u32,
    pub triplet: Triplet,
    /// Mesh in the coordinates of `triplet.chart`.
    pub mesh: Mesh,
}

impl AtlasRegion {
    pub fn new(id: u32, triplet: Triplet, mesh: Mesh) -> Self {
        AtlasRegion { id, triplet, mesh }
    }

    /// Region whose mesh is given in the universal chart and drawn into the
    /// region chart by mapping its nodes.
    pub fn from_universal_mesh(id: u32, triplet: Triplet, universal: &Mesh) -> Result<Self, AtlasError> {
        let mesh = map_mesh(universal, &triplet.chart)?;
        Ok(AtlasRegion { id, triplet, mesh })
    }

    /// Position of `node` in the universal chart.
    pub fn universal_position(&self, node: usize) -> Result<Point, GeometryError> {
        self.triplet.chart.inverse(&self.mesh.nodes()[node])
    }
}

/// Two regions glued along boundary facets tagged `tags.0` in the first and
/// `tags.1` in the second.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interface {
    pub regions: (usize, usize),
    pub tags: (BoundaryTag, BoundaryTag),
}

#[derive(Clone, Debug)]
pub struct Atlas {
    regions: Vec<AtlasRegion>,
    interfaces: Vec<Interface>,
}

/// Region-local node to global dof maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalIndex {
    pub maps: Vec<Vec<usize>>,
    pub total: usize,
}

impl Atlas {
    pub fn new(regions: Vec<AtlasRegion>, interfaces: Vec<Interface>) -> Result<Self, AtlasError> {
        let first = regions.first().ok_or(AtlasError::Empty)?;
        if regions.iter().any(|r| r.mesh.dim() != first.mesh.dim()) {
            return Err(AtlasError::DimensionMismatch);
        }
        for i in &interfaces {
            for r in [i.regions.0, i.regions.1] {
                if r >= regions.len() {
                    return Err(AtlasError::NoSuchRegion(r));
                }
            }
        }
        Ok(Atlas { regions, interfaces })
    }

    pub fn regions(&self) -> &[AtlasRegion] {
        &self.regions
    }

    pub fn interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    pub fn dim(&self) -> usize {
        self.regions[0].mesh.dim()
    }

    fn universal_nodes(&self, region: usize) -> Result<Vec<Point>, AtlasError> {
        let r = &self.regions[region];
        Ok((0..r.mesh.node_count()).map(|k| r.universal_position(k)).collect::<Result<_, _>>()?)
    }

    /// Matching tolerance: [`DEDUP_TOLERANCE`] times the bounding-box
    /// diagonal of all nodes in the universal chart.
    pub fn tolerance(&self) -> Result<f64, AtlasError> {
        let dim = self.dim();
        let (mut lo, mut hi) = (vec![f64::INFINITY; dim], vec![f64::NEG_INFINITY; dim]);
        for r in 0..self.regions.len() {
            for p in self.universal_nodes(r)? {
                for d in 0..dim {
                    lo[d] = lo[d].min(p[d]);
                    hi[d] = hi[d].max(p[d]);
                }
            }
        }
        let diag = lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
        Ok(DEDUP_TOLERANCE * diag)
    }
}

fn nearest(p: &Point, candidates: &[(usize, Point)]) -> Option<(usize, f64)> {
    candidates
        .iter()
        .map(|(k, q)| (*k, p.distance(q)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Global numbering: regions in declaration order, nodes in order, and
/// identified interface nodes share the dof of the first one seen.
pub fn build_global_index(a: &Atlas) -> Result<GlobalIndex, AtlasError> {
    let tolerance = a.tolerance()?;
    let offsets: Vec<usize> = a
        .regions
        .iter()
        .scan(0, |acc, r| {
            let o = *acc;
            *acc += r.mesh.node_count();
            Some(o)
        })
        .collect();
    let total_nodes: usize = a.regions.iter().map(|r| r.mesh.node_count()).sum();
    let mut parent: Vec<usize> = (0..total_nodes).collect();
    let mut unmatched = Vec::new();
    let universal: Vec<Vec<Point>> = (0..a.regions.len()).map(|r| a.universal_nodes(r)).collect::<Result<_, _>>()?;
    for i in &a.interfaces {
        let side = |region: usize, tag: BoundaryTag| -> Vec<(usize, Point)> {
            a.regions[region].mesh.boundary_nodes(tag).into_iter().map(|k| (k, universal[region][k].clone())).collect()
        };
        let (ra, rb) = i.regions;
        let (sa, sb) = (side(ra, i.tags.0), side(rb, i.tags.1));
        for (from, to, rf, rt) in [(&sa, &sb, ra, rb), (&sb, &sa, rb, ra)] {
            for (k, p) in from {
                match nearest(p, to) {
                    Some((m, d)) if d <= tolerance => {
                        let (x, y) = (find(&mut parent, offsets[rf] + k), find(&mut parent, offsets[rt] + m));
                        if x != y {
                            parent[x.max(y)] = x.min(y);
                        }
                    }
                    other => unmatched.push(UnmatchedNode {
                        region: rf,
                        node: *k,
                        distance: other.map_or(f64::INFINITY, |(_, d)| d),
                    }),
                }
            }
        }
    }
    if !unmatched.is_empty() {
        return Err(AtlasError::InterfaceMismatch { tolerance, unmatched });
    }
    let mut dof_of_root = vec![usize::MAX; total_nodes];
    let mut total = 0;
    let mut maps = Vec::with_capacity(a.regions.len());
    for (r, region) in a.regions.iter().enumerate() {
        let mut map = Vec::with_capacity(region.mesh.node_count());
        for k in 0..region.mesh.node_count() {
            let root = find(&mut parent, offsets[r] + k);
            if dof_of_root[root] == usize::MAX {
                dof_of_root[root] = total;
                total += 1;
            }
            map.push(dof_of_root[root]);
        }
        maps.push(map);
    }
    Ok(GlobalIndex { maps, total })
}

/// Interface nodes of `from` expressed in the chart of `to`.
pub fn map_interface_nodes(a: &Atlas, from: usize, to: usize) -> Result<Vec<(usize, Point)>, AtlasError> {
    for r in [from, to] {
        if r >= a.regions.len() {
            return Err(AtlasError::NoSuchRegion(r));
        }
    }
    let tag = a
        .interfaces
        .iter()
        .find_map(|i| match i.regions {
            (x, y) if x == from && y == to => Some(i.tags.0),
            (x, y) if x == to && y == from => Some(i.tags.1),
            _ => None,
        })
        .ok_or(AtlasError::NoSuchInterface { from, to })?;
    let (rf, rt) = (&a.regions[from], &a.regions[to]);
    rf.mesh
        .boundary_nodes(tag)
        .into_iter()
        .map(|k| Ok((k, rt.triplet.chart.forward(&rf.universal_position(k)?)?)))
        .collect()
}

/// Dirichlet condition on one atlas region. Function values are evaluated
/// at the node position in the universal chart.
#[derive(Clone, Debug)]
pub struct AtlasDirichlet {
    pub region: usize,
    pub condition: DirichletCondition,
}

/// Solved atlas problem in global numbering.
#[derive(Clone, Debug, PartialEq)]
pub struct AtlasSolution {
    pub index: GlobalIndex,
    pub potential: Vec<f64>,
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl AtlasSolution {
    /// Nodal values of one region in its local node order.
    pub fn region_potential(&self, region: usize) -> Vec<f64> {
        self.index.maps[region].iter().map(|&d| self.potential[d]).collect()
    }
}

fn blocks<'a>(a: &'a Atlas, index: &'a GlobalIndex) -> Vec<Block<'a>> {
    a.regions
        .iter()
        .zip(&index.maps)
        .map(|(r, map)| Block {
            mesh: &r.mesh,
            metric: &r.triplet.metric,
            material: &r.triplet.material,
            dofs: Some(map.as_slice()),
        })
        .collect()
}

fn atlas_constraints(a: &Atlas, index: &GlobalIndex, dirichlet: &[AtlasDirichlet]) -> Result<Vec<Option<f64>>, AtlasError> {
    if dirichlet.is_empty() {
        return Err(FemError::NoDirichlet.into());
    }
    let mut out = vec![None; index.total];
    for d in dirichlet {
        let region = a.regions.get(d.region).ok_or(AtlasError::NoSuchRegion(d.region))?;
        let nodes: BTreeSet<usize> = match d.condition.target {
            DirichletTarget::Boundary(t) => {
                if !region.mesh.boundary_tags().contains(&t) {
                    return Err(FemError::UnknownBoundaryTag(t).into());
                }
                region.mesh.boundary_nodes(t)
            }
            DirichletTarget::Region(t) => {
                if !region.mesh.region_tags().contains(&t) {
                    return Err(FemError::UnknownRegionTag(t).into());
                }
                region.mesh.region_nodes(t)
            }
        };
        for k in nodes {
            let dof = index.maps[d.region][k];
            if out[dof].is_some() {
                continue;
            }
            let v = match &d.condition.value {
                BoundaryValue::Constant(v) => *v,
                BoundaryValue::Function(f) => f(&region.universal_position(k)?),
                BoundaryValue::Nodal(m) => *m.get(&k).ok_or(FemError::MissingNodalValue { node: k })?,
            };
            if !v.is_finite() {
                return Err(FemError::NonFiniteBoundaryValue { node: k }.into());
            }
            out[dof] = Some(v);
        }
    }
    Ok(out)
}

/// Stitched system of all regions in the global numbering.
pub fn assemble_atlas(
    a: &Atlas,
    index: &GlobalIndex,
    dirichlet: &[AtlasDirichlet],
    opts: &AssemblyOptions,
) -> Result<LinearSystem, AtlasError> {
    for r in &a.regions {
        for region in r.mesh.region_tags() {
            if !r.triplet.material.contains(region) {
                return Err(FemError::MissingMaterial(region).into());
            }
        }
    }
    let stiffness = assemble_blocks(index.total, &blocks(a, index), opts)?;
    let constraints = atlas_constraints(a, index, dirichlet)?;
    let (matrix, rhs) = apply_dirichlet(&stiffness, &constraints);
    Ok(LinearSystem { stiffness, matrix, rhs, constraints })
}

pub fn solve_atlas(
    a: &Atlas,
    dirichlet: &[AtlasDirichlet],
    opts: &AssemblyOptions,
    cfg: &SolverConfig,
) -> Result<AtlasSolution, AtlasError> {
    let index = build_global_index(a)?;
    let system = assemble_atlas(a, &index, dirichlet, opts)?;
    let report = solver::solve(&system.matrix, &system.rhs, cfg).map_err(FemError::from)?;
    let mut energy = 0.0;
    for b in blocks(a, &index) {
        energy += fem::block_energy(&b, &report.x, opts.quadrature)?;
    }
    Ok(AtlasSolution { index, potential: report.x, energy, iterations: report.iterations, residual: report.residual })
}
