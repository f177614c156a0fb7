//! P1 Galerkin discretization of the energy inner product.
//!
//! With `E = −S⁻¹∇u` the energy `W = ∫ Eᵀ S ε E dv` becomes
//! `∫ ∇uᵀ K ∇u dv` with `K = ε S⁻¹`, so the stiffness matrix is the usual
//! one with an anisotropic coefficient. Dirichlet data are eliminated
//! symmetrically; element contributions are accumulated in element order.

mod assembly;
mod compare;
mod partial;
mod post;
mod quadrature;
mod sparse;

pub use assembly::{
    apply_dirichlet, assemble, assemble_stiffness, element_stiffness, local_stiffness, p1_gradients,
    AssemblyOptions, BoundaryValue, BvpSpec, DirichletCondition, DirichletTarget, LinearSystem,
};
pub(crate) use assembly::{assemble_blocks, Block};
pub use compare::{compare_matrices, MatrixComparison};
pub use partial::PartialAssembler;
pub use post::{element_field, energy, energy_of, solve_bvp, Solution};
pub(crate) use post::{block_energy, solution_from_potential};
pub use quadrature::{QuadratureChoice, QuadratureRule};
pub use sparse::SparseSymMatrix;

use crate::mesh::{BoundaryTag, MeshError, RegionTag};
use crate::solver::SolverError;
use crate::triplet::TripletError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FemError {
    #[error(transparent)]
    Triplet(#[from] TripletError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("element {element}: {source}")]
    Element { element: usize, source: Box<FemError> },
    #[error("degenerate simplex (volume {volume:e})")]
    DegenerateSimplex { volume: f64 },
    #[error("no Dirichlet condition: the potential is not grounded")]
    NoDirichlet,
    #[error("boundary tag {0} does not exist in the mesh")]
    UnknownBoundaryTag(BoundaryTag),
    #[error("region tag {0} does not exist in the mesh")]
    UnknownRegionTag(RegionTag),
    #[error("no material for region {0}")]
    MissingMaterial(RegionTag),
    #[error("no Dirichlet value given for node {node}")]
    MissingNodalValue { node: usize },
    #[error("non-finite Dirichlet value at node {node}")]
    NonFiniteBoundaryValue { node: usize },
    #[error("no element {0}")]
    NoSuchElement(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("thread pool: {0}")]
    Parallel(String),
}

impl FemError {
    /// Attaches an element id (once).
    pub(crate) fn at_element(self, element: usize) -> FemError {
        match self {
            e @ FemError::Element { .. } => e,
            e => FemError::Element { element, source: Box::new(e) },
        }
    }

    /// Element id carried by the error, if any.
    pub fn element(&self) -> Option<usize> {
        match self {
            FemError::Element { element, .. } => Some(*element),
            _ => None,
        }
    }
}
