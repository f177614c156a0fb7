//! Finite-element electrostatics where a boundary value problem is described
//! by a triplet of chart, metric tensor and material parameters.
//!
//! Any member of a material-equivalence class can be used to pose, mesh and
//! solve the problem: the crate moves between triplets with analytic
//! Jacobians, assembles the P1 Galerkin system of the energy inner product,
//! and provides drivers for open-boundary truncation, chart reparameterization
//! and single-mesh motion sweeps.
//!
//! The modules follow the data flow:
//!
//! * [`geometry`] charts, transition maps, Jacobians and metric fields
//! * [`triplet`] the transformation rules between equivalent triplets
//! * [`mesh`] simplicial meshes, structured generation, Gmsh/VTK I/O
//! * [`atlas`] several charts stitched into one global numbering
//! * [`fem`] assembly, Dirichlet elimination, energy and field recovery
//! * [`solver`] preconditioned conjugate gradients
//! * [`applications`] open-boundary, reparameterization and motion drivers
//! * [`cli`] the scenario-file driven command line front end

pub mod applications;
pub mod atlas;
pub mod cli;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod solver;
pub mod triplet;

mod error;

pub use error::Error;
pub use geometry::{ChartMap, CoordVector, Domain, JacobianMatrix, MatrixField, MetricField, Point};
pub use mesh::{BoundaryTag, Mesh, RegionTag};
pub use triplet::{FieldVector, MaterialField, Triplet};
