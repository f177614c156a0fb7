//! Turnkey drivers built on the triplet algebra: chart reparameterization,
//! open-boundary truncation with a shell map, and single-mesh motion sweeps
//! with partial reassembly. [`fixtures`] holds the reference problems used by
//! the examples and the test suite.

pub mod fixtures;
mod motion;
mod open_boundary;
mod reparam;

pub use motion::{motion_csv, motion_sweep, write_motion_csv, MotionMode, MotionOptions, MotionStep, MotionSweep};
pub use open_boundary::{
    exterior_dipole, infinity_condition, open_boundary_triplet, shell_chart, DipoleConfig, DipoleResult,
    OpenBoundarySpec, DIPOLE_INTERIOR, DIPOLE_SHELL,
};
pub use reparam::{equivalent_material, euclidean_equivalent_material, reparameterize, reparameterize_fixed_metric};

use crate::fem::FemError;
use crate::geometry::GeometryError;
use crate::mesh::{MeshError, RegionTag};
use crate::solver::SolverError;
use crate::triplet::TripletError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApplicationError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Triplet(#[from] TripletError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("interior region is not contained in the disc of radius {radius}")]
    RegionNotContained { radius: f64 },
    #[error("shell radii must satisfy 0 < a < b (got a={inner}, b={outer})")]
    InvalidShell { inner: f64, outer: f64 },
    #[error("region {0} must have a Euclidean metric")]
    NonEuclideanMetric(RegionTag),
    #[error("region {0} must have a constant scalar material for metric-change motion")]
    NonScalarMaterial(RegionTag),
    #[error("region {0} does not exist in the mesh")]
    UnknownRegion(RegionTag),
    #[error("step {step}: singular step map on element {element} (det = {det:e})")]
    SingularJacobian { step: usize, element: usize, det: f64 },
    #[error("step {step}: element {element} is inverted or collapsed; the mesh topology would change")]
    TopologyChange { step: usize, element: usize },
    #[error("step {step}: step map is not the identity on fixed element {element}")]
    FixedRegionMoved { step: usize, element: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
