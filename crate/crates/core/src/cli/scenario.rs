//! JSON scenario files and their translation into library objects.

use super::CliError;
use crate::atlas::{Atlas, AtlasDirichlet, AtlasRegion, Interface};
use crate::fem::{AssemblyOptions, BoundaryValue, BvpSpec, DirichletCondition, QuadratureChoice};
use crate::geometry::{ChartMap, Domain, MatrixField, MetricField, Point};
use crate::linalg::{from_rows, Matrix};
use crate::mesh::{
    annulus_with_radii, generate_structured, map_mesh, read_msh, tensor_grid, BoundaryTag, Mesh, RegionTag, Shape,
};
use crate::solver::{PreconditionerKind, SolverConfig};
use crate::triplet::{MaterialField, Triplet};
use schemars::JsonSchema;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// What a scenario asks for. Must agree with the subcommand it is run with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    EquivalenceCheck,
    OpenBoundary,
    Motion,
    MeshTools,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::EquivalenceCheck => "equivalence-check",
            Mode::OpenBoundary => "open-boundary",
            Mode::Motion => "motion",
            Mode::MeshTools => "mesh-tools",
        }
    }
}

/// Top-level scenario document.
#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub problem: String,
    pub dimension: usize,
    pub mode: Mode,
    #[serde(default)]
    pub mesh: Option<MeshDecl>,
    #[serde(default)]
    pub triplet: Option<TripletDecl>,
    /// Second triplet for `equivalence-check`.
    #[serde(default)]
    pub compare: Option<CompareDecl>,
    /// Replaces `mesh` and `triplet` with several charted regions.
    #[serde(default)]
    pub atlas: Option<AtlasDecl>,
    #[serde(default)]
    pub boundary: Vec<BoundaryDecl>,
    #[serde(default)]
    pub solver: SolverDecl,
    #[serde(default)]
    pub assembly: AssemblyDecl,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub open_boundary: Option<OpenBoundaryDecl>,
    #[serde(default)]
    pub motion: Option<MotionDecl>,
}

/// Coordinates a mesh is given in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Already drawn in the triplet's chart.
    #[default]
    Chart,
    /// Drawn in the universal chart; mapped through the triplet's chart.
    Universal,
}

#[derive(Clone, Debug, Deserialize, JsonSchema)]
pub struct MeshDecl {
    #[serde(flatten)]
    pub source: MeshSource,
    #[serde(default)]
    pub frame: Frame,
}

#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum MeshSource {
    /// Gmsh 2.2 ASCII file, relative to the scenario file.
    File(String),
    Box { min: Vec<f64>, max: Vec<f64>, divisions: Vec<usize> },
    /// Annulus with uniform (`divisions = [n_theta, n_radial]`) or explicit radii.
    Annulus {
        center: [f64; 2],
        #[serde(default)]
        inner: Option<f64>,
        #[serde(default)]
        outer: Option<f64>,
        #[serde(default)]
        radii: Option<Vec<f64>>,
        divisions: Vec<usize>,
        #[serde(default)]
        regions: Vec<RadialRegion>,
    },
    TensorGrid {
        lines: Vec<Vec<f64>>,
        #[serde(default)]
        regions: Vec<BoxRegion>,
    },
}

/// Cells whose center lies in the box get `region`; others keep 1.
#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct BoxRegion {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub region: RegionTag,
}

/// Annulus rings with mid radius in `[inner, outer]` get `region`.
#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RadialRegion {
    pub inner: f64,
    pub outer: f64,
    pub region: RegionTag,
}

#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartDecl {
    Identity,
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    Translation { offset: Vec<f64> },
    AxisScaling { factors: Vec<f64> },
    /// 2D rotation by `angle` radians.
    Rotation { angle: f64 },
    Rotation3 { axis: [f64; 3], angle: f64 },
    PolarStretch { center: Vec<f64>, scale: f64, exponent: f64 },
    KelvinShell { center: Vec<f64>, inner: f64, outer: f64 },
    /// Maps applied in list order.
    Chain { maps: Vec<ChartDecl> },
    /// First piece whose domain contains the point is used.
    Piecewise { pieces: Vec<PieceDecl> },
    PiecewiseLinearAxis { axis: usize, knots: Vec<f64>, values: Vec<f64> },
}

impl Default for ChartDecl {
    fn default() -> Self {
        ChartDecl::Identity
    }
}

#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PieceDecl {
    pub chart: ChartDecl,
    pub domain: Domain,
}

/// Metric tensor; Euclidean when nothing is given.
#[derive(Clone, Debug, Default, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MetricDecl {
    #[serde(default)]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub regions: Vec<RegionMatrix>,
}

#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RegionMatrix {
    pub region: RegionTag,
    pub matrix: Vec<Vec<f64>>,
}

/// Exactly one of `scalar` and `matrix`.
#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MaterialDecl {
    pub region: RegionTag,
    #[serde(default)]
    pub scalar: Option<f64>,
    #[serde(default)]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TripletDecl {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub chart: ChartDecl,
    #[serde(default)]
    pub metric: MetricDecl,
    pub materials: Vec<MaterialDecl>,
}

/// The compared triplet's chart is `transition ∘ triplet.chart`. Without
/// `materials` they are derived by the equivalence transform.
#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CompareDecl {
    #[serde(default)]
    pub label: Option<String>,
    pub transition: ChartDecl,
    #[serde(default)]
    pub metric: MetricDecl,
    #[serde(default)]
    pub materials: Option<Vec<MaterialDecl>>,
    /// Random universal sample points per element besides the centroid.
    #[serde(default = "one")]
    pub samples_per_element: usize,
    /// Fail with exit code 3 when the reported deviation exceeds this.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AtlasDecl {
    pub regions: Vec<AtlasRegionDecl>,
    #[serde(default)]
    pub interfaces: Vec<InterfaceDecl>,
}

#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AtlasRegionDecl {
    pub id: u32,
    pub triplet: TripletDecl,
    pub mesh: MeshDecl,
}

#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct InterfaceDecl {
    /// Indices into `atlas.regions`.
    pub regions: [usize; 2],
    pub tags: [BoundaryTag; 2],
}

/// Dirichlet condition on a boundary tag or on every node of a region.
#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct BoundaryDecl {
    #[serde(default)]
    pub boundary: Option<BoundaryTag>,
    #[serde(default)]
    pub region: Option<RegionTag>,
    pub value: ValueDecl,
    /// Index into `atlas.regions` when an atlas is used.
    #[serde(default)]
    pub atlas_region: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum ValueDecl {
    Constant(f64),
    /// `u = constant + gradient · x`.
    Linear { linear: LinearDecl },
    /// Per-node values keyed by node index.
    Nodal { nodal: BTreeMap<usize, f64> },
}

#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LinearDecl {
    pub gradient: Vec<f64>,
    #[serde(default)]
    pub constant: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerDecl {
    None,
    Jacobi,
    Ic0,
}

#[derive(Clone, Debug, Default, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SolverDecl {
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub preconditioner: Option<PreconditionerDecl>,
}

#[derive(Clone, Debug, Default, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AssemblyDecl {
    /// `auto`, `centroid` or `high`.
    #[serde(default)]
    pub quadrature: Option<String>,
    #[serde(default)]
    pub threads: Option<usize>,
}

/// Output paths, relative to the scenario file.
#[derive(Clone, Debug, Default, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub vtk: Option<String>,
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub matrix_market: Option<String>,
    #[serde(default)]
    pub mesh: Option<String>,
}

#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum OpenBoundaryDecl {
    /// Truncate the scenario's own problem with a Kelvin shell; the mesh is
    /// drawn in the shell chart.
    Shell {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
        interior: Domain,
        exterior_regions: Vec<RegionTag>,
        /// Boundary tag of the outer circle, where infinity lands.
        infinity_boundary: BoundaryTag,
    },
    /// Built-in exterior dipole benchmark with a known solution.
    Dipole {
        n_theta: usize,
        n_shell: usize,
        #[serde(default)]
        r0: Option<f64>,
        #[serde(default)]
        n_interior: usize,
        /// Also solve the refined mesh and report the error ratio.
        #[serde(default)]
        refine: bool,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum MotionModeDecl {
    #[default]
    MetricChange,
    MaterialChange,
}

#[derive(Clone, Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MotionDecl {
    pub moving_regions: Vec<RegionTag>,
    /// Step maps from reference to physical coordinates.
    pub steps: Vec<ChartDecl>,
    #[serde(default)]
    pub mode: MotionModeDecl,
    #[serde(default = "yes")]
    pub warm_start: bool,
    #[serde(default = "yes")]
    pub reuse_preconditioner: bool,
    #[serde(default)]
    pub measure_cold: bool,
    /// Adds a wall-time column to the CSV (not reproducible).
    #[serde(default)]
    pub timing: bool,
}

fn yes() -> bool {
    true
}

/// Run-time overrides from the command line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub quadrature: Option<QuadratureChoice>,
    pub tol: Option<f64>,
    pub threads: Option<usize>,
    pub seed: u64,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::validation(Some(field.into()), message)
}

fn matrix(field: &str, rows: &[Vec<f64>], dim: usize) -> Result<Matrix, CliError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(invalid(field, format!("expected a {dim}x{dim} matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid(field, "matrix entries must be finite"));
    }
    Ok(from_rows(rows))
}

fn vector(field: &str, v: &[f64], dim: usize) -> Result<(), CliError> {
    if v.len() != dim {
        return Err(invalid(field, format!("expected {dim} components, found {}", v.len())));
    }
    Ok(())
}

impl Scenario {
    /// Directory that relative paths are resolved against.
    pub fn resolve(base: &Path, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }

    pub fn check_dimension(&self) -> Result<(), CliError> {
        if !(self.dimension == 2 || self.dimension == 3) {
            return Err(invalid("dimension", format!("must be 2 or 3, got {}", self.dimension)));
        }
        Ok(())
    }

    pub fn assembly_options(&self, ov: &Overrides) -> Result<AssemblyOptions, CliError> {
        let mut opts = AssemblyOptions::default();
        if let Some(q) = &self.assembly.quadrature {
            opts.quadrature = q.parse().map_err(|_| invalid("assembly.quadrature", format!("unknown rule `{q}`")))?;
        }
        if let Some(t) = self.assembly.threads {
            opts.threads = t;
        }
        if let Some(q) = ov.quadrature {
            opts.quadrature = q;
        }
        if let Some(t) = ov.threads {
            opts.threads = t;
        }
        if opts.threads == 0 {
            return Err(invalid("assembly.threads", "must be at least 1"));
        }
        Ok(opts)
    }

    pub fn solver_config(&self, ov: &Overrides) -> Result<SolverConfig, CliError> {
        let mut cfg = SolverConfig::default();
        if let Some(t) = self.solver.tol {
            cfg.tol = t;
        }
        if let Some(t) = ov.tol {
            cfg.tol = t;
        }
        cfg.max_iter = self.solver.max_iter;
        if let Some(p) = self.solver.preconditioner {
            cfg.preconditioner = match p {
                PreconditionerDecl::None => PreconditionerKind::None,
                PreconditionerDecl::Jacobi => PreconditionerKind::Jacobi,
                PreconditionerDecl::Ic0 => PreconditionerKind::IncompleteCholesky,
            };
        }
        cfg.validate().map_err(|e| invalid("solver", e.to_string()))?;
        Ok(cfg)
    }

    pub fn mesh_decl(&self) -> Result<&MeshDecl, CliError> {
        self.mesh.as_ref().ok_or_else(|| invalid("mesh", "this mode needs a mesh"))
    }

    pub fn triplet_decl(&self) -> Result<&TripletDecl, CliError> {
        self.triplet.as_ref().ok_or_else(|| invalid("triplet", "this mode needs a triplet"))
    }

    /// Mesh and triplet of a single-chart problem, with the mesh in the
    /// triplet's chart.
    pub fn charted_mesh(&self, base: &Path) -> Result<(Mesh, Triplet), CliError> {
        let triplet = self.triplet_decl()?.build("triplet", self.dimension)?;
        let mesh = self.mesh_decl()?.build("mesh", base, self.dimension, &triplet.chart)?;
        Ok((mesh, triplet))
    }

    pub fn dirichlet(&self, mesh: &Mesh) -> Result<Vec<DirichletCondition>, CliError> {
        self.boundary.iter().enumerate().map(|(i, b)| b.build(&format!("boundary[{i}]"), mesh, self.dimension)).collect()
    }

    pub fn bvp(&self, base: &Path) -> Result<BvpSpec, CliError> {
        let (mesh, triplet) = self.charted_mesh(base)?;
        self.spec_from(mesh, triplet)
    }

    pub fn spec_from(&self, mesh: Mesh, triplet: Triplet) -> Result<BvpSpec, CliError> {
        if self.boundary.is_empty() {
            return Err(invalid("boundary", "at least one Dirichlet condition is required"));
        }
        for region in mesh.region_tags() {
            if !triplet.material.contains(region) {
                return Err(invalid("triplet.materials", format!("no material for mesh region {region}")));
            }
        }
        let bc = self.dirichlet(&mesh)?;
        Ok(BvpSpec::new(mesh, triplet, bc)?)
    }

    pub fn atlas(&self, base: &Path) -> Result<(Atlas, Vec<AtlasDirichlet>), CliError> {
        let decl = self.atlas.as_ref().ok_or_else(|| invalid("atlas", "missing atlas declaration"))?;
        let mut regions = Vec::with_capacity(decl.regions.len());
        for (i, r) in decl.regions.iter().enumerate() {
            let field = format!("atlas.regions[{i}]");
            let triplet = r.triplet.build(&format!("{field}.triplet"), self.dimension)?;
            let mesh = r.mesh.build(&format!("{field}.mesh"), base, self.dimension, &triplet.chart)?;
            regions.push(AtlasRegion::new(r.id, triplet, mesh));
        }
        let mut interfaces = Vec::with_capacity(decl.interfaces.len());
        for (i, f) in decl.interfaces.iter().enumerate() {
            let [a, b] = f.regions;
            if a >= regions.len() || b >= regions.len() || a == b {
                return Err(invalid(format!("atlas.interfaces[{i}].regions"), "must name two distinct regions"));
            }
            for (k, (&r, &t)) in [a, b].iter().zip(&f.tags).enumerate() {
                if !regions[r].mesh.boundary_tags().contains(&t) {
                    return Err(invalid(
                        format!("atlas.interfaces[{i}].tags[{k}]"),
                        format!("boundary tag {t} does not exist in region {r}"),
                    ));
                }
            }
            interfaces.push(Interface { regions: (a, b), tags: (f.tags[0], f.tags[1]) });
        }
        if self.boundary.is_empty() {
            return Err(invalid("boundary", "at least one Dirichlet condition is required"));
        }
        let mut dirichlet = Vec::with_capacity(self.boundary.len());
        for (i, b) in self.boundary.iter().enumerate() {
            let field = format!("boundary[{i}]");
            let r = b.atlas_region.ok_or_else(|| invalid(format!("{field}.atlas_region"), "required with an atlas"))?;
            let region = regions
                .get(r)
                .ok_or_else(|| invalid(format!("{field}.atlas_region"), format!("no atlas region {r}")))?;
            dirichlet.push(AtlasDirichlet { region: r, condition: b.build(&field, &region.mesh, self.dimension)? });
        }
        Ok((Atlas::new(regions, interfaces)?, dirichlet))
    }
}

impl MeshDecl {
    pub fn build(&self, field: &str, base: &Path, dim: usize, chart: &ChartMap) -> Result<Mesh, CliError> {
        let mesh = self.source.build(field, base, dim)?;
        if mesh.dim() != dim {
            return Err(invalid(field, format!("mesh is {}D but the scenario is {dim}D", mesh.dim())));
        }
        match self.frame {
            Frame::Chart => Ok(mesh),
            Frame::Universal => Ok(map_mesh(&mesh, chart)?),
        }
    }
}

impl MeshSource {
    pub fn build(&self, field: &str, base: &Path, dim: usize) -> Result<Mesh, CliError> {
        match self {
            MeshSource::File(path) => {
                let full = Scenario::resolve(base, path);
                if !full.exists() {
                    return Err(invalid(format!("{field}.file"), format!("{} does not exist", full.display())));
                }
                read_msh(&full).map_err(|e| invalid(format!("{field}.file"), e.to_string()))
            }
            MeshSource::Box { min, max, divisions } => {
                vector(&format!("{field}.box.min"), min, dim)?;
                vector(&format!("{field}.box.max"), max, dim)?;
                if divisions.len() != dim {
                    return Err(invalid(format!("{field}.box.divisions"), format!("expected {dim} entries")));
                }
                Ok(generate_structured(&Shape::Box { min: min.clone(), max: max.clone() }, divisions)?)
            }
            MeshSource::Annulus { center, inner, outer, radii, divisions, regions } => {
                let f = format!("{field}.annulus");
                if dim != 2 {
                    return Err(invalid(&f, "annulus meshes are 2D"));
                }
                let radii = match (radii, inner, outer) {
                    (Some(r), None, None) => r.clone(),
                    (None, Some(a), Some(b)) => {
                        if divisions.len() != 2 {
                            return Err(invalid(format!("{f}.divisions"), "expected [n_theta, n_radial]"));
                        }
                        let n = divisions[1].max(1);
                        (0..=n).map(|i| if i == n { *b } else { a + (b - a) * i as f64 / n as f64 }).collect()
                    }
                    _ => return Err(invalid(&f, "give either `radii` or both `inner` and `outer`")),
                };
                let n_theta = *divisions.first().ok_or_else(|| invalid(format!("{f}.divisions"), "missing n_theta"))?;
                let rules = regions.clone();
                Ok(annulus_with_radii(*center, &radii, n_theta, move |r| {
                    rules.iter().find(|z| z.inner <= r && r <= z.outer).map_or(1, |z| z.region)
                })?)
            }
            MeshSource::TensorGrid { lines, regions } => {
                if lines.len() != dim {
                    return Err(invalid(format!("{field}.tensor_grid.lines"), format!("expected {dim} axes")));
                }
                for (i, z) in regions.iter().enumerate() {
                    vector(&format!("{field}.tensor_grid.regions[{i}].min"), &z.min, dim)?;
                    vector(&format!("{field}.tensor_grid.regions[{i}].max"), &z.max, dim)?;
                }
                let rules = regions.clone();
                Ok(tensor_grid(lines, move |c| {
                    rules
                        .iter()
                        .find(|z| (0..c.dim()).all(|k| z.min[k] <= c[k] && c[k] <= z.max[k]))
                        .map_or(1, |z| z.region)
                })?)
            }
        }
    }
}

impl ChartDecl {
    pub fn build(&self, field: &str, dim: usize) -> Result<ChartMap, CliError> {
        let wrap = |e: crate::geometry::GeometryError| invalid(field, e.to_string());
        Ok(match self {
            ChartDecl::Identity => ChartMap::identity(),
            ChartDecl::Affine { matrix: m, offset } => {
                vector(&format!("{field}.offset"), offset, dim)?;
                ChartMap::affine(matrix(&format!("{field}.matrix"), m, dim)?, offset).map_err(wrap)?
            }
            ChartDecl::Translation { offset } => {
                vector(&format!("{field}.offset"), offset, dim)?;
                ChartMap::translation(offset)
            }
            ChartDecl::AxisScaling { factors } => {
                vector(&format!("{field}.factors"), factors, dim)?;
                ChartMap::axis_scaling(factors).map_err(wrap)?
            }
            ChartDecl::Rotation { angle } => {
                if dim != 2 {
                    return Err(invalid(field, "`rotation` is 2D; use `rotation3`"));
                }
                ChartMap::rotation2(*angle)
            }
            ChartDecl::Rotation3 { axis, angle } => {
                if dim != 3 {
                    return Err(invalid(field, "`rotation3` is 3D"));
                }
                ChartMap::rotation3(*axis, *angle).map_err(wrap)?
            }
            ChartDecl::PolarStretch { center, scale, exponent } => {
                vector(&format!("{field}.center"), center, dim)?;
                ChartMap::polar_stretch(center, *scale, *exponent).map_err(wrap)?
            }
            ChartDecl::KelvinShell { center, inner, outer } => {
                vector(&format!("{field}.center"), center, dim)?;
                ChartMap::kelvin_shell(center, *inner, *outer).map_err(wrap)?
            }
            ChartDecl::Chain { maps } => ChartMap::chain(
                maps.iter()
                    .enumerate()
                    .map(|(i, m)| m.build(&format!("{field}.maps[{i}]"), dim))
                    .collect::<Result<_, _>>()?,
            ),
            ChartDecl::Piecewise { pieces } => ChartMap::piecewise(
                pieces
                    .iter()
                    .enumerate()
                    .map(|(i, p)| Ok(p.chart.build(&format!("{field}.pieces[{i}].chart"), dim)?.with_domain(p.domain.clone())))
                    .collect::<Result<_, CliError>>()?,
            )
            .map_err(wrap)?,
            ChartDecl::PiecewiseLinearAxis { axis, knots, values } => {
                ChartMap::piecewise_linear_axis(dim, *axis, knots, values).map_err(wrap)?
            }
        })
    }
}

impl MetricDecl {
    pub fn build(&self, field: &str, dim: usize) -> Result<MetricField, CliError> {
        let mut metric = match &self.matrix {
            None => MetricField::euclidean(dim),
            Some(m) => MetricField::uniform("custom", MatrixField::constant(matrix(&format!("{field}.matrix"), m, dim)?)),
        };
        for (i, r) in self.regions.iter().enumerate() {
            let m = matrix(&format!("{field}.regions[{i}].matrix"), &r.matrix, dim)?;
            metric = metric.with_region(r.region, MatrixField::constant(m));
        }
        Ok(metric)
    }
}

pub fn build_materials(field: &str, decls: &[MaterialDecl], dim: usize) -> Result<MaterialField, CliError> {
    let mut material = MaterialField::new();
    for (i, m) in decls.iter().enumerate() {
        let f = format!("{field}[{i}]");
        if material.contains(m.region) {
            return Err(invalid(format!("{f}.region"), format!("region {} declared twice", m.region)));
        }
        let value = match (m.scalar, &m.matrix) {
            (Some(s), None) if s.is_finite() => MatrixField::scalar(dim, s),
            (None, Some(rows)) => MatrixField::constant(matrix(&format!("{f}.matrix"), rows, dim)?),
            (Some(_), None) => return Err(invalid(format!("{f}.scalar"), "must be finite")),
            _ => return Err(invalid(&f, "give exactly one of `scalar` and `matrix`")),
        };
        material.insert(m.region, value);
    }
    Ok(material)
}

impl TripletDecl {
    pub fn build(&self, field: &str, dim: usize) -> Result<Triplet, CliError> {
        let chart = self.chart.build(&format!("{field}.chart"), dim)?;
        let metric = self.metric.build(&format!("{field}.metric"), dim)?;
        let material = build_materials(&format!("{field}.materials"), &self.materials, dim)?;
        let label = self.label.clone().unwrap_or_else(|| chart.label());
        Ok(Triplet::new(label, chart, metric, material))
    }
}

impl BoundaryDecl {
    pub fn build(&self, field: &str, mesh: &Mesh, dim: usize) -> Result<DirichletCondition, CliError> {
        let value = match &self.value {
            ValueDecl::Constant(v) => {
                if !v.is_finite() {
                    return Err(invalid(format!("{field}.value"), "must be finite"));
                }
                BoundaryValue::Constant(*v)
            }
            ValueDecl::Linear { linear } => {
                vector(&format!("{field}.value.linear.gradient"), &linear.gradient, dim)?;
                let (g, c) = (linear.gradient.clone(), linear.constant);
                BoundaryValue::function(move |p: &Point| c + g.iter().enumerate().map(|(k, gk)| gk * p[k]).sum::<f64>())
            }
            ValueDecl::Nodal { nodal } => {
                if let Some(&n) = nodal.keys().find(|&&n| n >= mesh.node_count()) {
                    return Err(invalid(format!("{field}.value.nodal"), format!("node {n} does not exist")));
                }
                BoundaryValue::Nodal(nodal.clone())
            }
        };
        match (self.boundary, self.region) {
            (Some(tag), None) => {
                if !mesh.boundary_tags().contains(&tag) {
                    return Err(invalid(
                        format!("{field}.boundary"),
                        format!("boundary tag {tag} does not exist in the mesh"),
                    ));
                }
                Ok(DirichletCondition::boundary(tag, value))
            }
            (None, Some(tag)) => {
                if !mesh.region_tags().contains(&tag) {
                    return Err(invalid(format!("{field}.region"), format!("region tag {tag} does not exist in the mesh")));
                }
                Ok(DirichletCondition::region(tag, value))
            }
            _ => Err(invalid(field, "give exactly one of `boundary` and `region`")),
        }
    }
}

/// JSON schema of the scenario format.
pub fn schema_json() -> String {
    let schema = schemars::schema_for!(Scenario);
    serde_json::to_string_pretty(&schema).expect("schema serializes") + "\n"
}
