//! Scenario-driven command line front end.
//!
//! Every subcommand that takes a scenario writes a JSON report (by default
//! next to the scenario, `<name>.report.json`) on success and on failure.
//!
//! Exit codes: 0 success, 2 invalid input (the diagnostic names the field),
//! 3 numerical failure (assembly, solver, mesh quality, failed check),
//! 64 usage error, 74 an output file could not be written.

mod modes;
pub mod scenario;

use crate::fem::QuadratureChoice;
use crate::Error;
use clap::{Args, Parser, Subcommand};
use scenario::{Overrides, Scenario};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use thiserror::Error as ThisError;

pub use scenario::schema_json;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Validation,
    Numerical,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 64,
            ErrorKind::Validation => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io => 74,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Validation => "validation",
            ErrorKind::Numerical => "numerical",
            ErrorKind::Io => "io",
        }
    }
}

#[derive(Debug, Clone, PartialEq, ThisError)]
#[error("{}{message}", .field.as_ref().map(|f| format!("{f}: ")).unwrap_or_default())]
pub struct CliError {
    pub kind: ErrorKind,
    /// Offending scenario field or flag.
    pub field: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn validation(field: Option<String>, message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Validation, field, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Numerical, field: None, message: message.into() }
    }

    pub fn io(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Io, field: Some(field.into()), message: message.into() }
    }
}

fn kind_of(e: &Error) -> ErrorKind {
    use crate::applications::ApplicationError as A;
    use crate::atlas::AtlasError as At;
    use crate::fem::FemError as F;
    use crate::geometry::GeometryError as G;
    use crate::mesh::MeshError as M;
    fn geometry(g: &G) -> ErrorKind {
        match g {
            G::InvalidChart(_) | G::DimensionMismatch { .. } => ErrorKind::Validation,
            _ => ErrorKind::Numerical,
        }
    }
    fn mesh(m: &M) -> ErrorKind {
        match m {
            M::Geometry(g) => geometry(g),
            M::DegenerateElement { .. } | M::PoorQuality { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }
    fn fem(f: &F) -> ErrorKind {
        match f {
            F::Mesh(m) => mesh(m),
            F::Element { source, .. } => fem(source),
            F::NoDirichlet
            | F::UnknownBoundaryTag(_)
            | F::UnknownRegionTag(_)
            | F::MissingMaterial(_)
            | F::MissingNodalValue { .. }
            | F::NonFiniteBoundaryValue { .. }
            | F::DimensionMismatch { .. } => ErrorKind::Validation,
            _ => ErrorKind::Numerical,
        }
    }
    match e {
        Error::Geometry(g) => geometry(g),
        Error::Mesh(m) => mesh(m),
        Error::Fem(f) => fem(f),
        Error::Triplet(_) | Error::Solver(_) => ErrorKind::Numerical,
        Error::Atlas(a) => match a {
            At::Geometry(g) => geometry(g),
            At::Mesh(m) => mesh(m),
            At::Fem(f) => fem(f),
            _ => ErrorKind::Validation,
        },
        Error::Application(a) => match a {
            A::Geometry(g) => geometry(g),
            A::Mesh(m) => mesh(m),
            A::Fem(f) => fem(f),
            A::Triplet(_) | A::Solver(_) => ErrorKind::Numerical,
            A::SingularJacobian { .. } | A::TopologyChange { .. } | A::FixedRegionMoved { .. } => {
                ErrorKind::Numerical
            }
            _ => ErrorKind::Validation,
        },
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError { kind: kind_of(&e), field: None, message: e.to_string() }
    }
}

macro_rules! via_umbrella {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}

via_umbrella!(
    crate::geometry::GeometryError,
    crate::triplet::TripletError,
    crate::mesh::MeshError,
    crate::atlas::AtlasError,
    crate::fem::FemError,
    crate::solver::SolverError,
    crate::applications::ApplicationError
);

#[derive(Debug, Parser)]
#[command(name = "chartfem", version, about = "Finite-element electrostatics over chart/metric/material triplets")]
struct Cli {
    /// Seed for randomized sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Quadrature rule: auto, centroid or high.
    #[arg(long, global = true)]
    quadrature: Option<String>,
    /// Relative residual tolerance of the solver.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Assemble on a single thread (overrides --threads).
    #[arg(long, global = true)]
    sequential: bool,
    /// Worker threads for element integration.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override a scenario value, e.g. `--set solver.tol=1e-8` or `--set mesh.box.divisions.0=16`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Path of the JSON report.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a boundary value problem (single chart or atlas).
    Solve { scenario: PathBuf },
    /// Compare two equivalent triplets: materials, matrices and energies.
    EquivalenceCheck { scenario: PathBuf },
    /// Open-boundary problem truncated with a Kelvin shell.
    OpenBoundary { scenario: PathBuf },
    /// Motion sweep on a single fixed-topology mesh.
    Motion { scenario: PathBuf },
    /// Mesh generation, conversion and quality.
    Mesh {
        #[command(subcommand)]
        action: MeshCommand,
    },
    /// Print the JSON schema of scenario files.
    Schema,
}

#[derive(Debug, Subcommand)]
enum MeshCommand {
    /// Structured mesh of a box or annulus, or the mesh of a scenario.
    Gen(GenArgs),
    /// Convert between mesh formats (by extension: .msh, .vtk).
    Convert { input: PathBuf, output: PathBuf },
    /// Aspect-ratio report of a mesh.
    Quality {
        input: PathBuf,
        /// Scale the axes before measuring.
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        scale: Vec<f64>,
        /// Fail when an element exceeds this aspect ratio.
        #[arg(long)]
        max_aspect: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct GenArgs {
    /// box or annulus.
    #[arg(long, default_value = "box")]
    shape: String,
    /// Divisions per axis (annulus: n_theta n_radial).
    #[arg(long, num_args = 1..)]
    div: Vec<usize>,
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    min: Vec<f64>,
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    max: Vec<f64>,
    #[arg(long, num_args = 2, allow_negative_numbers = true)]
    center: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    inner: f64,
    #[arg(long, default_value_t = 2.0)]
    outer: f64,
    /// Take the mesh declaration from a scenario file instead.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Result of a successful command.
pub(crate) struct Outcome {
    pub summary: String,
    pub results: Value,
    pub outputs: Vec<PathBuf>,
}

/// Context shared by the scenario-driven modes.
pub(crate) struct Ctx {
    pub scenario: Scenario,
    pub base: PathBuf,
    pub overrides: Overrides,
}

fn overrides(cli: &Cli) -> Result<Overrides, CliError> {
    let quadrature = match &cli.quadrature {
        Some(q) => Some(
            q.parse::<QuadratureChoice>()
                .map_err(|_| CliError::validation(Some("--quadrature".into()), format!("unknown rule `{q}`")))?,
        ),
        None => None,
    };
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::validation(Some("--tol".into()), "must lie in (0, 1)"));
        }
    }
    let threads = if cli.sequential { Some(1) } else { cli.threads };
    if threads == Some(0) {
        return Err(CliError::validation(Some("--threads".into()), "must be at least 1"));
    }
    Ok(Overrides { quadrature, tol: cli.tol, threads, seed: cli.seed })
}

/// Sets `key` (dot separated, numeric segments index arrays) to `value`,
/// parsed as JSON when possible and as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let bad = |msg: String| CliError::validation(Some("--set".into()), msg);
    let (key, raw) = assignment.split_once('=').ok_or_else(|| bad(format!("`{assignment}` is not KEY=VALUE")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(bad(format!("malformed key `{key}`")));
    }
    let mut slot = doc;
    for seg in segments {
        slot = match slot {
            Value::Object(map) => map.entry(seg.to_string()).or_insert(Value::Null),
            Value::Array(items) => {
                let len = items.len();
                let i: usize = seg.parse().map_err(|_| bad(format!("`{seg}` in `{key}` must be an array index")))?;
                items.get_mut(i).ok_or_else(|| bad(format!("index {i} in `{key}` is out of range (length {len})")))?
            }
            Value::Null => {
                *slot = Value::Object(Default::default());
                match slot {
                    Value::Object(map) => map.entry(seg.to_string()).or_insert(Value::Null),
                    _ => unreachable!(),
                }
            }
            _ => return Err(bad(format!("`{key}` descends into a scalar"))),
        };
    }
    *slot = value;
    Ok(())
}

fn schema_error<E: std::fmt::Display>(e: serde_path_to_error::Error<E>) -> CliError {
    let path = e.path().to_string();
    let field = if path == "." { None } else { Some(path) };
    CliError::validation(field, e.inner().to_string())
}

/// Reads and validates a scenario, applying `--set` overrides.
pub fn load_scenario(path: &Path, sets: &[String]) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(Some("scenario".into()), format!("cannot read {}: {e}", path.display())))?;
    let scenario: Scenario = if sets.is_empty() {
        let mut de = serde_json::Deserializer::from_str(&text);
        let s = serde_path_to_error::deserialize(&mut de).map_err(schema_error)?;
        de.end().map_err(|e| CliError::validation(None, e.to_string()))?;
        s
    } else {
        let mut doc: Value = serde_json::from_str(&text).map_err(|e| CliError::validation(None, e.to_string()))?;
        for s in sets {
            apply_override(&mut doc, s)?;
        }
        serde_path_to_error::deserialize(doc).map_err(schema_error)?
    };
    scenario.check_dimension()?;
    Ok(scenario)
}

fn default_report(scenario: &Path) -> PathBuf {
    let stem = scenario.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned());
    scenario.with_file_name(format!("{stem}.report.json"))
}

fn scenario_command(cli: &Cli) -> Option<(&'static str, &Path)> {
    match &cli.command {
        Command::Solve { scenario } => Some(("solve", scenario)),
        Command::EquivalenceCheck { scenario } => Some(("equivalence-check", scenario)),
        Command::OpenBoundary { scenario } => Some(("open-boundary", scenario)),
        Command::Motion { scenario } => Some(("motion", scenario)),
        _ => None,
    }
}

fn command_name(cli: &Cli) -> String {
    match &cli.command {
        Command::Mesh { action: MeshCommand::Gen(_) } => "mesh gen".into(),
        Command::Mesh { action: MeshCommand::Convert { .. } } => "mesh convert".into(),
        Command::Mesh { action: MeshCommand::Quality { .. } } => "mesh quality".into(),
        Command::Schema => "schema".into(),
        _ => scenario_command(cli).map_or_else(String::new, |(n, _)| n.to_string()),
    }
}

fn execute(cli: &Cli, problem: &mut Option<String>) -> Result<Outcome, CliError> {
    let ov = overrides(cli)?;
    if let Some((name, path)) = scenario_command(cli) {
        let scenario = load_scenario(path, &cli.set)?;
        *problem = Some(scenario.problem.clone());
        if scenario.mode.name() != name {
            return Err(CliError::validation(
                Some("mode".into()),
                format!("scenario mode is `{}` but the subcommand is `{name}`", scenario.mode.name()),
            ));
        }
        let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        let ctx = Ctx { scenario, base, overrides: ov };
        return match &cli.command {
            Command::Solve { .. } => modes::solve(&ctx),
            Command::EquivalenceCheck { .. } => modes::equivalence_check(&ctx),
            Command::OpenBoundary { .. } => modes::open_boundary(&ctx),
            _ => modes::motion(&ctx),
        };
    }
    match &cli.command {
        Command::Schema => Ok(Outcome { summary: schema_json(), results: Value::Null, outputs: vec![] }),
        Command::Mesh { action } => match action {
            MeshCommand::Gen(g) => mesh_gen(g, &cli.set, problem),
            MeshCommand::Convert { input, output } => modes::mesh_convert(input, output),
            MeshCommand::Quality { input, scale, max_aspect } => modes::mesh_quality(input, scale, *max_aspect),
        },
        _ => unreachable!("scenario commands handled above"),
    }
}

fn mesh_gen(g: &GenArgs, sets: &[String], problem: &mut Option<String>) -> Result<Outcome, CliError> {
    if let Some(path) = &g.scenario {
        let scenario = load_scenario(path, sets)?;
        *problem = Some(scenario.problem.clone());
        let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        return modes::mesh_from_scenario(&scenario, &base, g.output.as_deref());
    }
    let output = g.output.as_deref().ok_or_else(|| CliError::validation(Some("--output".into()), "required"))?;
    let shape = match g.shape.as_str() {
        "box" => {
            let dim = g.div.len();
            if !(dim == 2 || dim == 3) {
                return Err(CliError::validation(Some("--div".into()), "box needs 2 or 3 division counts"));
            }
            let min = if g.min.is_empty() { vec![0.0; dim] } else { g.min.clone() };
            let max = if g.max.is_empty() { vec![1.0; dim] } else { g.max.clone() };
            if min.len() != dim || max.len() != dim {
                return Err(CliError::validation(Some("--min/--max".into()), format!("expected {dim} values")));
            }
            crate::mesh::Shape::Box { min, max }
        }
        "annulus" => {
            if g.div.len() != 2 {
                return Err(CliError::validation(Some("--div".into()), "annulus needs n_theta n_radial"));
            }
            let center = if g.center.is_empty() { [0.0, 0.0] } else { [g.center[0], g.center[1]] };
            crate::mesh::Shape::Annulus { center, inner: g.inner, outer: g.outer }
        }
        other => return Err(CliError::validation(Some("--shape".into()), format!("unknown shape `{other}`"))),
    };
    let mesh = crate::mesh::generate_structured(&shape, &g.div)?;
    modes::write_mesh_file(&mesh, output, "--output")?;
    Ok(Outcome {
        summary: format!("wrote {} nodes, {} elements to {}", mesh.node_count(), mesh.element_count(), output.display()),
        results: json!({ "nodes": mesh.node_count(), "elements": mesh.element_count() }),
        outputs: vec![output.to_path_buf()],
    })
}

fn write_report(path: &Path, report: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    std::fs::write(path, text).map_err(|e| CliError::io("--report", format!("{}: {e}", path.display())))
}

/// Runs the command line and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            let _ = e.print();
            return match e.kind() {
                K::DisplayHelp | K::DisplayVersion => 0,
                _ => ErrorKind::Usage.exit_code(),
            };
        }
    };
    let mut problem = None;
    let result = execute(&cli, &mut problem);
    let report_path = cli.report.clone().or_else(|| scenario_command(&cli).map(|(_, p)| default_report(p)));
    let (code, report) = match &result {
        Ok(out) => {
            println!("{}", out.summary.trim_end());
            let outputs: Vec<String> = out.outputs.iter().map(|p| p.display().to_string()).collect();
            (0, json!({
                "command": command_name(&cli),
                "problem": problem,
                "status": "ok",
                "exit_code": 0,
                "error": null,
                "outputs": outputs,
                "results": out.results,
            }))
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.kind.exit_code();
            (code, json!({
                "command": command_name(&cli),
                "problem": problem,
                "status": "error",
                "exit_code": code,
                "error": { "kind": e.kind.name(), "field": e.field, "message": e.message },
                "outputs": [],
                "results": null,
            }))
        }
    };
    if let Some(path) = report_path {
        if let Err(e) = write_report(&path, &report) {
            eprintln!("error: {e}");
            return if code == 0 { e.kind.exit_code() } else { code };
        }
    }
    code
}
