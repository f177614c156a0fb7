use super::ApplicationError;
use crate::fem::{
    apply_dirichlet, element_stiffness, solution_from_potential, AssemblyOptions, BvpSpec, PartialAssembler,
    QuadratureRule, Solution, SparseSymMatrix,
};
use crate::geometry::{ChartMap, MatrixField, Point};
use crate::linalg::{self, fmt17, Matrix};
use crate::mesh::{simplex_signed_volume, RegionTag};
use crate::solver::{build_preconditioner, solve, solve_with, PreconditionerHandle, SolverConfig};
use crate::triplet::{metric_for_motion_with, transform_material_euclidean_with};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

/// How a deformation of the moving regions enters the fixed mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MotionMode {
    /// Keep chart and material, change the metric: `S = |J| J⁻ᵀ J⁻¹`.
    #[default]
    MetricChange,
    /// Keep chart and metric, change the material: `ε = J ε Jᵀ / |J|`.
    MaterialChange,
}

/// A sequence of deformations solved on one mesh and one dof numbering.
///
/// Each step map takes reference (mesh) coordinates to the deformed
/// physical position, so the chart transition used for the coefficients is
/// its inverse `J = Dφ⁻¹`. Outside `moving_regions` every step map must
/// have `Dφ = I` (rigid translations of fixed parts are allowed).
#[derive(Clone, Debug)]
pub struct MotionSweep {
    pub base: BvpSpec,
    pub moving_regions: Vec<RegionTag>,
    pub steps: Vec<ChartMap>,
    pub mode: MotionMode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotionOptions {
    pub assembly: AssemblyOptions,
    pub solver: SolverConfig,
    /// Start each solve from the previous step's potential.
    pub warm_start: bool,
    /// Build the preconditioner once, at the first step, and keep it.
    pub reuse_preconditioner: bool,
    /// Also solve every step from zero with a fresh preconditioner and
    /// record its iteration count.
    pub measure_cold: bool,
}

impl Default for MotionOptions {
    fn default() -> Self {
        MotionOptions {
            assembly: AssemblyOptions::default(),
            solver: SolverConfig::default(),
            warm_start: true,
            reuse_preconditioner: true,
            measure_cold: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotionStep {
    pub step: usize,
    pub solution: Solution,
    /// Stiffness matrix before Dirichlet elimination.
    pub stiffness: SparseSymMatrix,
    pub changed_elements: usize,
    /// Stored entries supported by at least one changed element.
    pub changed_entries: usize,
    /// Entries actually re-summed (also restores entries changed before).
    pub resummed_entries: usize,
    pub iterations: usize,
    pub cold_iterations: Option<usize>,
    pub wall_time: Duration,
}

fn is_identity(m: &Matrix) -> bool {
    *m == Matrix::identity(m.nrows(), m.ncols())
}

impl MotionSweep {
    pub fn new(
        base: BvpSpec,
        moving_regions: Vec<RegionTag>,
        steps: Vec<ChartMap>,
        mode: MotionMode,
    ) -> Result<Self, ApplicationError> {
        let sweep = MotionSweep { base, moving_regions, steps, mode };
        sweep.validate()?;
        Ok(sweep)
    }

    fn validate(&self) -> Result<(), ApplicationError> {
        let tags = self.base.mesh.region_tags();
        for &r in &self.moving_regions {
            if !tags.contains(&r) {
                return Err(ApplicationError::UnknownRegion(r));
            }
            if !self.base.triplet.metric.is_euclidean_in(r) {
                return Err(ApplicationError::NonEuclideanMetric(r));
            }
            if self.mode == MotionMode::MetricChange {
                let field = self.base.triplet.material.field(r)?;
                if !field.as_constant().map_or(false, linalg::is_positive_scalar) {
                    return Err(ApplicationError::NonScalarMaterial(r));
                }
            }
        }
        Ok(())
    }

    fn is_moving(&self, region: RegionTag) -> bool {
        self.moving_regions.contains(&region)
    }

    /// Problem posed at step `k` on the reference mesh.
    pub fn step_spec(&self, k: usize) -> Result<BvpSpec, ApplicationError> {
        let phi = self.step(k)?;
        let mut spec = self.base.clone();
        let n = spec.mesh.dim();
        for &region in &self.moving_regions {
            match self.mode {
                MotionMode::MetricChange => {
                    let s = step_field(phi, n, true, |j, _| metric_for_motion_with(j).ok());
                    spec.triplet.metric = spec.triplet.metric.clone().with_region(region, s);
                }
                MotionMode::MaterialChange => {
                    let eps = self.base.triplet.material.field(region)?.clone();
                    let constant = eps.as_constant().is_some();
                    let cellwise = eps.is_cellwise_constant();
                    let e = step_field(phi, n, constant || cellwise, move |j, y| {
                        transform_material_euclidean_with(&eps.eval(y), j).ok()
                    });
                    spec.triplet.material.insert(region, e);
                }
            }
        }
        Ok(spec)
    }

    fn step(&self, k: usize) -> Result<&ChartMap, ApplicationError> {
        self.steps.get(k).ok_or_else(|| ApplicationError::InvalidConfig(format!("no step {k}")))
    }

    /// Elements whose coefficients differ from the base problem at step `k`.
    ///
    /// Checks every element at its vertices' centroid and the points of the
    /// higher-order rule: step maps must be orientation preserving, and the
    /// identity (in the derivative) outside the moving regions.
    pub fn changed_elements(&self, k: usize) -> Result<BTreeSet<usize>, ApplicationError> {
        let phi = self.step(k)?;
        let mesh = &self.base.mesh;
        let dim = mesh.dim();
        let rules = [QuadratureRule::centroid(dim), QuadratureRule::high_order(dim)];
        let mut changed = BTreeSet::new();
        for (e, element) in mesh.elements().iter().enumerate() {
            let pts = mesh.element_points(e);
            let mut moved = false;
            for rule in &rules {
                for q in rule.points(&pts) {
                    let d = phi.jacobian(&q)?.entries;
                    let det = d.determinant();
                    if !(det.abs() > 1e-300) || !det.is_finite() {
                        return Err(ApplicationError::SingularJacobian { step: k, element: e, det });
                    }
                    if det < 0.0 {
                        return Err(ApplicationError::TopologyChange { step: k, element: e });
                    }
                    moved |= !is_identity(&d);
                }
            }
            if !moved {
                continue;
            }
            if !self.is_moving(element.region) {
                return Err(ApplicationError::FixedRegionMoved { step: k, element: e });
            }
            let mapped = pts.iter().map(|p| phi.forward(p)).collect::<Result<Vec<_>, _>>()?;
            if !(simplex_signed_volume(&mapped.iter().collect::<Vec<_>>()) > 0.0) {
                return Err(ApplicationError::TopologyChange { step: k, element: e });
            }
            changed.insert(e);
        }
        Ok(changed)
    }
}

/// Coefficient field of a moving region: `f(J, y)` with `J = Dφ(y)⁻¹`.
/// Affine steps give constant fields when `f` does not depend on `y`.
fn step_field(
    phi: &ChartMap,
    n: usize,
    position_free: bool,
    f: impl Fn(&Matrix, &Point) -> Option<Matrix> + Send + Sync + 'static,
) -> MatrixField {
    let jacobian = |phi: &ChartMap, y: &Point| phi.jacobian(y).ok().and_then(|d| d.entries.try_inverse());
    if phi.is_affine() && position_free {
        let origin = Point::new(&vec![0.0; n]);
        if let Some(m) = jacobian(phi, &origin).and_then(|j| f(&j, &origin)) {
            return MatrixField::constant(m);
        }
    }
    let cellwise = phi.is_piecewise_affine() && position_free;
    let phi = phi.clone();
    let eval = move |y: &Point| {
        jacobian(&phi, y).and_then(|j| f(&j, y)).unwrap_or_else(|| Matrix::from_element(n, n, f64::NAN))
    };
    if cellwise {
        MatrixField::cellwise(eval)
    } else {
        MatrixField::pointwise(eval)
    }
}

/// Runs the sweep: one partial reassembly and one (warm-started) solve per
/// step.
pub fn motion_sweep(ms: &MotionSweep, opts: &MotionOptions) -> Result<Vec<MotionStep>, ApplicationError> {
    let base = &ms.base;
    let mesh = &base.mesh;
    let element_dofs: Vec<Vec<usize>> = mesh.elements().iter().map(|e| e.nodes.clone()).collect();
    let base_locals = (0..mesh.element_count())
        .map(|e| element_stiffness(base, e, opts.assembly.quadrature))
        .collect::<Result<Vec<_>, _>>()?;
    let mut assembler = PartialAssembler::new(mesh.node_count(), element_dofs, base_locals.clone());
    let constraints = base.constraints()?;
    let mut previous: BTreeSet<usize> = BTreeSet::new();
    let mut potential: Option<Vec<f64>> = None;
    let mut preconditioner: Option<PreconditionerHandle> = None;
    let mut out = Vec::with_capacity(ms.steps.len());
    for k in 0..ms.steps.len() {
        let started = Instant::now();
        let spec = ms.step_spec(k)?;
        let changed = ms.changed_elements(k)?;
        let mut updates = Vec::new();
        for &e in &changed {
            updates.push((e, element_stiffness(&spec, e, opts.assembly.quadrature)?));
        }
        for &e in previous.difference(&changed) {
            updates.push((e, base_locals[e].clone()));
        }
        let resummed_entries = assembler.update(updates);
        let changed_entries = assembler.entries_touched_by(changed.iter().copied()).len();
        let (matrix, rhs) = apply_dirichlet(assembler.matrix(), &constraints);

        let handle = match (&preconditioner, opts.reuse_preconditioner) {
            (Some(h), true) => h.clone(),
            _ => build_preconditioner(&matrix, opts.solver.preconditioner)?,
        };
        let mut cfg = opts.solver.clone();
        if opts.warm_start {
            cfg.warm_start = potential.clone();
        }
        let report = solve_with(&matrix, &rhs, &cfg, &handle)?;
        preconditioner = Some(handle);
        let cold_iterations = if opts.measure_cold {
            let cold = SolverConfig { warm_start: None, ..opts.solver.clone() };
            Some(solve(&matrix, &rhs, &cold)?.iterations)
        } else {
            None
        };
        let solution = solution_from_potential(
            &spec,
            report.x,
            opts.assembly.quadrature,
            report.iterations,
            report.residual,
            report.preconditioner_fell_back,
        )?;
        potential = Some(solution.potential.clone());
        out.push(MotionStep {
            step: k,
            iterations: report.iterations,
            solution,
            stiffness: assembler.matrix().clone(),
            changed_elements: changed.len(),
            changed_entries,
            resummed_entries,
            cold_iterations,
            wall_time: started.elapsed(),
        });
        previous = changed;
    }
    Ok(out)
}

/// CSV with one row per step: `step,energy,iterations,changed_entries`, and a
/// trailing `wall_time_s` column when `timing` is set (timings make the file
/// differ between runs).
pub fn motion_csv(steps: &[MotionStep], timing: bool) -> String {
    let mut s = String::from("step,energy,iterations,changed_entries");
    s.push_str(if timing { ",wall_time_s\n" } else { "\n" });
    for st in steps {
        let _ = write!(s, "{},{},{},{}", st.step, fmt17(st.solution.energy), st.iterations, st.changed_entries);
        if timing {
            let _ = write!(s, ",{}", fmt17(st.wall_time.as_secs_f64()));
        }
        s.push('\n');
    }
    s
}

pub fn write_motion_csv(steps: &[MotionStep], timing: bool, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, motion_csv(steps, timing))
}
