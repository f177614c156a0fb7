use super::scenario::{build_materials, OpenBoundaryDecl, Scenario};
use super::{CliError, Ctx, Outcome};
use crate::applications::{
    exterior_dipole, infinity_condition, motion_csv, motion_sweep, open_boundary_triplet, reparameterize, shell_chart,
    DipoleConfig, MotionMode, MotionOptions, MotionSweep, OpenBoundarySpec,
};
use crate::atlas::solve_atlas;
use crate::fem::{assemble_stiffness, compare_matrices, solve_bvp, BvpSpec, Solution};
use crate::geometry::{ChartMap, Point};
use crate::mesh::{map_mesh, quality, read_msh, write_msh, write_probe_csv, write_vtk, Mesh, VtkField};
use crate::triplet::verify_material_equivalence_by_region;
use crate::RegionTag;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

fn out_path(ctx: &Ctx, p: &Option<String>) -> Option<PathBuf> {
    let path = Scenario::resolve(&ctx.base, p.as_ref()?);
    // A failure here surfaces as an I/O error when the file itself is written.
    if let Some(dir) = path.parent() {
        let _ = std::fs::create_dir_all(dir);
    }
    Some(path)
}

fn io_err(field: &str, path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::io(field, format!("{}: {e}", path.display()))
}

pub(crate) fn write_mesh_file(mesh: &Mesh, path: &Path, field: &str) -> Result<(), CliError> {
    let result = match path.extension().and_then(|e| e.to_str()) {
        Some("vtk") => write_vtk(mesh, &[], path),
        Some("msh") => write_msh(mesh, path),
        _ => return Err(CliError::validation(Some(field.into()), "mesh files must end in .msh or .vtk")),
    };
    result.map_err(|e| io_err(field, path, e))
}

fn solution_fields(mesh: &Mesh, sol: &Solution) -> Vec<VtkField> {
    vec![
        VtkField::NodalScalar { name: "u".into(), values: sol.potential.clone() },
        VtkField::CellVector {
            name: "E".into(),
            values: sol.fields.iter().map(|f| f.components.iter().copied().collect()).collect(),
        },
    ]
    .into_iter()
    .filter(|f| !matches!(f, VtkField::CellVector { values, .. } if values.len() != mesh.element_count()))
    .collect()
}

/// Writes the declared VTK/CSV/MatrixMarket/mesh outputs of a solved problem.
fn write_solution_outputs(ctx: &Ctx, spec: &BvpSpec, sol: &Solution) -> Result<Vec<PathBuf>, CliError> {
    let outputs = &ctx.scenario.outputs;
    let mut written = Vec::new();
    if let Some(p) = out_path(ctx, &outputs.vtk) {
        write_vtk(&spec.mesh, &solution_fields(&spec.mesh, sol), &p).map_err(|e| io_err("outputs.vtk", &p, e))?;
        written.push(p);
    }
    if let Some(p) = out_path(ctx, &outputs.csv) {
        write_probe_csv(spec.mesh.nodes(), &sol.potential, &p).map_err(|e| io_err("outputs.csv", &p, e))?;
        written.push(p);
    }
    if let Some(p) = out_path(ctx, &outputs.matrix_market) {
        let stiffness = assemble_stiffness(spec, &ctx.scenario.assembly_options(&ctx.overrides)?)?;
        stiffness.write_matrix_market(&p).map_err(|e| io_err("outputs.matrix_market", &p, e))?;
        written.push(p);
    }
    if let Some(p) = out_path(ctx, &outputs.mesh) {
        write_mesh_file(&spec.mesh, &p, "outputs.mesh")?;
        written.push(p);
    }
    Ok(written)
}

fn solution_json(spec: &BvpSpec, sol: &Solution) -> Value {
    let (lo, hi) = sol.potential.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &u| (l.min(u), h.max(u)));
    json!({
        "nodes": spec.mesh.node_count(),
        "elements": spec.mesh.element_count(),
        "energy": sol.energy,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "preconditioner_fell_back": sol.preconditioner_fell_back,
        "potential_min": lo,
        "potential_max": hi,
    })
}

pub(crate) fn solve(ctx: &Ctx) -> Result<Outcome, CliError> {
    let sc = &ctx.scenario;
    let opts = sc.assembly_options(&ctx.overrides)?;
    let cfg = sc.solver_config(&ctx.overrides)?;
    if sc.atlas.is_some() {
        return solve_with_atlas(ctx);
    }
    let spec = sc.bvp(&ctx.base)?;
    let sol = solve_bvp(&spec, &opts, &cfg)?;
    let outputs = write_solution_outputs(ctx, &spec, &sol)?;
    Ok(Outcome {
        summary: format!(
            "{}: {} elements, energy {:.12e}, {} iterations",
            sc.problem,
            spec.mesh.element_count(),
            sol.energy,
            sol.iterations
        ),
        results: solution_json(&spec, &sol),
        outputs,
    })
}

fn solve_with_atlas(ctx: &Ctx) -> Result<Outcome, CliError> {
    let sc = &ctx.scenario;
    if sc.mesh.is_some() || sc.triplet.is_some() {
        return Err(CliError::validation(Some("atlas".into()), "an atlas replaces `mesh` and `triplet`"));
    }
    let (atlas, dirichlet) = sc.atlas(&ctx.base)?;
    let sol = solve_atlas(&atlas, &dirichlet, &sc.assembly_options(&ctx.overrides)?, &sc.solver_config(&ctx.overrides)?)?;
    let mut written = Vec::new();
    if let Some(p) = out_path(ctx, &sc.outputs.csv) {
        let mut points = Vec::with_capacity(sol.index.total);
        let mut values = Vec::with_capacity(sol.index.total);
        let mut seen = vec![false; sol.index.total];
        for (r, region) in atlas.regions().iter().enumerate() {
            for (node, &dof) in sol.index.maps[r].iter().enumerate() {
                if !std::mem::replace(&mut seen[dof], true) {
                    points.push(region.universal_position(node)?);
                    values.push(sol.potential[dof]);
                }
            }
        }
        write_probe_csv(&points, &values, &p).map_err(|e| io_err("outputs.csv", &p, e))?;
        written.push(p);
    }
    if let Some(p) = out_path(ctx, &sc.outputs.vtk) {
        for (r, region) in atlas.regions().iter().enumerate() {
            let stem = p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            let path = p.with_file_name(format!("{stem}_region{}.vtk", region.id));
            let field = VtkField::NodalScalar { name: "u".into(), values: sol.region_potential(r) };
            write_vtk(&region.mesh, &[field], &path).map_err(|e| io_err("outputs.vtk", &path, e))?;
            written.push(path);
        }
    }
    Ok(Outcome {
        summary: format!(
            "{}: atlas of {} regions, {} dofs, energy {:.12e}, {} iterations",
            sc.problem,
            atlas.regions().len(),
            sol.index.total,
            sol.energy,
            sol.iterations
        ),
        results: json!({
            "regions": atlas.regions().len(),
            "dofs": sol.index.total,
            "energy": sol.energy,
            "iterations": sol.iterations,
            "residual": sol.residual,
        }),
        outputs: written,
    })
}

/// Universal-chart sample points per mesh region: every element centroid
/// plus `extra` seeded random interior points.
fn universal_samples(spec: &BvpSpec, extra: usize, seed: u64) -> Result<Vec<(RegionTag, Vec<Point>)>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mesh = &spec.mesh;
    let n = mesh.dim();
    let mut out: Vec<(RegionTag, Vec<Point>)> = mesh.region_tags().into_iter().map(|r| (r, Vec::new())).collect();
    for (e, element) in mesh.elements().iter().enumerate() {
        let slot = out.iter_mut().find(|(r, _)| *r == element.region).expect("region listed");
        let pts = mesh.element_points(e);
        let mut push = |weights: &[f64]| -> Result<(), CliError> {
            let coords: Vec<f64> =
                (0..n).map(|k| pts.iter().zip(weights).map(|(p, w)| w * p[k]).sum()).collect();
            slot.1.push(spec.triplet.chart.inverse(&Point::new(&coords))?);
            Ok(())
        };
        push(&vec![1.0 / (n + 1) as f64; n + 1])?;
        for _ in 0..extra {
            let mut cuts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
            cuts.push(0.0);
            cuts.push(1.0);
            cuts.sort_by(f64::total_cmp);
            let weights: Vec<f64> = cuts.windows(2).map(|w| w[1] - w[0]).collect();
            push(&weights)?;
        }
    }
    Ok(out)
}

pub(crate) fn equivalence_check(ctx: &Ctx) -> Result<Outcome, CliError> {
    let sc = &ctx.scenario;
    let compare = sc.compare.as_ref().ok_or_else(|| CliError::validation(Some("compare".into()), "required"))?;
    let opts = sc.assembly_options(&ctx.overrides)?;
    let cfg = sc.solver_config(&ctx.overrides)?;
    let spec_i = sc.bvp(&ctx.base)?;
    let g = compare.transition.build("compare.transition", sc.dimension)?;
    let metric_j = compare.metric.build("compare.metric", sc.dimension)?;
    let mut spec_j = reparameterize(&spec_i, &g, metric_j)?;
    if let Some(decls) = &compare.materials {
        spec_j.triplet.material = build_materials("compare.materials", decls, sc.dimension)?;
        for region in spec_j.mesh.region_tags() {
            if !spec_j.triplet.material.contains(region) {
                return Err(CliError::validation(
                    Some("compare.materials".into()),
                    format!("no material for mesh region {region}"),
                ));
            }
        }
    }
    if let Some(label) = &compare.label {
        spec_j.triplet.label = label.clone();
    }
    let samples = universal_samples(&spec_i, compare.samples_per_element, ctx.overrides.seed)?;
    let borrowed: Vec<(RegionTag, &[Point])> = samples.iter().map(|(r, p)| (*r, p.as_slice())).collect();
    let materials = verify_material_equivalence_by_region(&spec_i.triplet, &spec_j.triplet, &borrowed)?;
    let k_i = assemble_stiffness(&spec_i, &opts)?;
    let k_j = assemble_stiffness(&spec_j, &opts)?;
    let matrices = compare_matrices(&k_i, &k_j)?;
    let sol_i = solve_bvp(&spec_i, &opts, &cfg)?;
    let sol_j = solve_bvp(&spec_j, &opts, &cfg)?;
    let energy_dev = if sol_i.energy == 0.0 {
        sol_j.energy.abs()
    } else {
        (sol_i.energy - sol_j.energy).abs() / sol_i.energy.abs()
    };
    let nodal_dev = sol_i.potential.iter().zip(&sol_j.potential).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let deviation = materials.max_relative_deviation.max(matrices.frobenius_relative);
    let mut written = Vec::new();
    if let Some(p) = out_path(ctx, &sc.outputs.matrix_market) {
        k_i.write_matrix_market(&p).map_err(|e| io_err("outputs.matrix_market", &p, e))?;
        written.push(p);
    }
    if let Some(p) = out_path(ctx, &sc.outputs.vtk) {
        write_vtk(&spec_j.mesh, &solution_fields(&spec_j.mesh, &sol_j), &p).map_err(|e| io_err("outputs.vtk", &p, e))?;
        written.push(p);
    }
    if let Some(p) = out_path(ctx, &sc.outputs.csv) {
        write_probe_csv(spec_j.mesh.nodes(), &sol_j.potential, &p).map_err(|e| io_err("outputs.csv", &p, e))?;
        written.push(p);
    }
    let results = json!({
        "reference": spec_i.triplet.label,
        "compared": spec_j.triplet.label,
        "deviation": deviation,
        "material_deviation": materials.max_relative_deviation,
        "material_checks": materials.checks,
        "matrix_frobenius_relative": matrices.frobenius_relative,
        "matrix_max_entry_deviation": matrices.max_entry_deviation,
        "energy_reference": sol_i.energy,
        "energy_compared": sol_j.energy,
        "energy_relative_deviation": energy_dev,
        "nodal_max_deviation": nodal_dev,
    });
    if let Some(tol) = compare.tolerance {
        if !(deviation <= tol) {
            return Err(CliError::numerical(format!("deviation {deviation:e} exceeds tolerance {tol:e}")));
        }
    }
    Ok(Outcome {
        summary: format!(
            "{}: deviation {:e} (materials {:e}, matrix {:e}), energies {:.12e} / {:.12e}",
            sc.problem,
            deviation,
            materials.max_relative_deviation,
            matrices.frobenius_relative,
            sol_i.energy,
            sol_j.energy
        ),
        results,
        outputs: written,
    })
}

pub(crate) fn open_boundary(ctx: &Ctx) -> Result<Outcome, CliError> {
    let sc = &ctx.scenario;
    let decl = sc.open_boundary.as_ref().ok_or_else(|| CliError::validation(Some("open_boundary".into()), "required"))?;
    let opts = sc.assembly_options(&ctx.overrides)?;
    let cfg = sc.solver_config(&ctx.overrides)?;
    match decl {
        OpenBoundaryDecl::Dipole { n_theta, n_shell, r0, n_interior, refine } => {
            if sc.dimension != 2 {
                return Err(CliError::validation(Some("dimension".into()), "the dipole benchmark is 2D"));
            }
            let mut dc = DipoleConfig::new(*n_theta, *n_shell);
            if let Some(r0) = r0 {
                dc = dc.with_interior_ring(*r0, *n_interior);
            }
            let coarse = exterior_dipole(&dc, &opts, &cfg)?;
            let mut results = json!({
                "elements": coarse.elements,
                "l2_relative_error": coarse.l2_relative_error,
                "interface_max_error": coarse.interface_max_error,
                "energy": coarse.energy,
                "exact_energy": coarse.exact_energy,
                "iterations": coarse.iterations,
            });
            let mut summary = format!(
                "{}: {} elements, relative L2 error {:.4e}",
                sc.problem, coarse.elements, coarse.l2_relative_error
            );
            if *refine {
                let fine = exterior_dipole(&dc.refined(), &opts, &cfg)?;
                let ratio = coarse.l2_relative_error / fine.l2_relative_error;
                results["refined"] = json!({
                    "elements": fine.elements,
                    "l2_relative_error": fine.l2_relative_error,
                    "interface_max_error": fine.interface_max_error,
                    "error_ratio": ratio,
                });
                summary += &format!("; refined {:.4e} (ratio {ratio:.3})", fine.l2_relative_error);
            }
            Ok(Outcome { summary, results, outputs: vec![] })
        }
        OpenBoundaryDecl::Shell { center, inner, outer, interior, exterior_regions, infinity_boundary } => {
            let base = sc.triplet_decl()?.build("triplet", sc.dimension)?;
            let ob = OpenBoundarySpec::new(center, *inner, *outer, interior.clone(), exterior_regions.clone())?;
            let triplet = open_boundary_triplet(&base, &ob)?;
            let chart = shell_chart(&ob)?;
            let mesh = sc.mesh_decl()?.build("mesh", &ctx.base, sc.dimension, &chart)?;
            if !mesh.boundary_tags().contains(infinity_boundary) {
                return Err(CliError::validation(
                    Some("open_boundary.shell.infinity_boundary".into()),
                    format!("boundary tag {infinity_boundary} does not exist in the mesh"),
                ));
            }
            let mut spec = sc.spec_from(mesh, triplet)?;
            spec.dirichlet.push(infinity_condition(*infinity_boundary));
            let sol = solve_bvp(&spec, &opts, &cfg)?;
            let outputs = write_solution_outputs(ctx, &spec, &sol)?;
            Ok(Outcome {
                summary: format!(
                    "{}: {} elements, energy {:.12e}, {} iterations",
                    sc.problem,
                    spec.mesh.element_count(),
                    sol.energy,
                    sol.iterations
                ),
                results: solution_json(&spec, &sol),
                outputs,
            })
        }
    }
}

pub(crate) fn motion(ctx: &Ctx) -> Result<Outcome, CliError> {
    let sc = &ctx.scenario;
    let decl = sc.motion.as_ref().ok_or_else(|| CliError::validation(Some("motion".into()), "required"))?;
    let spec = sc.bvp(&ctx.base)?;
    if decl.steps.is_empty() {
        return Err(CliError::validation(Some("motion.steps".into()), "at least one step is required"));
    }
    let steps: Vec<ChartMap> = decl
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| s.build(&format!("motion.steps[{i}]"), sc.dimension))
        .collect::<Result<_, _>>()?;
    let mode = match decl.mode {
        super::scenario::MotionModeDecl::MetricChange => MotionMode::MetricChange,
        super::scenario::MotionModeDecl::MaterialChange => MotionMode::MaterialChange,
    };
    let sweep = MotionSweep::new(spec, decl.moving_regions.clone(), steps, mode)?;
    let opts = MotionOptions {
        assembly: sc.assembly_options(&ctx.overrides)?,
        solver: sc.solver_config(&ctx.overrides)?,
        warm_start: decl.warm_start,
        reuse_preconditioner: decl.reuse_preconditioner,
        measure_cold: decl.measure_cold,
    };
    let result = motion_sweep(&sweep, &opts)?;
    let mut written = Vec::new();
    if let Some(p) = out_path(ctx, &sc.outputs.csv) {
        std::fs::write(&p, motion_csv(&result, decl.timing)).map_err(|e| io_err("outputs.csv", &p, e))?;
        written.push(p);
    }
    if let (Some(p), Some(last)) = (out_path(ctx, &sc.outputs.vtk), result.last()) {
        let mesh = &sweep.base.mesh;
        write_vtk(mesh, &solution_fields(mesh, &last.solution), &p).map_err(|e| io_err("outputs.vtk", &p, e))?;
        written.push(p);
    }
    if let (Some(p), Some(last)) = (out_path(ctx, &sc.outputs.matrix_market), result.last()) {
        last.stiffness.write_matrix_market(&p).map_err(|e| io_err("outputs.matrix_market", &p, e))?;
        written.push(p);
    }
    let rows: Vec<Value> = result
        .iter()
        .map(|s| {
            json!({
                "step": s.step,
                "energy": s.solution.energy,
                "iterations": s.iterations,
                "cold_iterations": s.cold_iterations,
                "changed_elements": s.changed_elements,
                "changed_entries": s.changed_entries,
                "resummed_entries": s.resummed_entries,
            })
        })
        .collect();
    Ok(Outcome {
        summary: format!("{}: {} motion steps", sc.problem, result.len()),
        results: json!({ "steps": rows }),
        outputs: written,
    })
}

pub(crate) fn mesh_from_scenario(sc: &Scenario, base: &Path, output: Option<&Path>) -> Result<Outcome, CliError> {
    let chart = match &sc.triplet {
        Some(t) => t.build("triplet", sc.dimension)?.chart,
        None => ChartMap::identity(),
    };
    let mesh = sc.mesh_decl()?.build("mesh", base, sc.dimension, &chart)?;
    let path = match (output, &sc.outputs.mesh) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => Scenario::resolve(base, p),
        (None, None) => return Err(CliError::validation(Some("outputs.mesh".into()), "no output path given")),
    };
    write_mesh_file(&mesh, &path, "outputs.mesh")?;
    let q = quality(&mesh);
    Ok(Outcome {
        summary: format!("wrote {} nodes, {} elements to {}", mesh.node_count(), mesh.element_count(), path.display()),
        results: json!({
            "nodes": mesh.node_count(),
            "elements": mesh.element_count(),
            "quality": { "min": q.min, "max": q.max, "mean": q.mean, "worst_element": q.worst_element },
        }),
        outputs: vec![path],
    })
}

fn read_mesh_file(path: &Path, field: &str) -> Result<Mesh, CliError> {
    if !path.exists() {
        return Err(CliError::validation(Some(field.into()), format!("{} does not exist", path.display())));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("msh") => read_msh(path).map_err(|e| CliError::validation(Some(field.into()), e.to_string())),
        _ => Err(CliError::validation(Some(field.into()), "only .msh input is supported")),
    }
}

pub(crate) fn mesh_convert(input: &Path, output: &Path) -> Result<Outcome, CliError> {
    let mesh = read_mesh_file(input, "input")?;
    write_mesh_file(&mesh, output, "output")?;
    Ok(Outcome {
        summary: format!("converted {} to {}", input.display(), output.display()),
        results: json!({ "nodes": mesh.node_count(), "elements": mesh.element_count() }),
        outputs: vec![output.to_path_buf()],
    })
}

pub(crate) fn mesh_quality(input: &Path, scale: &[f64], max_aspect: Option<f64>) -> Result<Outcome, CliError> {
    let mut mesh = read_mesh_file(input, "input")?;
    if !scale.is_empty() {
        if scale.len() != mesh.dim() {
            return Err(CliError::validation(Some("--scale".into()), format!("expected {} factors", mesh.dim())));
        }
        mesh = map_mesh(&mesh, &ChartMap::axis_scaling(scale)?)?;
    }
    let q = quality(&mesh);
    let exceeding = max_aspect.map(|t| q.aspect_ratios.iter().filter(|&&r| !(r <= t)).count());
    let results = json!({
        "elements": mesh.element_count(),
        "min": q.min,
        "max": q.max,
        "mean": q.mean,
        "worst_element": q.worst_element,
        "max_aspect": max_aspect,
        "exceeding": exceeding,
    });
    if let (Some(t), Some(count)) = (max_aspect, exceeding) {
        if count > 0 {
            return Err(CliError::numerical(format!(
                "{count} elements exceed aspect ratio {t:e}; worst is element {} at {:e}",
                q.worst_element, q.max
            )));
        }
    }
    Ok(Outcome { summary: serde_json::to_string_pretty(&results).expect("serializes"), results, outputs: vec![] })
}
