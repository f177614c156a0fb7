//! End-to-end runs of the command-line front end against the bundled scenarios.

use chartfem::cli::{main_with_args, schema_json};
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use tempfile::TempDir;

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Copies every bundled scenario into a fresh directory.
fn sandbox() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(workspace().join("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            fs::copy(&path, dir.path().join(path.file_name().unwrap())).unwrap();
        }
    }
    dir
}

fn run(dir: &Path, args: &[&str]) -> i32 {
    let mut full = vec!["chartfem".to_string()];
    for a in args {
        let p = dir.join(a);
        full.push(if p.exists() { p.display().to_string() } else { a.to_string() });
    }
    main_with_args(full)
}

fn report(dir: &Path, stem: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.report.json"))).unwrap()).unwrap()
}

fn edit(dir: &Path, name: &str, f: impl FnOnce(&mut Value)) {
    let path = dir.join(name);
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    f(&mut doc);
    fs::write(path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
}

/// Nodal coordinates and the `u` point field from a legacy VTK file.
fn vtk_points_and_u(path: &Path) -> (Vec<[f64; 3]>, Vec<f64>) {
    let text = fs::read_to_string(path).unwrap();
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let at = |key: &str| tokens.iter().position(|t| *t == key).unwrap();
    let p = at("POINTS");
    let n: usize = tokens[p + 1].parse().unwrap();
    let nums = |start: usize, count: usize| -> Vec<f64> {
        tokens[start..start + count].iter().map(|t| t.parse().unwrap()).collect()
    };
    let coords = nums(p + 3, 3 * n);
    let points = coords.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    let s = tokens.windows(2).position(|w| w[0] == "SCALARS" && w[1] == "u").unwrap();
    (points, nums(s + 6, n))
}

#[test]
fn unit_square_solution_is_linear() {
    let dir = sandbox();
    assert_eq!(run(dir.path(), &["solve", "unit_square.json"]), 0);
    let (points, u) = vtk_points_and_u(&dir.path().join("out/unit_square.vtk"));
    assert_eq!(points.len(), 81);
    for (p, v) in points.iter().zip(&u) {
        assert!((v - p[0]).abs() < 1e-10, "u({p:?}) = {v}");
    }
    let r = report(dir.path(), "unit_square");
    assert_eq!(r["status"], "ok");
    assert_eq!(r["exit_code"], 0);
    let energy = r["results"]["energy"].as_f64().unwrap();
    assert!((energy - 1.0).abs() < 1e-10);
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = sandbox();
    let mut first = Vec::new();
    for round in 0..2 {
        assert_eq!(run(dir.path(), &["solve", "unit_square.json"]), 0);
        let files: Vec<Vec<u8>> =
            ["out/unit_square.csv", "out/unit_square.mtx"].iter().map(|f| fs::read(dir.path().join(f)).unwrap()).collect();
        if round == 0 {
            first = files;
        } else {
            assert_eq!(first, files);
        }
    }
}

#[test]
fn unknown_boundary_tag_names_the_field() {
    let dir = sandbox();
    edit(dir.path(), "unit_square.json", |d| d["boundary"][1]["boundary"] = 9.into());
    assert_eq!(run(dir.path(), &["solve", "unit_square.json"]), 2);
    let r = report(dir.path(), "unit_square");
    assert_eq!(r["error"]["kind"], "validation");
    assert_eq!(r["error"]["field"], "boundary[1].boundary");
}

#[test]
fn wrong_json_type_is_a_validation_error() {
    let dir = sandbox();
    edit(dir.path(), "unit_square.json", |d| d["solver"]["tol"] = "small".into());
    assert_eq!(run(dir.path(), &["solve", "unit_square.json"]), 2);
    assert_eq!(report(dir.path(), "unit_square")["error"]["field"], "solver.tol");
}

#[test]
fn solver_budget_exhaustion_is_numerical() {
    let dir = sandbox();
    assert_eq!(run(dir.path(), &["--set", "solver.max_iter=2", "solve", "unit_square.json"]), 3);
    assert_eq!(report(dir.path(), "unit_square")["error"]["kind"], "numerical");
}

#[test]
fn mode_must_match_subcommand() {
    let dir = sandbox();
    assert_eq!(run(dir.path(), &["motion", "unit_square.json"]), 2);
    assert_eq!(report(dir.path(), "unit_square")["error"]["field"], "mode");
}

#[test]
fn usage_errors() {
    let dir = sandbox();
    assert_eq!(run(dir.path(), &["frobnicate"]), 64);
    assert_eq!(run(dir.path(), &["solve"]), 64);
    assert_eq!(run(dir.path(), &["--help"]), 0);
}

#[test]
fn equivalence_check_reports_deviation() {
    let dir = sandbox();
    assert_eq!(run(dir.path(), &["equivalence-check", "equivalence_scaled.json"]), 0);
    let r = report(dir.path(), "equivalence_scaled");
    assert!(r["results"]["deviation"].as_f64().unwrap() <= 1e-12);

    edit(dir.path(), "equivalence_scaled.json", |d| {
        d["compare"]["materials"] = serde_json::json!([{ "region": 1, "scalar": 2.0 }])
    });
    assert_eq!(run(dir.path(), &["equivalence-check", "equivalence_scaled.json"]), 3);
}

#[test]
fn motion_writes_one_row_per_step() {
    let dir = sandbox();
    assert_eq!(run(dir.path(), &["motion", "capacitor_motion.json"]), 0);
    let csv = fs::read_to_string(dir.path().join("out/capacitor_motion.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "step,energy,iterations,changed_entries");
    assert_eq!(rows.len(), 5);
    let energies: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    for (w, gap) in energies.iter().zip([1.0, 1.25, 1.5, 2.0]) {
        assert!((w - 1.0 / gap).abs() < 1e-10, "{energies:?}");
    }
}

#[test]
fn atlas_scenario_solves() {
    let dir = sandbox();
    assert_eq!(run(dir.path(), &["solve", "atlas_two_region.json"]), 0);
    let energy = report(dir.path(), "atlas_two_region")["results"]["energy"].as_f64().unwrap();
    assert!((energy - 0.5).abs() < 1e-10);
}

#[test]
fn mesh_tools() {
    let dir = sandbox();
    let d = dir.path();
    assert_eq!(run(d, &["mesh", "gen", "--shape", "box", "--div", "8", "8", "-o", &d.join("m.msh").display().to_string()]), 0);
    assert_eq!(run(d, &["mesh", "convert", "m.msh", &d.join("m.vtk").display().to_string()]), 0);
    assert!(fs::read_to_string(d.join("m.vtk")).unwrap().contains("CELLS 128"));

    let quality = d.join("q.json").display().to_string();
    assert_eq!(run(d, &["--report", &quality, "mesh", "quality", "m.msh"]), 0);
    let r: Value = serde_json::from_str(&fs::read_to_string(&quality).unwrap()).unwrap();
    assert_eq!(r["results"]["elements"], 128);
    assert!(r["results"]["max"].as_f64().unwrap() < 2.0);

    let args = ["--report", &quality, "mesh", "quality", "m.msh", "--scale", "1e5", "1", "--max-aspect", "1000"];
    assert_eq!(run(d, &args), 3);
}

#[test]
fn published_schema_is_current() {
    let on_disk = fs::read_to_string(workspace().join("docs/scenario.schema.json")).unwrap();
    assert_eq!(on_disk.trim_end(), schema_json().trim_end());
}
