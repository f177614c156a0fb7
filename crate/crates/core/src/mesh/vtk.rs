use super::{Mesh, MeshError};
use crate::geometry::Point;
use crate::linalg::fmt17;
use std::fmt::Write as _;
use std::path::Path;

/// A named array attached to nodes or cells of a legacy VTK file.
#[derive(Clone, Debug, PartialEq)]
pub enum VtkField {
    NodalScalar { name: String, values: Vec<f64> },
    NodalVector { name: String, values: Vec<Vec<f64>> },
    CellScalar { name: String, values: Vec<f64> },
    CellVector { name: String, values: Vec<Vec<f64>> },
}

impl VtkField {
    fn is_nodal(&self) -> bool {
        matches!(self, VtkField::NodalScalar { .. } | VtkField::NodalVector { .. })
    }

    fn name(&self) -> &str {
        match self {
            VtkField::NodalScalar { name, .. }
            | VtkField::NodalVector { name, .. }
            | VtkField::CellScalar { name, .. }
            | VtkField::CellVector { name, .. } => name,
        }
    }

    fn len(&self) -> usize {
        match self {
            VtkField::NodalScalar { values, .. } | VtkField::CellScalar { values, .. } => values.len(),
            VtkField::NodalVector { values, .. } | VtkField::CellVector { values, .. } => values.len(),
        }
    }

    fn write(&self, out: &mut String) {
        match self {
            VtkField::NodalScalar { name, values } | VtkField::CellScalar { name, values } => {
                let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for v in values {
                    let _ = writeln!(out, "{}", fmt17(*v));
                }
            }
            VtkField::NodalVector { name, values } | VtkField::CellVector { name, values } => {
                let _ = writeln!(out, "VECTORS {name} double");
                for v in values {
                    let c = |i: usize| fmt17(v.get(i).copied().unwrap_or(0.0));
                    let _ = writeln!(out, "{} {} {}", c(0), c(1), c(2));
                }
            }
        }
    }
}

/// Legacy ASCII `UNSTRUCTURED_GRID` with optional point and cell data.
pub fn write_vtk_string(mesh: &Mesh, fields: &[VtkField]) -> Result<String, MeshError> {
    for f in fields {
        let expected = if f.is_nodal() { mesh.node_count() } else { mesh.element_count() };
        if f.len() != expected {
            return Err(MeshError::LengthMismatch { name: f.name().to_string(), expected, found: f.len() });
        }
    }
    let mut out = String::from("# vtk DataFile Version 3.0\nchartfem\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", mesh.node_count());
    for p in mesh.nodes() {
        let z = if mesh.dim() == 3 { p[2] } else { 0.0 };
        let _ = writeln!(out, "{} {} {}", fmt17(p[0]), fmt17(p[1]), fmt17(z));
    }
    let arity = mesh.dim() + 1;
    let _ = writeln!(out, "CELLS {} {}", mesh.element_count(), mesh.element_count() * (arity + 1));
    for e in mesh.elements() {
        let ids: Vec<String> = e.nodes.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{arity} {}", ids.join(" "));
    }
    let cell_type = if mesh.dim() == 3 { 10 } else { 5 };
    let _ = writeln!(out, "CELL_TYPES {}", mesh.element_count());
    for _ in mesh.elements() {
        let _ = writeln!(out, "{cell_type}");
    }
    let nodal: Vec<&VtkField> = fields.iter().filter(|f| f.is_nodal()).collect();
    let cell: Vec<&VtkField> = fields.iter().filter(|f| !f.is_nodal()).collect();
    if !nodal.is_empty() {
        let _ = writeln!(out, "POINT_DATA {}", mesh.node_count());
        nodal.iter().for_each(|f| f.write(&mut out));
    }
    if !cell.is_empty() {
        let _ = writeln!(out, "CELL_DATA {}", mesh.element_count());
        cell.iter().for_each(|f| f.write(&mut out));
    }
    Ok(out)
}

pub fn write_vtk(mesh: &Mesh, fields: &[VtkField], path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, write_vtk_string(mesh, fields)?)?;
    Ok(())
}

/// `x,y[,z],value` rows with 17 significant digits.
pub fn write_probe_csv(points: &[Point], values: &[f64], path: impl AsRef<Path>) -> Result<(), MeshError> {
    if points.len() != values.len() {
        return Err(MeshError::LengthMismatch { name: "probe values".into(), expected: points.len(), found: values.len() });
    }
    let dim = points.first().map_or(2, Point::dim);
    let mut out = String::from(if dim == 3 { "x,y,z,value\n" } else { "x,y,value\n" });
    for (p, v) in points.iter().zip(values) {
        let coords: Vec<String> = p.as_slice().iter().map(|c| fmt17(*c)).collect();
        let _ = writeln!(out, "{},{}", coords.join(","), fmt17(*v));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured, Shape};

    fn square() -> Mesh {
        generate_structured(&Shape::Box { min: vec![0.0, 0.0], max: vec![1.0, 1.0] }, &[2, 2]).unwrap()
    }

    #[test]
    fn nodal_scalar_block() {
        let m = square();
        let u: Vec<f64> = m.nodes().iter().map(|p| p[0]).collect();
        let s = write_vtk_string(&m, &[VtkField::NodalScalar { name: "u".into(), values: u }]).unwrap();
        assert!(s.contains("POINT_DATA 9\nSCALARS u double 1"));
        assert!(!s.contains("CELL_DATA"));
        assert!(s.contains("CELL_TYPES 8"));
    }

    #[test]
    fn cell_vectors_block() {
        let m = square();
        let e = vec![vec![-1.0, 0.0]; m.element_count()];
        let s = write_vtk_string(&m, &[VtkField::CellVector { name: "E".into(), values: e }]).unwrap();
        assert!(s.contains("CELL_DATA 8\nVECTORS E double"));
    }

    #[test]
    fn geometry_only_and_length_mismatch() {
        let m = square();
        let s = write_vtk_string(&m, &[]).unwrap();
        assert!(s.starts_with("# vtk DataFile Version 3.0") && !s.contains("POINT_DATA"));
        let bad = VtkField::NodalScalar { name: "u".into(), values: vec![0.0; 3] };
        assert!(matches!(write_vtk_string(&m, &[bad]), Err(MeshError::LengthMismatch { expected: 9, found: 3, .. })));
    }
}
