//! Gmsh MSH 2.2 ASCII subset: 2-node lines, 3-node triangles and 4-node
//! tetrahedra with physical tags. The top-dimensional simplices become
//! elements and the simplices one dimension lower become boundary facets.

use super::{Element, Facet, Mesh, MeshError};
use crate::geometry::Point;
use crate::linalg::fmt17;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

const POINT: u32 = 15;
const LINE: u32 = 1;
const TRIANGLE: u32 = 2;
const TETRAHEDRON: u32 = 4;

pub fn read_msh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    read_msh_str(&std::fs::read_to_string(path)?)
}

struct RawElement {
    kind: u32,
    tag: u32,
    nodes: Vec<usize>,
    line: usize,
}

fn malformed(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::MalformedFile { line, message: message.into() }
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, MeshError> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| malformed(line, format!("expected {what}")))
}

pub fn read_msh_str(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let mut saw_format = false;
    let mut node_index: HashMap<u64, usize> = HashMap::new();
    let mut coords: Vec<[f64; 3]> = Vec::new();
    let mut raw: Vec<RawElement> = Vec::new();

    while let Some((no, line)) = lines.next() {
        let Some(section) = line.strip_prefix('$') else {
            return Err(malformed(no, format!("expected a section header, found `{line}`")));
        };
        let section = section.to_string();
        match section.as_str() {
            "MeshFormat" => {
                let (fno, fline) = lines.next().ok_or_else(|| malformed(no, "missing format line"))?;
                let mut toks = fline.split_whitespace();
                let version: String = parse(toks.next(), fno, "version")?;
                let file_type: u32 = parse(toks.next(), fno, "file type")?;
                if !version.starts_with("2.") {
                    return Err(MeshError::UnsupportedVersion(format!("MSH version {version}")));
                }
                if file_type != 0 {
                    return Err(MeshError::UnsupportedVersion("binary MSH files".into()));
                }
                saw_format = true;
            }
            "Nodes" => {
                let (cno, cline) = lines.next().ok_or_else(|| malformed(no, "missing node count"))?;
                let count: usize = parse(Some(cline), cno, "node count")?;
                for _ in 0..count {
                    let (lno, l) = lines.next().ok_or_else(|| malformed(cno, "unexpected end of nodes"))?;
                    let mut toks = l.split_whitespace();
                    let tag: u64 = parse(toks.next(), lno, "node tag")?;
                    let x: f64 = parse(toks.next(), lno, "x coordinate")?;
                    let y: f64 = parse(toks.next(), lno, "y coordinate")?;
                    let z: f64 = parse(toks.next(), lno, "z coordinate")?;
                    if node_index.insert(tag, coords.len()).is_some() {
                        return Err(malformed(lno, format!("duplicate node tag {tag}")));
                    }
                    coords.push([x, y, z]);
                }
            }
            "Elements" => {
                let (cno, cline) = lines.next().ok_or_else(|| malformed(no, "missing element count"))?;
                let count: usize = parse(Some(cline), cno, "element count")?;
                for _ in 0..count {
                    let (lno, l) = lines.next().ok_or_else(|| malformed(cno, "unexpected end of elements"))?;
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    let kind: u32 = parse(toks.get(1).copied(), lno, "element type")?;
                    let ntags: usize = parse(toks.get(2).copied(), lno, "tag count")?;
                    let arity = match kind {
                        POINT => 1,
                        LINE => 2,
                        TRIANGLE => 3,
                        TETRAHEDRON => 4,
                        other => return Err(MeshError::UnsupportedVersion(format!("element type {other} (line {lno})"))),
                    };
                    if toks.len() != 3 + ntags + arity {
                        return Err(malformed(lno, format!("expected {} fields", 3 + ntags + arity)));
                    }
                    let tag = if ntags > 0 { parse(Some(toks[3]), lno, "physical tag")? } else { 0 };
                    let nodes = toks[3 + ntags..]
                        .iter()
                        .map(|t| {
                            let id: u64 = parse(Some(t), lno, "node reference")?;
                            node_index.get(&id).copied().ok_or_else(|| malformed(lno, format!("unknown node {id}")))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    raw.push(RawElement { kind, tag, nodes, line: lno });
                }
            }
            _ => {}
        }
        let end = format!("$End{section}");
        loop {
            let (eno, l) = lines.next().ok_or_else(|| malformed(no, format!("missing {end}")))?;
            if l == end {
                break;
            }
            if matches!(section.as_str(), "MeshFormat" | "Nodes" | "Elements") {
                return Err(malformed(eno, format!("expected {end}, found `{l}`")));
            }
        }
    }
    if !saw_format {
        return Err(malformed(1, "missing $MeshFormat section"));
    }
    let dim = if raw.iter().any(|e| e.kind == TETRAHEDRON) { 3 } else { 2 };
    if dim == 2 && !raw.iter().any(|e| e.kind == TRIANGLE) {
        return Err(malformed(1, "no triangles or tetrahedra"));
    }
    let (cell, facet) = if dim == 3 { (TETRAHEDRON, TRIANGLE) } else { (TRIANGLE, LINE) };
    let nodes: Vec<Point> =
        coords.iter().map(|c| if dim == 3 { Point::xyz(c[0], c[1], c[2]) } else { Point::xy(c[0], c[1]) }).collect();
    let mut elements = Vec::new();
    let mut facets = Vec::new();
    for e in raw {
        if e.kind == cell {
            elements.push(Element { nodes: e.nodes, region: e.tag });
        } else if e.kind == facet {
            facets.push(Facet { nodes: e.nodes, tag: e.tag });
        } else if dim == 2 && e.kind == TETRAHEDRON {
            return Err(malformed(e.line, "mixed dimensions"));
        }
    }
    Mesh::new(dim, nodes, elements, facets)
}

pub fn write_msh_string(mesh: &Mesh) -> String {
    let mut out = String::new();
    out.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
    let _ = writeln!(out, "$Nodes\n{}", mesh.node_count());
    for (i, p) in mesh.nodes().iter().enumerate() {
        let z = if mesh.dim() == 3 { p[2] } else { 0.0 };
        let _ = writeln!(out, "{} {} {} {}", i + 1, fmt17(p[0]), fmt17(p[1]), fmt17(z));
    }
    out.push_str("$EndNodes\n");
    let (cell, facet) = if mesh.dim() == 3 { (TETRAHEDRON, TRIANGLE) } else { (TRIANGLE, LINE) };
    let total = mesh.boundary_facets().len() + mesh.element_count();
    let _ = writeln!(out, "$Elements\n{total}");
    let mut id = 0;
    let mut emit = |out: &mut String, kind: u32, tag: u32, nodes: &[usize]| {
        id += 1;
        let refs: Vec<String> = nodes.iter().map(|k| (k + 1).to_string()).collect();
        let _ = writeln!(out, "{id} {kind} 2 {tag} {tag} {}", refs.join(" "));
    };
    for f in mesh.boundary_facets() {
        emit(&mut out, facet, f.tag, &f.nodes);
    }
    for e in mesh.elements() {
        emit(&mut out, cell, e.region, &e.nodes);
    }
    out.push_str("$EndElements\n");
    out
}

pub fn write_msh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, write_msh_string(mesh))?;
    Ok(())
}
