//! Generates meshes, maps one through a nonlinear chart, checks quality and
//! round-trips it through the Gmsh format.

use chartfem::geometry::ChartMap;
use chartfem::mesh::{generate_structured, map_mesh, quality, read_msh_str, write_msh_string, write_vtk_string, Shape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cube = generate_structured(&Shape::Box { min: vec![0.0; 3], max: vec![1.0; 3] }, &[3, 3, 3])?;
    println!("cube: {} nodes, {} tetrahedra, boundary tags {:?}", cube.node_count(), cube.element_count(), cube.boundary_tags());

    let annulus = generate_structured(&Shape::Annulus { center: [0.0, 0.0], inner: 1.0, outer: 2.0 }, &[48, 8])?;
    let q = quality(&annulus);
    println!("annulus: {} triangles, aspect ratio {:.3}..{:.3}", annulus.element_count(), q.min, q.max);

    let stretched = map_mesh(&annulus, &ChartMap::polar_stretch(&[0.0, 0.0], 1.0, 2.0)?)?;
    let q = quality(&stretched);
    println!("polar-stretched: aspect ratio {:.3}..{:.3}, worst element {}", q.min, q.max, q.worst_element);

    let text = write_msh_string(&stretched);
    let back = read_msh_str(&text)?;
    println!("msh round trip: {} bytes, {} elements, same tags: {}", text.len(), back.element_count(), back.region_tags() == stretched.region_tags());
    println!("vtk: {} bytes", write_vtk_string(&back, &[])?.len());
    Ok(())
}
