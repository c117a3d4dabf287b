//! Mesh generation, geometry measures, star extraction, and text I/O.

use derham::mesh::{generate, uniform_refine, Mesh, Shape, StarKind};

fn main() {
    for (name, shape) in [
        ("reference tet", Shape::ReferenceTet),
        ("unit cube, Freudenthal n=2", Shape::CubeFreudenthal(2)),
        ("stretched cube, aspect 4", Shape::StretchedCube { n: 1, aspect: 4.0 }),
        ("synthetic 8-tet vertex star", Shape::VertexStarSynthetic(8)),
    ] {
        let mesh = generate(shape).unwrap();
        let g = mesh.geometry();
        println!(
            "{name}: V={} E={} F={} T={} euler={} rho={:.4} h_omega={:.4}",
            mesh.num_vertices(),
            mesh.num_edges(),
            mesh.num_faces(),
            mesh.num_tets(),
            mesh.euler_characteristic(),
            g.rho,
            g.h_omega,
        );
    }

    // Stars of the cube mesh: the interior grid vertex of n=2 collects 24
    // tets; a twice-extended element star of any tet covers the whole cube.
    let cube = generate(Shape::CubeFreudenthal(2)).unwrap();
    let center = 13; // grid vertex (1,1,1) of the 3x3x3 lattice
    let star = cube.extract_star(StarKind::Vertex, center).unwrap();
    println!(
        "vertex star of the center vertex: {} tets, {} vertices",
        star.submesh.num_tets(),
        star.submesh.num_vertices()
    );
    let ext = cube.extract_star(StarKind::TwiceExtendedElement, 0).unwrap();
    println!(
        "twice-extended star of tet 0: {} of {} tets",
        ext.submesh.num_tets(),
        cube.num_tets()
    );

    // Uniform refinement nests the coarse mesh: 8 children per tet.
    let fine = uniform_refine(&cube).unwrap();
    println!(
        "uniform refinement: {} -> {} tets, volume drift {:.1e}",
        cube.num_tets(),
        fine.num_tets(),
        (fine.total_volume() - cube.total_volume()).abs()
    );

    // The text format round-trips, with comments allowed.
    let text = format!("# demo mesh\n{}", cube.write_text());
    let back = Mesh::read_text(&text).unwrap();
    assert_eq!(back.tets, cube.tets);
    println!("text round-trip: {} bytes, identical connectivity", text.len());
}
