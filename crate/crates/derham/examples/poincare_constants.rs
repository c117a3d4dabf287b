//! Best discrete Poincaré constants under refinement, against the two
//! analytic reference values for the unit cube.

use derham::fespace::Bc;
use derham::mesh::{generate, Shape};
use derham::poincare::constant;

fn main() {
    let pi = std::f64::consts::PI;
    println!("convex-domain gradient bound: 1/pi = {:.6}", 1.0 / pi);
    println!("divergence target on the cube: 1/(3 pi) = {:.6}", 1.0 / (3.0 * pi));

    for l in [0usize, 2] {
        println!("level {l} (bc = none):");
        for n in 1..=3 {
            let mesh = generate(Shape::CubeFreudenthal(n)).unwrap();
            let rep = constant(&mesh, l, 0, Bc::None).unwrap();
            println!(
                "  n={n}: dim {:4}  lambda_min {:+.6e}  C = {:.6}",
                rep.dim, rep.lambda_min_pos, rep.constant
            );
        }
    }

    // Degree enrichment also grows the constant toward the continuous one.
    let mesh = generate(Shape::CubeFreudenthal(2)).unwrap();
    for p in 0..=1 {
        let rep = constant(&mesh, 0, p, Bc::None).unwrap();
        println!("n=2, p={p}: C(l=0) = {:.8} <= 1/pi = {:.8}", rep.constant, 1.0 / pi);
    }

    // The constants are dimensionless: rescaling the mesh leaves them fixed.
    let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
    let scaled = mesh
        .with_vertices(mesh.vertices.iter().map(|v| v * 10.0).collect())
        .unwrap();
    let a = constant(&mesh, 1, 0, Bc::None).unwrap();
    let b = constant(&scaled, 1, 0, Bc::None).unwrap();
    println!(
        "scale invariance at l=1: C = {:.12} vs {:.12} after 10x rescale",
        a.constant, b.constant
    );
}
