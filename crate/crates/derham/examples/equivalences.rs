//! The four equivalent routes to the best constant: Rayleigh eigenvalue,
//! sampled minimization stability, inf-sup value, and the potential
//! operator norm.

use derham::fespace::Bc;
use derham::mesh::{generate, Shape};
use derham::poincare::{
    eigen_constant, inf_sup, potential_norm, stability_sup, ComplexOps,
};

fn main() {
    let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
    for bc in [Bc::None, Bc::Homogeneous] {
        let ops = ComplexOps::build(&mesh, 0, bc).unwrap();
        for l in 1..=2usize {
            let (rep, _) = eigen_constant(&ops, l, 7).unwrap();
            let c = rep.constant;
            let h = rep.h_omega;
            let is = inf_sup(&ops, l).unwrap();
            let pot = potential_norm(&ops, l).unwrap();
            let sup_sampled = stability_sup(&ops, l, 32, 7, false).unwrap();
            let sup_extremal = stability_sup(&ops, l, 1, 7, true).unwrap();
            println!("l={l}, bc={bc}: C = {c:.10}");
            println!("  inf-sup * C * h - 1      = {:+.2e}", is * c * h - 1.0);
            println!("  potential / (C h) - 1    = {:+.2e}", pot / (c * h) - 1.0);
            println!("  sampled sup (32 draws)   = {sup_sampled:.10} <= C");
            println!("  sup incl. extremal       = {sup_extremal:.10} = C");
            assert!((is * c * h - 1.0).abs() < 1e-8);
            assert!((pot / (c * h) - 1.0).abs() < 1e-8);
            assert!(sup_sampled <= c + 1e-8);
            assert!((sup_extremal - c).abs() < 1e-8 * c);
        }
    }
    println!("all identities hold to 1e-8");
}
