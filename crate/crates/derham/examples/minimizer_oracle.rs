//! Compare discrete constrained minimizers against richer discrete oracles
//! (higher degree or one uniform refinement) standing in for the continuous
//! minimizer: nested oracles always give ratios >= 1, and the largest ratio
//! estimates the minimizer-comparison constant from below.

use derham::fespace::Bc;
use derham::mesh::{generate, Shape};
use derham::poincare::{route1_min_ratio, OracleSpec};

fn main() {
    let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
    for l in 1..=2usize {
        for oracle in [
            OracleSpec::SameSpace,
            OracleSpec::DegreePlus(1),
            OracleSpec::DegreePlus(2),
            OracleSpec::Refined,
        ] {
            let rep = route1_min_ratio(&mesh, l, 0, Bc::None, oracle, 16, 9).unwrap();
            let min = rep.ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            println!(
                "l={l} oracle={:<9} ratios in [{:.6}, {:.6}] (16 samples, nested: {})",
                rep.oracle, min, rep.max_ratio, rep.nested
            );
            assert!(min >= 1.0 - 1e-9);
        }
        // Enriching the oracle can only shrink the oracle minimum, so the
        // reported estimate grows monotonically.
        let r1 = route1_min_ratio(&mesh, l, 0, Bc::None, OracleSpec::DegreePlus(1), 16, 9).unwrap();
        let r2 = route1_min_ratio(&mesh, l, 0, Bc::None, OracleSpec::DegreePlus(2), 16, 9).unwrap();
        println!(
            "l={l}: oracle enrichment raises the estimate: {:.6} -> {:.6}",
            r1.max_ratio, r2.max_ratio
        );
        assert!(r2.max_ratio >= r1.max_ratio - 1e-9);
    }
}
