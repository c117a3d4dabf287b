//! Discrete de Rham complexes on tetrahedral meshes.
//!
//! The crate builds the four-level complex of Lagrange, Nédélec,
//! Raviart–Thomas, and discontinuous spaces on a tetrahedral mesh, assembles
//! its mass and differential operators, computes best discrete Poincaré
//! constants for the gradient, curl, and divergence, and cross-checks them
//! through the equivalent formulations: stability of constrained
//! minimization, discrete inf-sup conditions, operator norms of minimal
//! vector potentials, and graph-stable commuting projections. An explicit
//! H(div) commuting projection by flux equilibration over vertex stars and a
//! piecewise-Piola transport route to companion reference meshes round out
//! the toolbox.
//!
//! See the `examples/` directory for one runnable program per capability,
//! and the `derham` binary for the command-line front end.

pub mod cli;
pub mod complex;
pub mod equilibration;
pub mod error;
pub mod fespace;
pub mod mesh;
pub mod poincare;
pub mod poly;
pub mod solvers;

pub use error::{Error, Result};
