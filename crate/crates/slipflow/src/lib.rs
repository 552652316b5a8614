//! Steady incompressible Navier-Stokes in pipe-like domains with the
//! Navier-slip boundary condition: mapped-grid finite elements, slip
//! Poiseuille profiles, a divergence-free background profile vector,
//! Stokes/Navier-Stokes solvers, and a verification suite for flux
//! constancy, energy bounds, uniqueness, and exponential decay.

pub mod assemble;
pub mod config;
pub mod diag;
pub mod driver;
pub mod error;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod ns;
pub mod poiseuille;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod shape;
pub mod space;
pub mod sparse;
pub mod stokes;
pub mod system;

pub use error::{Error, Result};

/// Pin the linear-algebra backend to sequential execution so repeated runs
/// are bitwise reproducible.
pub fn init_deterministic() {
    faer::set_global_parallelism(faer::Par::Seq);
}
