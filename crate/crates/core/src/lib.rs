//! Lowest-order `L^p` primal-dual weak Galerkin (PDWG) solver for the
//! three-dimensional div-curl system with a normal boundary condition:
//!
//! ```text
//!   div(eps u) = f      in Omega
//!   curl u     = g      in Omega
//!   eps u . n  = phi1   on the boundary
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: structured Kuhn tetrahedral meshes of voxel-union domains,
//!   face geometry and boundary-component labels.
//! * [`spaces`]: global degree-of-freedom layout for the four weak Galerkin
//!   spaces with boundary ties, zeros and the mean-zero multiplier.
//! * [`weakcalc`]: element kernels (weak gradient, weak curl, projections)
//!   and simplex quadrature.
//! * [`assembly`]: the symmetric indefinite saddle system of one
//!   reweighted iterate.
//! * [`solver`]: sparse direct solves and the outer reweighted iteration.
//! * [`problems`]: the catalog of manufactured test problems.
//! * [`analysis`]: error norms, convergence rates, tables and VTK export.
//! * [`study`]: one mesh-solve-measure pass, shared by the CLI and tests.

pub mod analysis;
pub mod assembly;
pub mod mesh;
pub mod problems;
pub mod solver;
pub mod spaces;
pub mod study;
pub mod weakcalc;

mod vec3;

pub use vec3::Vec3;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("linear solve failed: {0}")]
    Solve(String),
    #[error("unknown example id {0}")]
    UnknownExample(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
