//! Discrete exterior calculus on simplicial manifolds with boundary.
//!
//! Whitney-form Hodge Laplacians for bundle-valued forms, Dirichlet Green
//! kernels and their decay, harmonic spaces and Hodge potentials, Sobolev-type
//! inequality checks, and a planar finite-difference model of the weighted
//! `dbar` problem.

pub mod dbar;
pub mod dec;
pub mod error;
pub mod fit;
pub mod green;
pub mod hodge;
pub mod inequalities;
pub mod linalg;
pub mod mesh;
pub mod rng;

pub use error::{Error, Result};
pub use mesh::{distance_field, generate_mesh, DistanceField, MeshShape, SimplicialMesh};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
