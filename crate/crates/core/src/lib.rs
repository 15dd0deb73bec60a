//! kornlab: a numerical laboratory for Korn, Poincaré and inf-sup constants
//! on meshed domains with mixed tangential/normal boundary conditions.
//!
//! The crate builds labeled simplicial meshes of a small domain catalog,
//! computes the rigid-motion kernels compatible with the boundary labels,
//! assembles P1/MINI finite-element forms, and turns each inequality into a
//! constrained extremal Rayleigh quotient with the kernel spaces deflated by
//! explicit orthogonality constraints. Flow integration checks that rigid
//! motions tangential to a boundary keep their trajectories on it.

pub mod calculus;
pub mod elasticity;
pub mod error;
pub mod fem;
pub mod flow;
pub mod geometry;
pub mod rigid;
pub mod spectra;

pub use error::{Error, Result};
