//! Finite elements for linear water waves on two-dimensional corner domains.
//!
//! The crate meshes a fluid domain whose boundary mixes a free surface
//! (Dirichlet data) with solid objects, walls and a bottom (Neumann data),
//! builds the discrete Dirichlet-Neumann operator on the free surface, and
//! evolves the linearized surface system with an energy-conserving scheme.
//! Trace semi-norms, corner weights and a set of verification suites sit on
//! top of these pieces.

pub mod dno;
pub mod domain;
pub mod elliptic;
pub mod error;
pub mod evolution;
pub mod geom;
pub mod cli;
pub mod linalg;
pub mod mesh;
pub mod traces;
pub mod verify;

pub use domain::{BoundaryTag, CornerKind, CornerPoint, DirichletInterval, DomainSpec, Side};
pub use error::{Error, Result};
