//! Numerical laboratory for homogeneous curvature functions of convex
//! hypersurfaces.
//!
//! The crate is organised in four layers:
//!
//! * [`symfun`]: elementary symmetric functions, power sums and homogeneous
//!   speed functions built from them, with exact first and second derivatives.
//! * [`lemma_lab`]: the matrices and pointwise inequalities used in rigidity
//!   arguments for self-similar solutions, each evaluated as a signed margin,
//!   plus seeded randomized campaigns over them.
//! * [`geom`]: rotationally symmetric closed convex hypersurfaces stored as a
//!   radial graph over the polar angle, with principal curvatures, support
//!   function and maximum-principle diagnostics.
//! * [`flow`]: explicit time integration of `X_t = -F nu` on those profiles.

pub mod error;
pub mod flow;
pub mod geom;
pub mod lemma_lab;
pub mod symfun;

pub use error::{Error, Result};

/// Version string embedded in reports and summaries.
pub const VERSION: &str = concat!("flowlab ", env!("CARGO_PKG_VERSION"));
