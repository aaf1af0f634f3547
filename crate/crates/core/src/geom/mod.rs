//! Rotationally symmetric convex hypersurfaces as radial graphs over the polar
//! angle: principal curvatures, support function, self-similarity residual
//! and the maximum-principle test quantities.

mod curvature;
mod profile;
mod selfsim;

pub use curvature::{curvature_field, CurvatureField, NodeCurvature};
pub use profile::{legendre, make_shape, unit_sphere_area, MeridianProfile, Shape, MIN_GRID};
pub use selfsim::{
    diagnostics, selfsim_residual, sphere_identity_residuals, stationary_sphere_radius, Diagnostics,
    SelfSimResidual, SphereIdentityResiduals,
};

pub(crate) use curvature::{cot_table, node_curvature};
pub(crate) use selfsim::{diagnostics_from_field, selfsim_from_field};
