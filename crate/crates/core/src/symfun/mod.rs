//! Elementary symmetric functions, power sums and homogeneous speed functions
//! of the principal curvatures.

mod curvature;
mod derivs;
mod sigma;
mod speed;

pub use curvature::{CurvatureVector, MAX_DIM};
pub use derivs::{
    eval_bundle, euler_residual, gradient_divided_difference, second_derivative_form,
    DerivativeBundle, LogDerivatives, DIVIDED_DIFFERENCE_GAP,
};
pub use sigma::{power_sum, sigma, sigma_identity_residuals, IdentityResidual, SigmaIdentityResiduals};
pub use speed::{Basis, Factor, SpeedFunction, Term};

pub(crate) use sigma::sigma_skip;
pub(crate) use speed::Order;
