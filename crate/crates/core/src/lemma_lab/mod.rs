//! Matrices and pointwise inequalities on the positive cone, evaluated as
//! signed margins, plus seeded random campaigns over them.

mod campaign;
mod inequalities;
mod matrix;

pub use campaign::{
    run_campaign, run_campaign_by_name, sample_direction, sample_lambda, sample_rng, CampaignParams,
    InequalityReport, LemmaId, ReportParameters, MAX_CAMPAIGN_DIM,
};
pub use inequalities::{
    alpha_window, alpha_window_factor, alpha_window_scale, bottom_gap_quotient, cauchy_schwarz_margin,
    cauchy_schwarz_scale, condition_margins, constrained_minimizer, constrained_minimum, constrained_objective,
    key_inequality_margin, key_inequality_scale, l1_rigid_regime, monotone_quotient, power_sum_log_hessian_margin,
    power_sum_log_hessian_parts, rigidity_l1_pairwise, rigidity_terms, sigma_quadratic_form_margin,
    ConditionMargins, ConditionPart, ConditionVerdict, RigidityTerms,
};
pub use matrix::{
    build_a, build_a_gap, build_a_gap_direct, build_a_tilde, build_d, det_identity_residual, is_psd, psd_margin, xi,
    SymmetricMatrix, PSD_TOL,
};
