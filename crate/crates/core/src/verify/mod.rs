//! Numerical instantiation of the comparison-principle machinery: residuals
//! of the parabolic operator N and elliptic operator M, the explicit sub- and
//! super-solution constructions with their onset times, the similarity frame
//! F(zeta, t) = u/v_alpha and its convergence metric, and a weak-form
//! residual of the distributional formulation.

mod frame;
mod residuals;
mod sandwich;
mod weakform;

pub use frame::{
    convergence_metric, convergence_metric_seq, similarity_frame, SimilarityFrame,
};
pub use residuals::{
    residual_m, residual_n, residual_n_max, residual_n_max_seq, residual_slack,
    SpaceTimeSamples, N_RESIDUAL_SLACK_C,
};
pub use sandwich::{
    choose_sandwich_shape, choose_t1, choose_t2, plateau_constants, subsolution_candidate_residual,
    supersolution_candidate_residual, PlateauConstants, Sandwich, SandwichAudit,
};
pub use weakform::{weak_form_residual, TestFunction};
