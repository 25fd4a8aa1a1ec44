//! Monte Carlo comparison of quantile predictors on equicorrelated Gaussian
//! designs, scored by out-of-sample check loss.

mod design;
mod study;

pub use design::{
    default_k_obs, gen_equicorrelated_normal, gen_replication, signal_variance, solve_theta_for_r2,
    Family, Signal, SimDesign, LATENT_COLUMNS,
};
pub use study::{
    fpe_of, run_study, run_study_with_progress, summarize, Failure, MethodStats, StudyResult,
    StudySummary,
};
