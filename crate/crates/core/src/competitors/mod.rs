//! Baseline quantile predictors: jackknife model averaging, bagging and
//! tuned L1/L2 penalized regressions.

mod bag;
mod jma;
mod penalized;

pub use bag::{bootstrap_indices, fit_bag, fit_bag_with_indices, BagPredictor};
pub use jma::{combined_loss, fit_jma, jma_predict, nested_models, simplex_weights, JmaPredictor};
pub use penalized::{fit_l1qr, fit_l2qr_cv, L1Settings, TunedFit, L2_GRID};
