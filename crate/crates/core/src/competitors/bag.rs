//! Bootstrap aggregation of the full-model quantile regression.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, CsaError, Result};
use crate::qr::{check_tau, fit_qr, predict_row, QuantileFit, SolverOptions};
use crate::seed::{derive_seed, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagPredictor {
    pub tau: f64,
    pub b: usize,
    pub seed: u64,
    pub fits: Vec<QuantileFit>,
    /// Resamples whose design was singular.
    pub rank_deficient: usize,
    pub n_columns: usize,
}

impl BagPredictor {
    /// Mean of the `b` bootstrap predictions.
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_columns {
            return Err(CsaError::DimensionMismatch {
                expected: self.n_columns,
                got: row.len(),
            });
        }
        let mut s = 0.0;
        for f in &self.fits {
            s += predict_row(f, row)?;
        }
        Ok(s / self.fits.len() as f64)
    }
}

/// Row indices of bootstrap resample `r`: `n` uniform draws with replacement.
pub fn bootstrap_indices(n: usize, seed: u64, r: usize) -> Vec<usize> {
    let mut g = rng(derive_seed(seed, r as u64));
    (0..n).map(|_| g.random_range(0..n)).collect()
}

/// `b` nonparametric bootstrap fits of the model on all columns.
pub fn fit_bag(
    data: &Dataset,
    tau: f64,
    b: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<BagPredictor> {
    if b == 0 {
        return Err(invalid("bootstrap count must be at least 1"));
    }
    let resamples: Vec<Vec<usize>> = (0..b)
        .map(|r| bootstrap_indices(data.n(), seed, r))
        .collect();
    fit_bag_with_indices(data, tau, &resamples, seed, opts)
}

/// Bagging over caller-supplied resamples.
pub fn fit_bag_with_indices(
    data: &Dataset,
    tau: f64,
    resamples: &[Vec<usize>],
    seed: u64,
    opts: &SolverOptions,
) -> Result<BagPredictor> {
    check_tau(tau)?;
    if resamples.is_empty() {
        return Err(invalid("bootstrap count must be at least 1"));
    }
    if let Some(bad) = resamples.iter().flatten().find(|&&i| i >= data.n()) {
        return Err(invalid(format!("resample row {bad} out of range")));
    }
    let cols: Vec<usize> = (0..data.p()).collect();
    let fits: Vec<QuantileFit> = resamples
        .par_iter()
        .map(|idx| fit_qr(&data.select_rows(idx), &cols, tau, opts))
        .collect::<Result<_>>()?;
    Ok(BagPredictor {
        tau,
        b: fits.len(),
        seed,
        rank_deficient: fits.iter().filter(|f| f.rank_deficient).count(),
        fits,
        n_columns: data.p(),
    })
}
