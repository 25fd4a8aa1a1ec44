//! Tuned L1 and L2 penalized quantile regressions.

use serde::{Deserialize, Serialize};

use crate::csa::{make_folds, CvMode};
use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::qr::{
    belloni_lambda, check_tau, fit_qr, fit_qr_l1_weighted, fit_qr_l2, mean_check_loss, predict_row,
    QuantileFit, SolverOptions,
};

/// Penalty grid used for the L2 baseline.
pub const L2_GRID: [f64; 5] = [0.01, 0.05, 0.1, 0.5, 1.0];

/// A penalized fit with the penalty level it was tuned to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedFit {
    pub lambda: f64,
    pub fit: QuantileFit,
    /// Held-out loss per candidate (L2 only, empty for L1).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cv_losses: Vec<(f64, f64)>,
    /// Columns left out because they have zero variance (L1 only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<usize>,
    pub n_columns: usize,
}

impl TunedFit {
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_columns {
            return Err(crate::CsaError::DimensionMismatch {
                expected: self.n_columns,
                got: row.len(),
            });
        }
        predict_row(&self.fit, row)
    }
}

/// Settings of the simulated L1 penalty rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct L1Settings {
    pub confidence: f64,
    pub n_sim: usize,
}

impl Default for L1Settings {
    fn default() -> Self {
        Self {
            confidence: 0.9,
            n_sim: 1000,
        }
    }
}

fn is_constant(col: &[f64]) -> bool {
    col.iter().all(|v| *v == col[0])
}

/// L1 quantile regression with the simulated pivotal penalty level.
/// Each non-intercept coefficient is penalized by `lambda * sigma_j`, where
/// `sigma_j` is the root mean square of its column.
pub fn fit_l1qr(
    data: &Dataset,
    tau: f64,
    settings: &L1Settings,
    seed: u64,
    opts: &SolverOptions,
) -> Result<TunedFit> {
    check_tau(tau)?;
    let intercept = data.intercept_col();
    let mut dropped = Vec::new();
    let mut penalized = Vec::new();
    for j in (0..data.p()).filter(|&j| Some(j) != intercept) {
        if is_constant(&data.column(j)) {
            dropped.push(j);
        } else {
            penalized.push(j);
        }
    }
    let cols: Vec<usize> = intercept
        .into_iter()
        .chain(penalized.iter().copied())
        .collect();
    if cols.is_empty() {
        return Err(invalid("no usable columns for L1 quantile regression"));
    }
    if penalized.is_empty() {
        let fit = fit_qr(data, &cols, tau, opts)?;
        return Ok(TunedFit {
            lambda: 0.0,
            fit,
            cv_losses: Vec::new(),
            dropped,
            n_columns: data.p(),
        });
    }
    let lambda = belloni_lambda(
        data,
        &penalized,
        tau,
        settings.confidence,
        settings.n_sim,
        seed,
    )?;
    let n = data.n() as f64;
    let lambdas: Vec<f64> = cols
        .iter()
        .map(|&c| {
            if Some(c) == intercept {
                0.0
            } else {
                let rms = (data.column(c).iter().map(|v| v * v).sum::<f64>() / n).sqrt();
                lambda * rms
            }
        })
        .collect();
    let fit = fit_qr_l1_weighted(data, &cols, tau, &lambdas, opts)?;
    Ok(TunedFit {
        lambda,
        fit,
        cv_losses: Vec::new(),
        dropped,
        n_columns: data.p(),
    })
}

/// Squared-L2 quantile regression with the penalty chosen by `folds`-fold
/// cross-validation over `grid` (smallest value wins ties), refit on the
/// full sample.
pub fn fit_l2qr_cv(
    data: &Dataset,
    tau: f64,
    grid: &[f64],
    folds: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<TunedFit> {
    check_tau(tau)?;
    if grid.is_empty() {
        return Err(invalid("penalty grid is empty"));
    }
    if grid.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(invalid(
            "penalty grid values must be finite and non-negative",
        ));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let n = data.n();
    let blocks = make_folds(n, CvMode::BFold(folds.min(n)), seed)?;
    let cols: Vec<usize> = (0..data.p()).collect();
    let mut cv_losses = Vec::with_capacity(grid.len());
    for &lambda in &grid {
        let mut total = 0.0;
        for block in &blocks {
            let keep: Vec<usize> = (0..n).filter(|i| block.binary_search(i).is_err()).collect();
            let fit = fit_qr_l2(&data.select_rows(&keep), &cols, tau, lambda, opts)?;
            total += mean_check_loss(&data.select_rows(block), &cols, &fit.theta, tau)
                * block.len() as f64;
        }
        cv_losses.push((lambda, total / n as f64));
    }
    let best = crate::csa::argmin_first(&cv_losses.iter().map(|c| c.1).collect::<Vec<_>>());
    let lambda = cv_losses[best].0;
    let fit = fit_qr_l2(data, &cols, tau, lambda, opts)?;
    Ok(TunedFit {
        lambda,
        fit,
        cv_losses,
        dropped: Vec::new(),
        n_columns: data.p(),
    })
}
