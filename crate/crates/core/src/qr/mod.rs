//! Check-loss (pinball) quantile regression.
//!
//! Fits run an interior point solve followed by a crossover to an optimal
//! basic solution, so returned coefficients interpolate `p` observations
//! exactly whenever the design has full column rank. The crossover state is
//! kept around (crate-internal) so holdout refits can restart from it.

mod ipm;
mod penalized;
pub(crate) mod vertex;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, CsaError, Result};
use vertex::{dot, Vertex};

pub use penalized::{belloni_lambda, fit_qr_l1, fit_qr_l1_weighted, fit_qr_l2};

/// Controls for the interior point solve and the crossover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Relative duality-gap / feasibility tolerance.
    pub tol: f64,
    /// Interior point iteration cap.
    pub max_iter: usize,
    /// Diagonal regularization added to the normal equations.
    pub ridge_eps: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            ridge_eps: 1e-10,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(invalid("solver tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(invalid("solver max_iter must be at least 1"));
        }
        if !(self.ridge_eps >= 0.0) {
            return Err(invalid("solver ridge_eps must be non-negative"));
        }
        Ok(())
    }
}

/// Coefficients of one quantile regression plus solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileFit {
    /// Dataset columns the coefficients refer to, in order.
    pub cols: Vec<usize>,
    pub theta: Vec<f64>,
    pub tau: f64,
    /// Mean check loss at `theta` (plus the penalty for penalized fits).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The design was singular and the ridge-stabilized solution was kept.
    pub rank_deficient: bool,
}

/// Residual sign tally used by the fit-property check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignCounts {
    pub neg: usize,
    pub zero: usize,
    pub pos: usize,
}

/// `rho_tau(u) = u * (tau - 1{u <= 0})`.
pub fn check_loss(u: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(rho(u, tau))
}

/// Subgradient of the check loss, `tau - 1{u <= 0}`.
pub fn psi(u: f64, tau: f64) -> f64 {
    if u <= 0.0 {
        tau - 1.0
    } else {
        tau
    }
}

#[inline]
pub(crate) fn rho(u: f64, tau: f64) -> f64 {
    if u <= 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("quantile level {tau} outside (0, 1)")))
    }
}

/// Mean check loss of `y - x'theta` over a dataset.
pub fn mean_check_loss(data: &Dataset, cols: &[usize], theta: &[f64], tau: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..data.n() {
        let row = data.row(i);
        let fit: f64 = cols.iter().zip(theta).map(|(&c, t)| row[c] * t).sum();
        s += rho(data.y()[i] - fit, tau);
    }
    s / data.n() as f64
}

/// Unpenalized quantile regression of `y` on the columns `cols`.
pub fn fit_qr(
    data: &Dataset,
    cols: &[usize],
    tau: f64,
    opts: &SolverOptions,
) -> Result<QuantileFit> {
    check_tau(tau)?;
    opts.validate()?;
    data.check_cols(cols)?;
    let prob = Problem::from_dataset(data, cols, tau);
    let solved = solve(&prob, opts);
    Ok(solved.into_fit(&prob, cols.to_vec()))
}

/// `x' theta` for a vector laid out like `fit.theta`.
pub fn predict(fit: &QuantileFit, x: &[f64]) -> Result<f64> {
    if x.len() != fit.theta.len() {
        return Err(CsaError::DimensionMismatch {
            expected: fit.theta.len(),
            got: x.len(),
        });
    }
    Ok(dot(x, &fit.theta))
}

/// Prediction from a full dataset row; picks out `fit.cols`.
pub fn predict_row(fit: &QuantileFit, row: &[f64]) -> Result<f64> {
    if let Some(&c) = fit.cols.iter().find(|&&c| c >= row.len()) {
        return Err(CsaError::DimensionMismatch {
            expected: c + 1,
            got: row.len(),
        });
    }
    Ok(fit
        .cols
        .iter()
        .zip(&fit.theta)
        .map(|(&c, t)| row[c] * t)
        .sum())
}

/// Zero threshold for residual classification, `1e-7 * (1 + max|y|)`.
pub fn zero_tolerance(y: &[f64]) -> f64 {
    1e-7 * (1.0 + y.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Counts negative, zero and positive residuals of `fit` on `data`.
pub fn residual_sign_counts(fit: &QuantileFit, data: &Dataset) -> Result<SignCounts> {
    let tol = zero_tolerance(data.y());
    let mut counts = SignCounts {
        neg: 0,
        zero: 0,
        pos: 0,
    };
    for i in 0..data.n() {
        let r = data.y()[i] - predict_row(fit, data.row(i))?;
        if r < -tol {
            counts.neg += 1;
        } else if r > tol {
            counts.pos += 1;
        } else {
            counts.zero += 1;
        }
    }
    Ok(counts)
}

/// Dense row-major regression problem restricted to a column subset.
#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub n: usize,
    pub p: usize,
    pub tau: f64,
}

impl Problem {
    pub fn from_dataset(data: &Dataset, cols: &[usize], tau: f64) -> Self {
        Self {
            x: data.gather(cols),
            y: data.y().to_vec(),
            n: data.n(),
            p: cols.len(),
            tau,
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn zero_tol(&self) -> f64 {
        zero_tolerance(&self.y)
    }

    pub fn objective(&self, theta: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| rho(self.y[i] - dot(self.row(i), theta), self.tau))
            .sum::<f64>()
            / self.n as f64
    }

    fn without_rows(&self, excluded: &[usize]) -> Problem {
        let mut keep = vec![true; self.n];
        for &e in excluded {
            keep[e] = false;
        }
        let mut x = Vec::with_capacity(self.x.len());
        let mut y = Vec::with_capacity(self.n);
        for i in (0..self.n).filter(|&i| keep[i]) {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Problem {
            n: y.len(),
            x,
            y,
            p: self.p,
            tau: self.tau,
        }
    }

    fn pivot_cap(&self) -> usize {
        50 * (self.n + self.p)
    }
}

/// Result of a full solve, with the optimal vertex when one was certified.
#[derive(Debug, Clone)]
pub(crate) struct Solved {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub rank_deficient: bool,
    pub vertex: Option<Vertex>,
}

impl Solved {
    pub fn into_fit(self, prob: &Problem, cols: Vec<usize>) -> QuantileFit {
        QuantileFit {
            cols,
            objective: prob.objective(&self.theta),
            theta: self.theta,
            tau: prob.tau,
            iterations: self.iterations,
            converged: self.converged,
            rank_deficient: self.rank_deficient,
        }
    }
}

/// Interior point solve followed by crossover to an optimal vertex.
pub(crate) fn solve(prob: &Problem, opts: &SolverOptions) -> Solved {
    let ipm = ipm::solve(&prob.x, &prob.y, prob.n, prob.p, prob.tau, None, opts);
    let resid: Vec<f64> = (0..prob.n)
        .map(|i| prob.y[i] - dot(prob.row(i), &ipm.theta))
        .collect();
    let basis = independent_rows(prob, &resid);
    let ipm_fallback = |rank_deficient: bool| Solved {
        theta: ipm.theta.clone(),
        iterations: ipm.iterations,
        converged: ipm.converged,
        rank_deficient,
        vertex: None,
    };
    let Some(basis) = basis else {
        return ipm_fallback(true);
    };
    let Ok(mut vtx) = Vertex::new(prob, basis) else {
        return ipm_fallback(true);
    };
    match vtx.optimize(prob, prob.pivot_cap()) {
        Ok(pivots) => Solved {
            theta: vtx.theta.clone(),
            iterations: ipm.iterations + pivots,
            converged: true,
            rank_deficient: false,
            vertex: Some(vtx),
        },
        Err(_) => ipm_fallback(false),
    }
}

/// Coefficients fitted without the `excluded` rows, restarting from `base`
/// when available.
pub(crate) fn solve_holdout(
    prob: &Problem,
    base: Option<&Vertex>,
    excluded: &[usize],
    opts: &SolverOptions,
) -> Vec<f64> {
    if let Some(base) = base {
        let mut v = base.clone();
        v.deactivate(excluded);
        if v.active_count() >= prob.p
            && v.repair(prob).is_ok()
            && v.optimize(prob, prob.pivot_cap()).is_ok()
        {
            return v.theta;
        }
    }
    solve(&prob.without_rows(excluded), opts).theta
}

/// Greedy selection of `p` linearly independent rows, smallest |residual| first.
fn independent_rows(prob: &Problem, resid: &[f64]) -> Option<Vec<usize>> {
    let p = prob.p;
    if prob.n < p {
        return None;
    }
    let mut order: Vec<usize> = (0..prob.n).collect();
    order.sort_by(|&a, &b| resid[a].abs().total_cmp(&resid[b].abs()).then(a.cmp(&b)));
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut chosen = Vec::with_capacity(p);
    for &i in &order {
        let row = prob.row(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let mut r: Vec<f64> = row.iter().map(|v| v / norm).collect();
        for _ in 0..2 {
            for b in &q {
                let c = dot(&r, b);
                for (rv, bv) in r.iter_mut().zip(b) {
                    *rv -= c * bv;
                }
            }
        }
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn > 1e-8 {
            r.iter_mut().for_each(|v| *v /= rn);
            q.push(r);
            chosen.push(i);
            if chosen.len() == p {
                return Some(chosen);
            }
        }
    }
    None
}
