//! Complete subset averaging (CSA) of quantile regressions.
//!
//! For a subset size `k` every size-`k` column subset (or a uniform sample
//! of `cap` of them) gets its own quantile regression, and the prediction is
//! the plain average of the subset predictions. The size is chosen by
//! minimizing a leave-one-out or b-fold cross-validated check loss.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, CsaError, Result};
use crate::qr::vertex::dot;
use crate::qr::{
    check_tau, predict_row, rho, solve, solve_holdout, Problem, QuantileFit, SolverOptions,
};
use crate::seed::{derive_seed, rng, streams};
use crate::subsets::{sample_subsets, SubsetPlan};

/// Cross-validation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvMode {
    Loo,
    BFold(usize),
}

impl CvMode {
    /// Ten folds from 150 observations on, leave-one-out below that.
    pub fn auto(n: usize) -> Self {
        if n >= 150 {
            CvMode::BFold(10)
        } else {
            CvMode::Loo
        }
    }
}

/// Settings shared by CV and the final refit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsaConfig {
    /// Largest subset size considered; `None` means every candidate column.
    pub k_max: Option<usize>,
    /// Maximum number of subsets per size.
    pub cap: usize,
    pub seed: u64,
    /// `None` picks [`CvMode::auto`] from the sample size.
    pub mode: Option<CvMode>,
    /// Put the dataset's intercept column in every subset and draw the
    /// `k` remaining members from the other columns.
    pub force_intercept: bool,
    pub solver: SolverOptions,
}

impl Default for CsaConfig {
    fn default() -> Self {
        Self {
            k_max: None,
            cap: 100,
            seed: 0,
            mode: None,
            force_intercept: false,
            solver: SolverOptions::default(),
        }
    }
}

/// Full-sample fits of every subset of one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsaFitForK {
    pub k: usize,
    pub tau: f64,
    pub plan: SubsetPlan,
    /// Dataset columns that plan members index into.
    pub pool: Vec<usize>,
    /// Column added to every subset in forced-intercept mode.
    pub forced: Option<usize>,
    /// Width of the dataset rows the fits expect.
    pub n_columns: usize,
    /// One fit per `plan.selected` entry, same order.
    pub fits: Vec<QuantileFit>,
}

/// Cross-validation criterion for `k = 1..=values.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCurve {
    pub values: Vec<f64>,
    pub k_hat: usize,
    pub mode: CvMode,
}

/// The deployable forecaster: chosen size, its full-sample fits and the CV curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsaPredictor {
    pub curve: CvCurve,
    #[serde(rename = "final")]
    pub final_fit: CsaFitForK,
    pub seed: u64,
    pub cap: usize,
    pub force_intercept: bool,
}

impl CsaPredictor {
    pub fn k_hat(&self) -> usize {
        self.curve.k_hat
    }

    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        csa_predict(&self.final_fit, row)
    }
}

/// Average of the subset predictions for one full dataset row.
pub fn csa_predict(fit: &CsaFitForK, row: &[f64]) -> Result<f64> {
    if row.len() != fit.n_columns {
        return Err(CsaError::DimensionMismatch {
            expected: fit.n_columns,
            got: row.len(),
        });
    }
    let mut s = 0.0;
    for f in &fit.fits {
        s += predict_row(f, row)?;
    }
    Ok(s / fit.fits.len() as f64)
}

struct Candidates {
    pool: Vec<usize>,
    forced: Option<usize>,
}

impl Candidates {
    fn new(data: &Dataset, force_intercept: bool) -> Result<Self> {
        if !force_intercept {
            return Ok(Self {
                pool: (0..data.p()).collect(),
                forced: None,
            });
        }
        let c = data.intercept_col().ok_or_else(|| {
            invalid("force_intercept requires a dataset with an intercept column")
        })?;
        let pool: Vec<usize> = (0..data.p()).filter(|&j| j != c).collect();
        if pool.is_empty() {
            return Err(invalid("no regressors besides the intercept"));
        }
        Ok(Self {
            pool,
            forced: Some(c),
        })
    }

    fn columns(&self, members: &[usize]) -> Vec<usize> {
        self.forced
            .into_iter()
            .chain(members.iter().map(|&m| self.pool[m]))
            .collect()
    }
}

/// Subset plan for size `k`; the seed depends only on `(seed, k)`.
pub fn plan_for_k(pool_size: usize, k: usize, cap: usize, seed: u64) -> Result<SubsetPlan> {
    sample_subsets(
        pool_size,
        k,
        cap,
        derive_seed(seed, streams::SUBSETS + k as u64),
    )
}

/// Held-out index blocks. Leave-one-out gives singletons in index order;
/// b-fold deals a seeded permutation round-robin so fold sizes differ by at
/// most one.
pub fn make_folds(n: usize, mode: CvMode, seed: u64) -> Result<Vec<Vec<usize>>> {
    match mode {
        CvMode::Loo => Ok((0..n).map(|i| vec![i]).collect()),
        CvMode::BFold(b) => {
            if b < 2 || b > n {
                return Err(invalid(format!("fold count {b} outside 2..={n}")));
            }
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng(derive_seed(seed, streams::FOLDS)));
            let mut folds = vec![Vec::with_capacity(n / b + 1); b];
            for (pos, &i) in perm.iter().enumerate() {
                folds[pos % b].push(i);
            }
            folds.iter_mut().for_each(|f| f.sort_unstable());
            Ok(folds)
        }
    }
}

fn resolve_mode(cfg: &CsaConfig, n: usize) -> CvMode {
    cfg.mode.unwrap_or_else(|| CvMode::auto(n))
}

fn validate(data: &Dataset, tau: f64, cfg: &CsaConfig) -> Result<Candidates> {
    check_tau(tau)?;
    cfg.solver.validate()?;
    if cfg.cap == 0 {
        return Err(invalid("cap must be at least 1"));
    }
    Candidates::new(data, cfg.force_intercept)
}

/// Full-sample fits of every subset in the size-`k` plan.
pub fn fit_csa_for_k(data: &Dataset, tau: f64, k: usize, cfg: &CsaConfig) -> Result<CsaFitForK> {
    let cands = validate(data, tau, cfg)?;
    check_k(k, cands.pool.len())?;
    let plan = plan_for_k(cands.pool.len(), k, cfg.cap, cfg.seed)?;
    let fits = plan
        .selected
        .par_iter()
        .map(|s| {
            let cols = cands.columns(&s.members);
            let prob = Problem::from_dataset(data, &cols, tau);
            solve(&prob, &cfg.solver).into_fit(&prob, cols)
        })
        .collect();
    Ok(assemble(data, tau, k, plan, cands, fits))
}

fn assemble(
    data: &Dataset,
    tau: f64,
    k: usize,
    plan: SubsetPlan,
    cands: Candidates,
    fits: Vec<QuantileFit>,
) -> CsaFitForK {
    CsaFitForK {
        k,
        tau,
        plan,
        pool: cands.pool,
        forced: cands.forced,
        n_columns: data.p(),
        fits,
    }
}

fn check_k(k: usize, pool: usize) -> Result<()> {
    if k == 0 || k > pool {
        return Err(invalid(format!("subset size {k} outside 1..={pool}")));
    }
    Ok(())
}

/// Cross-validated mean check loss of the size-`k` CSA predictor.
pub fn cv_value(data: &Dataset, tau: f64, k: usize, cfg: &CsaConfig) -> Result<f64> {
    let cands = validate(data, tau, cfg)?;
    check_k(k, cands.pool.len())?;
    let folds = make_folds(data.n(), resolve_mode(cfg, data.n()), cfg.seed)?;
    evaluate_k(data, tau, k, cfg, cands, &folds).map(|(cv, _)| cv)
}

/// CV value together with the full-sample fits, which the holdout refits
/// restart from anyway.
fn evaluate_k(
    data: &Dataset,
    tau: f64,
    k: usize,
    cfg: &CsaConfig,
    cands: Candidates,
    folds: &[Vec<usize>],
) -> Result<(f64, CsaFitForK)> {
    let n = data.n();
    let width = k + cands.forced.map_or(0, |_| 1);
    let largest = folds.iter().map(Vec::len).max().unwrap_or(0);
    if n - largest < width + 1 {
        return Err(CsaError::InsufficientObservations(format!(
            "{} training rows left after holdout, need {} for subsets of {width} columns",
            n - largest,
            width + 1
        )));
    }
    let plan = plan_for_k(cands.pool.len(), k, cfg.cap, cfg.seed)?;
    let per_subset: Vec<(QuantileFit, Vec<f64>)> = plan
        .selected
        .par_iter()
        .map(|s| {
            let cols = cands.columns(&s.members);
            let prob = Problem::from_dataset(data, &cols, tau);
            let solved = solve(&prob, &cfg.solver);
            let mut preds = vec![0.0; n];
            for fold in folds {
                let theta = solve_holdout(&prob, solved.vertex.as_ref(), fold, &cfg.solver);
                for &i in fold {
                    preds[i] = dot(prob.row(i), &theta);
                }
            }
            if let Some(i) = preds.iter().position(|v| !v.is_finite()) {
                return Err(CsaError::Subset {
                    members: cols.clone(),
                    source: Box::new(CsaError::Numerical(format!(
                        "non-finite holdout prediction for row {i}"
                    ))),
                });
            }
            Ok((solved.into_fit(&prob, cols), preds))
        })
        .collect::<Result<_>>()?;

    let m = per_subset.len() as f64;
    let mut loss = 0.0;
    for i in 0..n {
        let mut s = 0.0;
        for (_, preds) in &per_subset {
            s += preds[i];
        }
        loss += rho(data.y()[i] - s / m, tau);
    }
    let fits = per_subset.into_iter().map(|(f, _)| f).collect();
    Ok((loss / n as f64, assemble(data, tau, k, plan, cands, fits)))
}

fn curve_and_fits(data: &Dataset, tau: f64, cfg: &CsaConfig) -> Result<(CvCurve, Vec<CsaFitForK>)> {
    let cands = validate(data, tau, cfg)?;
    let pool = cands.pool.len();
    let k_max = cfg.k_max.unwrap_or(pool);
    check_k(k_max, pool).map_err(|_| invalid(format!("k_max {k_max} outside 1..={pool}")))?;
    let mode = resolve_mode(cfg, data.n());
    let folds = make_folds(data.n(), mode, cfg.seed)?;
    let evals: Vec<(f64, CsaFitForK)> = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let cands = Candidates {
                pool: cands.pool.clone(),
                forced: cands.forced,
            };
            evaluate_k(data, tau, k, cfg, cands, &folds)
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = evals.iter().map(|e| e.0).collect();
    let k_hat = argmin_first(&values) + 1;
    let fits = evals.into_iter().map(|e| e.1).collect();
    Ok((
        CvCurve {
            values,
            k_hat,
            mode,
        },
        fits,
    ))
}

/// Index of the first minimum.
pub(crate) fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// CV criterion for every size up to `cfg.k_max` and the minimizing size.
pub fn select_k(data: &Dataset, tau: f64, cfg: &CsaConfig) -> Result<CvCurve> {
    curve_and_fits(data, tau, cfg).map(|(c, _)| c)
}

/// Selects `k` by cross-validation and keeps the full-sample fits at `k_hat`.
pub fn fit_csa(data: &Dataset, tau: f64, cfg: &CsaConfig) -> Result<CsaPredictor> {
    let (curve, mut fits) = curve_and_fits(data, tau, cfg)?;
    let final_fit = fits.swap_remove(curve.k_hat - 1);
    Ok(CsaPredictor {
        curve,
        final_fit,
        seed: cfg.seed,
        cap: cfg.cap,
        force_intercept: cfg.force_intercept,
    })
}
