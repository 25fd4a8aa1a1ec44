use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::unconditional_quantile;
use crate::data::Dataset;
use crate::error::{invalid, CsaError, Result};
use crate::predictor::{MethodSpec, SCHEMA_VERSION};
use crate::qr::{check_tau, rho, SolverOptions};
use crate::seed::{derive_seed, rng, streams};

/// Label of the unconditional-quantile benchmark in outputs.
pub const BENCHMARK: &str = "benchmark";

/// Rolling-window one-step-ahead forecasting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingSpec {
    /// Estimation window length.
    pub t1: usize,
    pub tau: f64,
    pub methods: Vec<MethodSpec>,
    pub seed: u64,
}

/// Repeated random estimation/evaluation splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Estimation sample size.
    pub n1: usize,
    pub reps: usize,
    pub tau: f64,
    pub methods: Vec<MethodSpec>,
    pub seed: u64,
}

/// One forecast of one target row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    /// Row index of the forecast target.
    pub t: usize,
    pub method: String,
    pub forecast: f64,
    pub realized: f64,
    pub loss: f64,
    pub k_hat: Option<usize>,
}

/// Per-method out-of-sample summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    /// Out-of-sample R^2; missing when the benchmark loss is zero.
    pub r2: Option<f64>,
    /// Spread of per-split R^2 (split protocol only).
    pub r2_sd: Option<f64>,
    pub mean_k_hat: Option<f64>,
    pub median_k_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingResult {
    pub schema_version: u32,
    pub spec: RollingSpec,
    pub n_forecasts: usize,
    pub summary: Vec<MethodSummary>,
    /// Forecasts in target order, benchmark first within each target.
    pub forecasts: Vec<ForecastRecord>,
}

/// R^2 of one split for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub split: usize,
    pub method: String,
    pub r2: Option<f64>,
    pub k_hat: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub schema_version: u32,
    pub spec: SplitSpec,
    pub summary: Vec<MethodSummary>,
    pub splits: Vec<SplitRecord>,
}

/// `1 - loss / benchmark`, missing when the benchmark loss is zero.
pub fn oos_r2(loss: f64, benchmark: f64) -> Option<f64> {
    (benchmark > 0.0).then(|| 1.0 - loss / benchmark)
}

fn validate_methods(methods: &[MethodSpec]) -> Result<()> {
    if methods.is_empty() {
        return Err(invalid("at least one method is required"));
    }
    Ok(())
}

fn method_seed(base: u64, pos: usize) -> u64 {
    derive_seed(base, streams::METHOD + pos as u64)
}

fn with_context(err: CsaError, what: &str) -> CsaError {
    match err {
        CsaError::InvalidParameter(m) => CsaError::InvalidParameter(format!("{what}: {m}")),
        CsaError::InsufficientObservations(m) => {
            CsaError::InsufficientObservations(format!("{what}: {m}"))
        }
        CsaError::Numerical(m) => CsaError::Numerical(format!("{what}: {m}")),
        other => other,
    }
}

fn mean_median(ks: &[usize]) -> (Option<f64>, Option<f64>) {
    if ks.is_empty() {
        return (None, None);
    }
    let mut v = ks.to_vec();
    v.sort_unstable();
    let mean = v.iter().sum::<usize>() as f64 / v.len() as f64;
    let mid = v.len() / 2;
    let median = if v.len() % 2 == 1 {
        v[mid] as f64
    } else {
        (v[mid - 1] + v[mid]) as f64 / 2.0
    };
    (Some(mean), Some(median))
}

/// Forecasts row `t` from rows `t - t1 .. t` for every `t` in `t1 .. T`.
///
/// Rows must already be aligned so that each row's regressors are known when
/// its outcome is forecast.
pub fn rolling_forecast(
    data: &Dataset,
    spec: &RollingSpec,
    opts: &SolverOptions,
) -> Result<RollingResult> {
    check_tau(spec.tau)?;
    validate_methods(&spec.methods)?;
    let big_t = data.n();
    if spec.t1 < 10 {
        return Err(invalid(format!("window length {} below 10", spec.t1)));
    }
    if spec.t1 >= big_t {
        return Err(CsaError::InsufficientObservations(format!(
            "{big_t} rows leave no forecast target for a window of {}",
            spec.t1
        )));
    }
    let per_origin: Vec<Vec<ForecastRecord>> = (spec.t1..big_t)
        .into_par_iter()
        .map(|t| forecast_origin(data, spec, t, opts))
        .collect::<Result<_>>()?;
    let forecasts: Vec<ForecastRecord> = per_origin.into_iter().flatten().collect();

    let bench: f64 = forecasts
        .iter()
        .filter(|r| r.method == BENCHMARK)
        .map(|r| r.loss)
        .sum();
    let summary = spec
        .methods
        .iter()
        .map(|m| {
            let rows: Vec<&ForecastRecord> =
                forecasts.iter().filter(|r| r.method == m.label()).collect();
            let loss: f64 = rows.iter().map(|r| r.loss).sum();
            let ks: Vec<usize> = rows.iter().filter_map(|r| r.k_hat).collect();
            let (mean_k_hat, median_k_hat) = mean_median(&ks);
            MethodSummary {
                method: m.label().to_string(),
                r2: oos_r2(loss, bench),
                r2_sd: None,
                mean_k_hat,
                median_k_hat,
            }
        })
        .collect();
    Ok(RollingResult {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        n_forecasts: big_t - spec.t1,
        summary,
        forecasts,
    })
}

fn forecast_origin(
    data: &Dataset,
    spec: &RollingSpec,
    t: usize,
    opts: &SolverOptions,
) -> Result<Vec<ForecastRecord>> {
    let window: Vec<usize> = (t - spec.t1..t).collect();
    let train = data.select_rows(&window);
    let realized = data.y()[t];
    let bench = unconditional_quantile(train.y(), spec.tau)?;
    let mut out = vec![ForecastRecord {
        t,
        method: BENCHMARK.to_string(),
        forecast: bench,
        realized,
        loss: rho(realized - bench, spec.tau),
        k_hat: None,
    }];
    let base = derive_seed(spec.seed, t as u64);
    for (pos, m) in spec.methods.iter().enumerate() {
        let fitted = m
            .fit(&train, spec.tau, method_seed(base, pos), opts)
            .map_err(|e| with_context(e, &format!("{} at target row {t}", m.label())))?;
        let forecast = fitted.predict(data.row(t))?;
        out.push(ForecastRecord {
            t,
            method: m.label().to_string(),
            forecast,
            realized,
            loss: rho(realized - forecast, spec.tau),
            k_hat: fitted.k_hat(),
        });
    }
    Ok(out)
}

/// Estimation and evaluation rows of split `r` (both sorted).
pub fn split_indices(n: usize, n1: usize, seed: u64, r: usize) -> (Vec<usize>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng(derive_seed(seed, r as u64)));
    let mut est = perm[..n1].to_vec();
    let mut eval = perm[n1..].to_vec();
    est.sort_unstable();
    eval.sort_unstable();
    (est, eval)
}

/// Fits on `n1` random rows, scores R^2 on the rest, `reps` times.
pub fn random_split_eval(
    data: &Dataset,
    spec: &SplitSpec,
    opts: &SolverOptions,
) -> Result<SplitResult> {
    check_tau(spec.tau)?;
    validate_methods(&spec.methods)?;
    let n = data.n();
    if spec.n1 == 0 || spec.n1 >= n {
        return Err(invalid(format!(
            "estimation size {} outside 1..{n}",
            spec.n1
        )));
    }
    if spec.reps == 0 {
        return Err(invalid("reps must be at least 1"));
    }
    let per_split: Vec<Vec<SplitRecord>> = (0..spec.reps)
        .into_par_iter()
        .map(|r| evaluate_split(data, spec, r, opts))
        .collect::<Result<_>>()?;
    let splits: Vec<SplitRecord> = per_split.into_iter().flatten().collect();
    let summary = spec
        .methods
        .iter()
        .map(|m| {
            let rows: Vec<&SplitRecord> = splits.iter().filter(|s| s.method == m.label()).collect();
            let r2s: Vec<f64> = rows.iter().filter_map(|s| s.r2).collect();
            let ks: Vec<usize> = rows.iter().filter_map(|s| s.k_hat).collect();
            let (mean_k_hat, median_k_hat) = mean_median(&ks);
            let (r2, r2_sd) = mean_sd(&r2s);
            MethodSummary {
                method: m.label().to_string(),
                r2,
                r2_sd,
                mean_k_hat,
                median_k_hat,
            }
        })
        .collect();
    Ok(SplitResult {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        summary,
        splits,
    })
}

/// Mean and sample standard deviation; the SD needs two values.
pub(crate) fn mean_sd(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let sd = (v.len() > 1)
        .then(|| (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt());
    (Some(m), sd)
}

fn evaluate_split(
    data: &Dataset,
    spec: &SplitSpec,
    r: usize,
    opts: &SolverOptions,
) -> Result<Vec<SplitRecord>> {
    let (est, eval) = split_indices(data.n(), spec.n1, spec.seed, r);
    let train = data.select_rows(&est);
    let bench_q = unconditional_quantile(train.y(), spec.tau)?;
    let bench: f64 = eval
        .iter()
        .map(|&i| rho(data.y()[i] - bench_q, spec.tau))
        .sum();
    let base = derive_seed(derive_seed(spec.seed, streams::DATA), r as u64);
    spec.methods
        .iter()
        .enumerate()
        .map(|(pos, m)| {
            let fitted = m
                .fit(&train, spec.tau, method_seed(base, pos), opts)
                .map_err(|e| with_context(e, &format!("{} in split {r}", m.label())))?;
            let mut loss = 0.0;
            for &i in &eval {
                loss += rho(data.y()[i] - fitted.predict(data.row(i))?, spec.tau);
            }
            Ok(SplitRecord {
                split: r,
                method: m.label().to_string(),
                r2: oos_r2(loss, bench),
                k_hat: fitted.k_hat(),
            })
        })
        .collect()
}
