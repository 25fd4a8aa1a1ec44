use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::{gen_replication, SimDesign};
use crate::data::Dataset;
use crate::empirical::mean_sd;
use crate::error::{invalid, CsaError, Result};
use crate::predictor::{FittedPredictor, MethodSpec, SCHEMA_VERSION};
use crate::qr::{rho, SolverOptions};
use crate::seed::{derive_seed, streams};

/// Mean check loss of `predictor` on `test`.
pub fn fpe_of(predictor: &FittedPredictor, test: &Dataset, tau: f64) -> Result<f64> {
    let mut s = 0.0;
    for i in 0..test.n() {
        s += rho(test.y()[i] - predictor.predict(test.row(i))?, tau);
    }
    Ok(s / test.n() as f64)
}

/// A method that failed in one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub replication: usize,
    pub method: String,
    pub message: String,
}

/// Summary metrics of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: String,
    /// Replications where this method produced an FPE.
    pub n_ok: usize,
    pub avg_fpe: Option<f64>,
    /// Sample standard deviation of the per-replication FPE.
    pub sd: Option<f64>,
    /// Share of complete replications where this method has the strictly smallest FPE.
    pub winning_ratio: Option<f64>,
    /// Share of replications (both succeeded) where CSA has a strictly smaller FPE.
    pub loss_to_csa: Option<f64>,
    pub mean_k_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub schema_version: u32,
    pub design: SimDesign,
    pub master_seed: u64,
    pub methods: Vec<String>,
    /// `fpe[r][m]`, missing where the method failed.
    pub fpe: Vec<Vec<Option<f64>>>,
    /// Selected subset size per replication and method (CSA only).
    pub k_hat: Vec<Vec<Option<usize>>>,
    /// Replications in which every method succeeded.
    pub complete_reps: usize,
    pub failures: Vec<Failure>,
    pub stats: Vec<MethodStats>,
}

/// Summary part of a study, for the JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub schema_version: u32,
    pub design: SimDesign,
    pub master_seed: u64,
    pub methods: Vec<String>,
    pub complete_reps: usize,
    pub failures: Vec<Failure>,
    pub stats: Vec<MethodStats>,
}

impl StudyResult {
    pub fn summary(&self) -> StudySummary {
        StudySummary {
            schema_version: self.schema_version,
            design: self.design.clone(),
            master_seed: self.master_seed,
            methods: self.methods.clone(),
            complete_reps: self.complete_reps,
            failures: self.failures.clone(),
            stats: self.stats.clone(),
        }
    }

    pub fn stats_for(&self, method: &str) -> Option<&MethodStats> {
        self.stats.iter().find(|s| s.method == method)
    }

    /// Long-format CSV: design fields, method, replication, fpe (empty when failed).
    pub fn write_long_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "family",
            "signal",
            "n",
            "k_obs",
            "r2",
            "tau",
            "rho_x",
            "method",
            "replication",
            "fpe",
        ])?;
        let d = &self.design;
        let family = serde_json::to_value(d.family)?
            .as_str()
            .unwrap_or_default()
            .to_string();
        let signal = d
            .signal
            .map(|s| serde_json::to_value(s).map(|v| v.as_str().unwrap_or_default().to_string()))
            .transpose()?
            .unwrap_or_default();
        for (r, row) in self.fpe.iter().enumerate() {
            for (m, v) in row.iter().enumerate() {
                w.write_record([
                    family.clone(),
                    signal.clone(),
                    d.n.to_string(),
                    d.observed().to_string(),
                    d.r2.to_string(),
                    d.tau.to_string(),
                    d.rho_x.to_string(),
                    self.methods[m].clone(),
                    r.to_string(),
                    v.map(|x| x.to_string()).unwrap_or_default(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Labels with a `#2`, `#3`, ... suffix on repeats.
fn unique_labels(methods: &[MethodSpec]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(methods.len());
    for m in methods {
        let base = m.label();
        let seen = out
            .iter()
            .filter(|l| l.split('#').next() == Some(base))
            .count();
        out.push(if seen == 0 {
            base.to_string()
        } else {
            format!("{base}#{}", seen + 1)
        });
    }
    out
}

type RepOutcome = (Vec<Option<f64>>, Vec<Option<usize>>, Vec<Failure>);

fn run_replication(
    design: &SimDesign,
    methods: &[MethodSpec],
    labels: &[String],
    master_seed: u64,
    r: usize,
    opts: &SolverOptions,
) -> RepOutcome {
    let rep_seed = derive_seed(master_seed, r as u64);
    let mut fpe = vec![None; methods.len()];
    let mut ks = vec![None; methods.len()];
    let mut failures = Vec::new();
    let (train, test) = match gen_replication(design, rep_seed) {
        Ok(d) => d,
        Err(e) => {
            for l in labels {
                failures.push(Failure {
                    replication: r,
                    method: l.clone(),
                    message: e.to_string(),
                });
            }
            return (fpe, ks, failures);
        }
    };
    for (pos, m) in methods.iter().enumerate() {
        let seed = derive_seed(rep_seed, streams::METHOD + pos as u64);
        let outcome = m
            .fit(&train, design.tau, seed, opts)
            .and_then(|p| fpe_of(&p, &test, design.tau).map(|f| (f, p.k_hat())));
        match outcome {
            Ok((f, k)) if f.is_finite() => {
                fpe[pos] = Some(f);
                ks[pos] = k;
            }
            Ok((f, _)) => failures.push(Failure {
                replication: r,
                method: labels[pos].clone(),
                message: format!("non-finite FPE {f}"),
            }),
            Err(e) => failures.push(Failure {
                replication: r,
                method: labels[pos].clone(),
                message: e.to_string(),
            }),
        }
    }
    (fpe, ks, failures)
}

/// Runs `design.reps` replications on a pool of `threads` workers (`0` uses
/// the current pool). Results do not depend on the thread count.
pub fn run_study(
    design: &SimDesign,
    methods: &[MethodSpec],
    master_seed: u64,
    threads: usize,
    opts: &SolverOptions,
) -> Result<StudyResult> {
    run_study_with_progress(design, methods, master_seed, threads, opts, &|_| {})
}

/// As [`run_study`], calling `progress` with each finished replication index.
pub fn run_study_with_progress(
    design: &SimDesign,
    methods: &[MethodSpec],
    master_seed: u64,
    threads: usize,
    opts: &SolverOptions,
    progress: &(dyn Fn(usize) + Sync),
) -> Result<StudyResult> {
    design.validate()?;
    opts.validate()?;
    if methods.is_empty() {
        return Err(invalid("at least one method is required"));
    }
    let labels = unique_labels(methods);
    let work = || -> Vec<RepOutcome> {
        (0..design.reps)
            .into_par_iter()
            .map(|r| {
                let out = run_replication(design, methods, &labels, master_seed, r, opts);
                progress(r);
                out
            })
            .collect()
    };
    let outcomes = if threads == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CsaError::InvalidParameter(format!("thread pool: {e}")))?
            .install(work)
    };
    let mut fpe = Vec::with_capacity(design.reps);
    let mut k_hat = Vec::with_capacity(design.reps);
    let mut failures = Vec::new();
    for (f, k, fail) in outcomes {
        fpe.push(f);
        k_hat.push(k);
        failures.extend(fail);
    }
    let csa_pos = methods.iter().position(|m| matches!(m, MethodSpec::Csa(_)));
    let stats = summarize(&labels, &fpe, &k_hat, csa_pos);
    let complete_reps = fpe
        .iter()
        .filter(|row| row.iter().all(Option::is_some))
        .count();
    Ok(StudyResult {
        schema_version: SCHEMA_VERSION,
        design: design.clone(),
        master_seed,
        methods: labels,
        fpe,
        k_hat,
        complete_reps,
        failures,
        stats,
    })
}

/// Metrics from an FPE matrix. Failed entries are dropped pairwise: averages
/// use each method's own successes, winning ratios use replications where
/// every method succeeded, and loss-to-CSA uses replications where both did.
pub fn summarize(
    labels: &[String],
    fpe: &[Vec<Option<f64>>],
    k_hat: &[Vec<Option<usize>>],
    csa_pos: Option<usize>,
) -> Vec<MethodStats> {
    let complete: Vec<&Vec<Option<f64>>> = fpe
        .iter()
        .filter(|row| row.iter().all(Option::is_some))
        .collect();
    (0..labels.len())
        .map(|m| {
            let own: Vec<f64> = fpe.iter().filter_map(|row| row[m]).collect();
            let (avg_fpe, sd) = mean_sd(&own);
            let winning_ratio = (!complete.is_empty()).then(|| {
                let wins = complete
                    .iter()
                    .filter(|row| {
                        let mine = row[m].unwrap();
                        row.iter()
                            .enumerate()
                            .all(|(j, v)| j == m || mine < v.unwrap())
                    })
                    .count();
                wins as f64 / complete.len() as f64
            });
            let loss_to_csa = csa_pos.filter(|&c| c != m).and_then(|c| {
                let pairs: Vec<(f64, f64)> = fpe
                    .iter()
                    .filter_map(|row| Some((row[c]?, row[m]?)))
                    .collect();
                (!pairs.is_empty()).then(|| {
                    pairs.iter().filter(|(a, b)| a < b).count() as f64 / pairs.len() as f64
                })
            });
            let ks: Vec<f64> = k_hat
                .iter()
                .filter_map(|row| row[m])
                .map(|k| k as f64)
                .collect();
            MethodStats {
                method: labels[m].clone(),
                n_ok: own.len(),
                avg_fpe,
                sd,
                winning_ratio,
                loss_to_csa,
                mean_k_hat: mean_sd(&ks).0,
            }
        })
        .collect()
}
