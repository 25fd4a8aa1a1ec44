use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use csaqr::csa::fit_csa;
use csaqr::empirical::{
    random_split_eval, rolling_forecast, write_csv, MethodSummary, RollingSpec, SplitSpec,
};
use csaqr::predictor::{FittedPredictor, SCHEMA_VERSION};
use csaqr::simulate::run_study_with_progress;
use csaqr::{CsaConfig, CvCurve, PredictorDocument, SolverOptions};
use serde::Serialize;

use crate::config::{RollingConfig, SelectKConfig, SimulateConfig, SplitConfig};

const DEFAULT_OUT_DIR: &str = "csaqr-out";

/// Provenance written next to every result set.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub threads: usize,
    pub config: &'a C,
    pub started_unix_seconds: u64,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
}

struct Run<'a> {
    command: &'a str,
    out_dir: PathBuf,
    started: Instant,
    started_unix: u64,
    outputs: Vec<String>,
}

impl<'a> Run<'a> {
    fn start(command: &'a str, out_dir: Option<&Path>) -> anyhow::Result<Self> {
        let out_dir = out_dir.map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), Path::to_path_buf);
        std::fs::create_dir_all(&out_dir)
            .with_context(|| format!("creating {}", out_dir.display()))?;
        Ok(Self {
            command,
            out_dir,
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            outputs: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let path = self.out_dir.join(name);
        self.outputs.push(name.to_string());
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> anyhow::Result<()> {
        let w = self.create(name)?;
        write_csv(rows, w)?;
        Ok(())
    }

    fn finish<C: Serialize>(
        mut self,
        seed: u64,
        threads: Option<usize>,
        config: &C,
    ) -> anyhow::Result<PathBuf> {
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            threads: in_pool(threads, rayon::current_num_threads)?,
            config,
            started_unix_seconds: self.started_unix,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs.clone(),
        };
        self.json("manifest.json", &manifest)?;
        Ok(self.out_dir)
    }
}

/// Runs `f` on a pool of `threads` workers; `0` or `None` lets rayon choose.
pub fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .context("building the thread pool")?;
    Ok(pool.install(f))
}

pub fn simulate(cfg: &SimulateConfig, quiet: bool) -> anyhow::Result<PathBuf> {
    let seed = cfg.seed.unwrap_or_default();
    let mut run = Run::start("simulate", cfg.out_dir.as_deref())?;
    let reps = cfg.design.reps;
    let step = (reps / 20).max(1);
    let done = AtomicUsize::new(0);
    let progress = |_r: usize| {
        let d = done.fetch_add(1, Ordering::Relaxed) + 1;
        if !quiet && (d.is_multiple_of(step) || d == reps) {
            eprintln!("simulate: {d}/{reps} replications");
        }
    };
    let result = in_pool(cfg.threads, || {
        run_study_with_progress(
            &cfg.design,
            &cfg.methods,
            seed,
            0,
            &SolverOptions::default(),
            &progress,
        )
    })??;
    {
        let w = run.create("fpe.csv")?;
        result.write_long_csv(w)?;
    }
    run.csv("stats.csv", &result.stats)?;
    run.json("summary.json", &result.summary())?;
    if !quiet && !result.failures.is_empty() {
        eprintln!(
            "simulate: {} method failure(s), see summary.json",
            result.failures.len()
        );
    }
    run.finish(seed, cfg.threads, cfg)
}

#[derive(Debug, Serialize)]
struct CurveRow {
    k: usize,
    cv: f64,
}

#[derive(Debug, Serialize)]
struct SelectKSummary<'a> {
    schema_version: u32,
    tau: f64,
    n: usize,
    regressors: &'a [String],
    curve: &'a CvCurve,
}

/// Prints the CV curve to standard output and writes it with the fitted predictor.
pub fn select_k(cfg: &SelectKConfig) -> anyhow::Result<PathBuf> {
    let data = cfg.data.load()?;
    let seed = cfg.seed.unwrap_or_default();
    let csa_cfg = CsaConfig {
        k_max: cfg.csa.k_max,
        cap: cfg.csa.cap,
        seed,
        mode: cfg.csa.mode,
        force_intercept: cfg.csa.force_intercept,
        solver: SolverOptions::default(),
    };
    let predictor = in_pool(cfg.threads, || fit_csa(&data, cfg.tau, &csa_cfg))??;
    let mut run = Run::start("select-k", cfg.out_dir.as_deref())?;
    let rows: Vec<CurveRow> = predictor
        .curve
        .values
        .iter()
        .enumerate()
        .map(|(i, &cv)| CurveRow { k: i + 1, cv })
        .collect();
    let mut out = std::io::stdout().lock();
    writeln!(out, "k,cv")?;
    for r in &rows {
        writeln!(out, "{},{}", r.k, r.cv)?;
    }
    writeln!(out, "k_hat,{}", predictor.k_hat())?;
    run.csv("cv_curve.csv", &rows)?;
    run.json(
        "summary.json",
        &SelectKSummary {
            schema_version: SCHEMA_VERSION,
            tau: cfg.tau,
            n: data.n(),
            regressors: data.names(),
            curve: &predictor.curve,
        },
    )?;
    let doc = PredictorDocument::new(FittedPredictor::Csa(predictor), cfg.tau);
    let mut w = run.create("predictor.json")?;
    w.write_all(doc.to_json()?.as_bytes())?;
    writeln!(w)?;
    w.flush()?;
    drop(w);
    run.finish(seed, cfg.threads, cfg)
}

#[derive(Debug, Serialize)]
struct RollingSummary<'a> {
    schema_version: u32,
    spec: &'a RollingSpec,
    n_forecasts: usize,
    summary: &'a [MethodSummary],
}

pub fn forecast_rolling(cfg: &RollingConfig) -> anyhow::Result<PathBuf> {
    let data = cfg.data.load()?;
    let spec = cfg.spec();
    let result = in_pool(cfg.threads, || {
        rolling_forecast(&data, &spec, &SolverOptions::default())
    })??;
    let mut run = Run::start("forecast-rolling", cfg.out_dir.as_deref())?;
    run.csv("forecasts.csv", &result.forecasts)?;
    run.csv("summary.csv", &result.summary)?;
    run.json(
        "summary.json",
        &RollingSummary {
            schema_version: result.schema_version,
            spec: &result.spec,
            n_forecasts: result.n_forecasts,
            summary: &result.summary,
        },
    )?;
    run.finish(spec.seed, cfg.threads, cfg)
}

#[derive(Debug, Serialize)]
struct SplitSummary<'a> {
    schema_version: u32,
    spec: &'a SplitSpec,
    summary: &'a [MethodSummary],
}

pub fn eval_split(cfg: &SplitConfig) -> anyhow::Result<PathBuf> {
    let data = cfg.data.load()?;
    let spec = cfg.spec();
    let result = in_pool(cfg.threads, || {
        random_split_eval(&data, &spec, &SolverOptions::default())
    })??;
    let mut run = Run::start("eval-split", cfg.out_dir.as_deref())?;
    run.csv("splits.csv", &result.splits)?;
    run.csv("summary.csv", &result.summary)?;
    run.json(
        "summary.json",
        &SplitSummary {
            schema_version: result.schema_version,
            spec: &result.spec,
            summary: &result.summary,
        },
    )?;
    run.finish(spec.seed, cfg.threads, cfg)
}
