use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use csaqr_cli::commands;
use csaqr_cli::config::{
    config_error, parse_cv, ConfigError, Overrides, RollingConfig, SelectKConfig, SelectKFlags,
    SimulateConfig, SplitConfig,
};

/// Complete subset averaging for quantile prediction.
#[derive(Parser)]
#[command(name = "csaqr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo study described by a TOML config.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Suppress progress messages.
        #[arg(long)]
        quiet: bool,
    },
    /// Choose the subset size by cross-validation and save the fitted predictor.
    SelectK {
        #[command(flatten)]
        common: Common,
        /// Outcome column name.
        #[arg(long)]
        outcome: Option<String>,
        /// Comma-separated regressor columns (default: every other column).
        #[arg(long, value_delimiter = ',')]
        regressors: Option<Vec<String>>,
        /// Prepend a constant column.
        #[arg(long)]
        add_intercept: bool,
        /// Largest subset size to consider.
        #[arg(long)]
        k_max: Option<usize>,
        /// `loo`, `auto`, or a fold count.
        #[arg(long)]
        cv: Option<String>,
    },
    /// Rolling-window one-step-ahead forecasts.
    ForecastRolling {
        #[command(flatten)]
        common: Common,
    },
    /// Repeated random estimation/evaluation splits.
    EvalSplit {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Data CSV (overrides `data.path`).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Quantile level.
    #[arg(long)]
    tau: Option<f64>,
    /// Subset cap of CSA.
    #[arg(long)]
    mmax: Option<usize>,
    /// Keep the intercept in every CSA subset.
    #[arg(long)]
    force_intercept: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            threads: self.threads,
            out_dir: self.out_dir.clone(),
            tau: self.tau,
            mmax: self.mmax,
            force_intercept: self.force_intercept,
            data: self.data.clone(),
        }
    }

    fn require_config(&self) -> anyhow::Result<&PathBuf> {
        self.config
            .as_ref()
            .ok_or_else(|| config_error("--config is required for this command"))
    }
}

fn run(cli: Cli) -> anyhow::Result<PathBuf> {
    match cli.command {
        Command::Simulate { common, quiet } => {
            let cfg = SimulateConfig::load(common.require_config()?, &common.overrides())?;
            commands::simulate(&cfg, quiet)
        }
        Command::SelectK {
            common,
            outcome,
            regressors,
            add_intercept,
            k_max,
            cv,
        } => {
            let flags = SelectKFlags {
                outcome,
                regressors,
                add_intercept,
                k_max,
                cv: cv
                    .as_deref()
                    .map(parse_cv)
                    .transpose()
                    .map_err(config_error)?
                    .flatten(),
            };
            let cfg = SelectKConfig::load(common.config.as_deref(), &common.overrides(), &flags)?;
            commands::select_k(&cfg)
        }
        Command::ForecastRolling { common } => {
            let cfg = RollingConfig::load(common.require_config()?, &common.overrides())?;
            commands::forecast_rolling(&cfg)
        }
        Command::EvalSplit { common } => {
            let cfg = SplitConfig::load(common.require_config()?, &common.overrides())?;
            commands::eval_split(&cfg)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(dir) => {
            eprintln!("results written to {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
