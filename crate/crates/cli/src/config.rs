//! Run configurations read from TOML files, plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use csaqr::empirical::{load_csv, read_header, RollingSpec, SplitSpec};
use csaqr::predictor::CsaSettings;
use csaqr::simulate::SimDesign;
use csaqr::{CsaError, CvMode, Dataset, MethodSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// A problem with the configuration or the inputs, detected before any
/// computation starts. Exits with status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn from_core(e: CsaError) -> anyhow::Error {
    config_error(e.to_string())
}

/// Parses a TOML file; unknown keys are errors that name the key.
pub fn read_toml<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

/// Flags shared by all subcommands. Set flags replace the file values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub tau: Option<f64>,
    /// Subset cap of every CSA method.
    pub mmax: Option<usize>,
    pub force_intercept: bool,
    pub data: Option<PathBuf>,
}

impl Overrides {
    fn apply_methods(&self, methods: &mut [MethodSpec]) {
        for m in methods {
            if let MethodSpec::Csa(s) = m {
                if let Some(cap) = self.mmax {
                    s.cap = cap;
                }
                if self.force_intercept {
                    s.force_intercept = true;
                }
            }
        }
    }
}

fn require_seed(seed: Option<u64>) -> anyhow::Result<u64> {
    seed.ok_or_else(|| config_error("missing key `seed` (set it in the file or pass --seed)"))
}

fn check_methods(methods: &[MethodSpec]) -> anyhow::Result<()> {
    if methods.is_empty() {
        return Err(config_error("`methods` must list at least one method"));
    }
    for m in methods {
        match m {
            MethodSpec::Csa(s) if s.cap == 0 => {
                return Err(config_error("csa `cap` must be at least 1"))
            }
            MethodSpec::Bag { b: 0 } => return Err(config_error("bag `b` must be at least 1")),
            _ => {}
        }
    }
    Ok(())
}

fn check_tau(tau: f64) -> anyhow::Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(config_error(format!("`tau` = {tau} is outside (0, 1)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub design: SimDesign,
    pub methods: Vec<MethodSpec>,
}

impl SimulateConfig {
    pub fn load(path: &Path, o: &Overrides) -> anyhow::Result<Self> {
        let mut c: Self = read_toml(path)?;
        c.seed = o.seed.or(c.seed);
        c.threads = o.threads.or(c.threads);
        c.out_dir = o.out_dir.clone().or(c.out_dir);
        if let Some(tau) = o.tau {
            c.design.tau = tau;
        }
        o.apply_methods(&mut c.methods);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        require_seed(self.seed)?;
        check_tau(self.design.tau)?;
        self.design.validate().map_err(from_core)?;
        check_methods(&self.methods)
    }
}

/// Where the data comes from and which columns to use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Relative paths are taken from the config file's directory.
    #[serde(default)]
    pub path: Option<PathBuf>,
    pub outcome: String,
    /// All columns other than the outcome when omitted.
    #[serde(default)]
    pub regressors: Option<Vec<String>>,
    #[serde(default)]
    pub add_intercept: bool,
}

impl DataSection {
    fn resolve(&mut self, config_path: Option<&Path>, o: &Overrides) -> anyhow::Result<()> {
        if let Some(p) = &o.data {
            self.path = Some(p.clone());
        } else if let (Some(p), Some(cfg)) = (&self.path, config_path) {
            if p.is_relative() {
                if let Some(dir) = cfg.parent() {
                    self.path = Some(dir.join(p));
                }
            }
        }
        let path = self
            .path
            .as_ref()
            .ok_or_else(|| config_error("missing data path (set `data.path` or pass --data)"))?;
        if self.regressors.is_none() {
            let header =
                read_header(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            self.regressors = Some(header.into_iter().filter(|h| *h != self.outcome).collect());
        }
        Ok(())
    }

    /// Loads the dataset; warnings about dropped rows go to standard error.
    pub fn load(&self) -> anyhow::Result<Dataset> {
        let path = self
            .path
            .as_ref()
            .ok_or_else(|| config_error("missing data path"))?;
        let regressors = self.regressors.clone().unwrap_or_default();
        let loaded = load_csv(path, &self.outcome, &regressors, self.add_intercept)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        if !loaded.dropped_lines.is_empty() {
            eprintln!(
                "note: skipped {} blank row(s) in {} (lines {:?})",
                loaded.dropped_lines.len(),
                path.display(),
                loaded.dropped_lines
            );
        }
        Ok(loaded.data)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RollingConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub data: DataSection,
    pub t1: usize,
    pub tau: f64,
    pub methods: Vec<MethodSpec>,
}

impl RollingConfig {
    pub fn load(path: &Path, o: &Overrides) -> anyhow::Result<Self> {
        let mut c: Self = read_toml(path)?;
        c.seed = o.seed.or(c.seed);
        c.threads = o.threads.or(c.threads);
        c.out_dir = o.out_dir.clone().or(c.out_dir);
        c.tau = o.tau.unwrap_or(c.tau);
        o.apply_methods(&mut c.methods);
        c.data.resolve(Some(path), o)?;
        require_seed(c.seed)?;
        check_tau(c.tau)?;
        check_methods(&c.methods)?;
        if c.t1 < 10 {
            return Err(config_error(format!("`t1` = {} must be at least 10", c.t1)));
        }
        Ok(c)
    }

    pub fn spec(&self) -> RollingSpec {
        RollingSpec {
            t1: self.t1,
            tau: self.tau,
            methods: self.methods.clone(),
            seed: self.seed.unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub data: DataSection,
    pub n1: usize,
    pub reps: usize,
    pub tau: f64,
    pub methods: Vec<MethodSpec>,
}

impl SplitConfig {
    pub fn load(path: &Path, o: &Overrides) -> anyhow::Result<Self> {
        let mut c: Self = read_toml(path)?;
        c.seed = o.seed.or(c.seed);
        c.threads = o.threads.or(c.threads);
        c.out_dir = o.out_dir.clone().or(c.out_dir);
        c.tau = o.tau.unwrap_or(c.tau);
        o.apply_methods(&mut c.methods);
        c.data.resolve(Some(path), o)?;
        require_seed(c.seed)?;
        check_tau(c.tau)?;
        check_methods(&c.methods)?;
        if c.n1 == 0 || c.reps == 0 {
            return Err(config_error("`n1` and `reps` must be at least 1"));
        }
        Ok(c)
    }

    pub fn spec(&self) -> SplitSpec {
        SplitSpec {
            n1: self.n1,
            reps: self.reps,
            tau: self.tau,
            methods: self.methods.clone(),
            seed: self.seed.unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectKConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub data: DataSection,
    #[serde(default = "half")]
    pub tau: f64,
    #[serde(default)]
    pub csa: CsaSettings,
}

fn half() -> f64 {
    0.5
}

/// Command-line settings of `select-k` that have no file equivalent in
/// [`Overrides`].
#[derive(Debug, Clone, Default)]
pub struct SelectKFlags {
    pub outcome: Option<String>,
    pub regressors: Option<Vec<String>>,
    pub add_intercept: bool,
    pub k_max: Option<usize>,
    pub cv: Option<CvMode>,
}

impl SelectKConfig {
    pub fn load(path: Option<&Path>, o: &Overrides, f: &SelectKFlags) -> anyhow::Result<Self> {
        let mut c: Self = match path {
            Some(p) => read_toml(p)?,
            None => Self {
                seed: None,
                threads: None,
                out_dir: None,
                data: DataSection {
                    path: None,
                    outcome: f.outcome.clone().ok_or_else(|| {
                        config_error("missing outcome column (pass --outcome or use --config)")
                    })?,
                    regressors: None,
                    add_intercept: false,
                },
                tau: 0.5,
                csa: CsaSettings::default(),
            },
        };
        if let Some(y) = &f.outcome {
            c.data.outcome = y.clone();
        }
        if f.regressors.is_some() {
            c.data.regressors = f.regressors.clone();
        }
        c.data.add_intercept |= f.add_intercept;
        c.seed = o.seed.or(c.seed).or(Some(0));
        c.threads = o.threads.or(c.threads);
        c.out_dir = o.out_dir.clone().or(c.out_dir);
        c.tau = o.tau.unwrap_or(c.tau);
        if let Some(cap) = o.mmax {
            c.csa.cap = cap;
        }
        c.csa.force_intercept |= o.force_intercept;
        if f.k_max.is_some() {
            c.csa.k_max = f.k_max;
        }
        if f.cv.is_some() {
            c.csa.mode = f.cv;
        }
        c.data.resolve(path, o)?;
        check_tau(c.tau)?;
        check_methods(&[MethodSpec::Csa(c.csa.clone())])?;
        Ok(c)
    }
}

/// Parses `loo`, `auto` or a fold count.
pub fn parse_cv(s: &str) -> Result<Option<CvMode>, String> {
    match s {
        "auto" => Ok(None),
        "loo" => Ok(Some(CvMode::Loo)),
        n => n
            .parse::<usize>()
            .map(|b| Some(CvMode::BFold(b)))
            .map_err(|_| format!("expected `loo`, `auto` or a fold count, got `{n}`")),
    }
}
