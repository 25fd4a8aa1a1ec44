//! A uniform front over CSA and the baselines, used by the evaluation
//! harnesses and for JSON persistence.

use serde::{Deserialize, Serialize};

use crate::competitors::{
    fit_bag, fit_jma, fit_l1qr, fit_l2qr_cv, nested_models, BagPredictor, JmaPredictor, L1Settings,
    TunedFit, L2_GRID,
};
use crate::csa::{fit_csa, CsaConfig, CsaPredictor, CvMode};
use crate::data::Dataset;
use crate::empirical::unconditional_quantile;
use crate::error::{CsaError, Result};
use crate::qr::SolverOptions;

/// Version tag written into every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

/// CSA settings other than the seed and solver options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsaSettings {
    pub cap: usize,
    pub k_max: Option<usize>,
    pub mode: Option<CvMode>,
    pub force_intercept: bool,
}

impl Default for CsaSettings {
    fn default() -> Self {
        Self {
            cap: 100,
            k_max: None,
            mode: None,
            force_intercept: false,
        }
    }
}

/// Settings of the cross-validated L2 baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct L2Settings {
    pub grid: Vec<f64>,
    pub folds: usize,
}

impl Default for L2Settings {
    fn default() -> Self {
        Self {
            grid: L2_GRID.to_vec(),
            folds: 10,
        }
    }
}

/// A forecasting method and its tuning settings, tagged by a `method` field
/// (`{"method": "bag", "b": 1000}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodSpec {
    Csa(CsaSettings),
    /// Nested prefixes of the dataset columns in their given order.
    Jma,
    L1qr(L1Settings),
    Bag {
        b: usize,
    },
    L2qr(L2Settings),
    /// The unconditional sample quantile of the outcome.
    Unconditional,
}

impl MethodSpec {
    pub fn label(&self) -> &'static str {
        match self {
            MethodSpec::Csa(_) => "CSA",
            MethodSpec::Jma => "JMA",
            MethodSpec::L1qr(_) => "L1QR",
            MethodSpec::Bag { .. } => "BAG",
            MethodSpec::L2qr(_) => "L2QR",
            MethodSpec::Unconditional => "UQ",
        }
    }

    /// Fits the method; `seed` feeds whatever randomness it uses.
    pub fn fit(
        &self,
        data: &Dataset,
        tau: f64,
        seed: u64,
        opts: &SolverOptions,
    ) -> Result<FittedPredictor> {
        Ok(match self {
            MethodSpec::Csa(s) => {
                let cfg = CsaConfig {
                    k_max: s.k_max,
                    cap: s.cap,
                    seed,
                    mode: s.mode,
                    force_intercept: s.force_intercept,
                    solver: *opts,
                };
                FittedPredictor::Csa(fit_csa(data, tau, &cfg)?)
            }
            MethodSpec::Jma => {
                FittedPredictor::Jma(fit_jma(data, tau, &nested_models(data.p()), opts)?)
            }
            MethodSpec::L1qr(s) => FittedPredictor::L1qr(fit_l1qr(data, tau, s, seed, opts)?),
            MethodSpec::Bag { b } => FittedPredictor::Bag(fit_bag(data, tau, *b, seed, opts)?),
            MethodSpec::L2qr(s) => {
                FittedPredictor::L2qr(fit_l2qr_cv(data, tau, &s.grid, s.folds, seed, opts)?)
            }
            MethodSpec::Unconditional => FittedPredictor::Unconditional {
                value: unconditional_quantile(data.y(), tau)?,
            },
        })
    }
}

/// A fitted method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FittedPredictor {
    Csa(CsaPredictor),
    Jma(JmaPredictor),
    L1qr(TunedFit),
    Bag(BagPredictor),
    L2qr(TunedFit),
    Unconditional { value: f64 },
}

impl FittedPredictor {
    pub fn label(&self) -> &'static str {
        match self {
            FittedPredictor::Csa(_) => "CSA",
            FittedPredictor::Jma(_) => "JMA",
            FittedPredictor::L1qr(_) => "L1QR",
            FittedPredictor::Bag(_) => "BAG",
            FittedPredictor::L2qr(_) => "L2QR",
            FittedPredictor::Unconditional { .. } => "UQ",
        }
    }

    /// Prediction for one full dataset row.
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        match self {
            FittedPredictor::Csa(p) => p.predict(row),
            FittedPredictor::Jma(p) => p.predict(row),
            FittedPredictor::L1qr(p) | FittedPredictor::L2qr(p) => p.predict(row),
            FittedPredictor::Bag(p) => p.predict(row),
            FittedPredictor::Unconditional { value } => Ok(*value),
        }
    }

    /// Selected subset size, for CSA only.
    pub fn k_hat(&self) -> Option<usize> {
        match self {
            FittedPredictor::Csa(p) => Some(p.k_hat()),
            _ => None,
        }
    }
}

/// Versioned JSON envelope around a fitted predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorDocument {
    pub schema_version: u32,
    pub method: String,
    pub tau: f64,
    pub predictor: FittedPredictor,
}

impl PredictorDocument {
    pub fn new(predictor: FittedPredictor, tau: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            method: predictor.label().to_string(),
            tau,
            predictor,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(CsaError::SchemaVersion(doc.schema_version));
        }
        Ok(doc)
    }
}
