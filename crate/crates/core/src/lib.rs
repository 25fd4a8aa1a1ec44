//! Complete subset averaging (CSA) for conditional quantile prediction.
//!
//! The crate fits check-loss quantile regressions on every size-`k` subset of
//! the regressors (or a uniform sample of them), averages their predictions
//! with equal weights and picks `k` by cross-validation. Baseline methods,
//! a Monte Carlo study runner and two out-of-sample evaluation protocols are
//! included.
//!
//! ```
//! use csaqr::csa::{fit_csa, CsaConfig};
//! use csaqr::Dataset;
//!
//! let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![1.0, (i % 7) as f64, (i % 5) as f64]).collect();
//! let y: Vec<f64> = rows.iter().map(|r| 0.5 * r[1] - r[2] + 0.1 * r[1] * r[2]).collect();
//! let data = Dataset::from_rows_unnamed(y, rows, Some(0)).unwrap();
//! let csa = fit_csa(&data, 0.5, &CsaConfig::default()).unwrap();
//! assert!(csa.k_hat() >= 1 && csa.k_hat() <= 3);
//! let forecast = csa.predict(&[1.0, 3.0, 2.0]).unwrap();
//! assert!(forecast.is_finite());
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod competitors;
pub mod csa;
pub mod data;
pub mod empirical;
pub mod error;
pub mod predictor;
pub mod qr;
pub mod seed;
pub mod simulate;
pub mod subsets;

pub use csa::{CsaConfig, CsaPredictor, CvCurve, CvMode};
pub use data::Dataset;
pub use error::{CsaError, Result};
pub use predictor::{FittedPredictor, MethodSpec, PredictorDocument};
pub use qr::{QuantileFit, SolverOptions};
