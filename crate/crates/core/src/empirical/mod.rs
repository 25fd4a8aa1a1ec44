//! Out-of-sample evaluation on user data: a rolling-window forecasting
//! protocol and a repeated random-split protocol, both scored by R^2
//! against the unconditional sample quantile.

mod load;
mod protocols;

use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::qr::check_tau;

pub use load::{load_csv, read_header, LoadedCsv, INTERCEPT_NAME};
pub(crate) use protocols::mean_sd;
pub use protocols::{
    oos_r2, random_split_eval, rolling_forecast, split_indices, ForecastRecord, MethodSummary,
    RollingResult, RollingSpec, SplitRecord, SplitResult, SplitSpec, BENCHMARK,
};

/// Empirical `tau`-quantile as the smallest minimizer of the mean check
/// loss: the order statistic `y_(ceil(n tau))`.
pub fn unconditional_quantile(y: &[f64], tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if y.is_empty() {
        return Err(invalid("cannot take the quantile of an empty sample"));
    }
    let mut v = y.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let t = n as f64 * tau;
    // n * tau that is an integer up to rounding keeps the lower order statistic.
    let j = if (t - t.round()).abs() <= 1e-9 * n as f64 {
        t.round()
    } else {
        t.ceil()
    };
    let j = (j as usize).clamp(1, n);
    Ok(v[j - 1])
}

/// Writes serializable records as a headed CSV table.
pub fn write_csv<T: Serialize>(records: &[T], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
