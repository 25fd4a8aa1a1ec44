use std::path::Path;

use crate::data::Dataset;
use crate::error::{CsaError, Result};

/// Name given to the column added by `add_intercept`.
pub const INTERCEPT_NAME: &str = "(intercept)";

/// A dataset read from CSV plus the rows that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCsv {
    pub data: Dataset,
    /// File line numbers of rows whose selected cells were all blank.
    pub dropped_lines: Vec<u64>,
}

/// Column names of a CSV file's header row.
pub fn read_header(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.iter().all(String::is_empty) {
        return Err(CsaError::EmptyFile);
    }
    Ok(headers)
}

/// Reads `outcome` and `regressors` (by header name) from a CSV file.
///
/// Rows whose selected cells are all blank are dropped and reported. Any
/// other empty, unparsable or non-finite cell is an error that names the file
/// line and the column.
pub fn load_csv(
    path: impl AsRef<Path>,
    outcome: &str,
    regressors: &[String],
    add_intercept: bool,
) -> Result<LoadedCsv> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path.as_ref())?;
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(CsaError::EmptyFile);
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CsaError::MissingColumn(name.to_string()))
    };
    let y_idx = find(outcome)?;
    let x_idx = regressors
        .iter()
        .map(|r| find(r))
        .collect::<Result<Vec<_>>>()?;

    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut dropped_lines = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let selected = std::iter::once(y_idx).chain(x_idx.iter().copied());
        if selected
            .clone()
            .all(|i| rec.get(i).is_none_or(str::is_empty))
        {
            dropped_lines.push(line);
            continue;
        }
        let cell = |i: usize| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            let column = headers[i].to_string();
            let v: f64 = raw.parse().map_err(|_| CsaError::NonNumeric {
                row: line as usize,
                column: column.clone(),
                value: raw.to_string(),
            })?;
            if !v.is_finite() {
                return Err(CsaError::NonFinite {
                    row: line as usize,
                    column,
                    value: raw.to_string(),
                });
            }
            Ok(v)
        };
        y.push(cell(y_idx)?);
        for &i in &x_idx {
            x.push(cell(i)?);
        }
    }
    if y.is_empty() {
        return Err(CsaError::EmptyFile);
    }
    let data = if regressors.is_empty() {
        if !add_intercept {
            return Err(CsaError::InvalidData("no regressors selected".into()));
        }
        let n = y.len();
        Dataset::from_row_major(y, vec![1.0; n], vec![INTERCEPT_NAME.to_string()], Some(0))?
    } else {
        let p = regressors.len();
        let n = y.len();
        let ones = (0..p).find(|&j| (0..n).all(|i| x[i * p + j] == 1.0));
        let d = Dataset::from_row_major(
            y,
            x,
            regressors.to_vec(),
            if add_intercept { None } else { ones },
        )?;
        if add_intercept {
            d.with_intercept(INTERCEPT_NAME)
        } else {
            d
        }
    };
    Ok(LoadedCsv {
        data,
        dropped_lines,
    })
}
