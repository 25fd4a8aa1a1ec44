//! The outcome/regressor container shared by every estimator.

use crate::error::{CsaError, Result};

/// Outcome vector plus an `n x p` regressor matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    x: Vec<f64>,
    n: usize,
    p: usize,
    names: Vec<String>,
    intercept_col: Option<usize>,
}

impl Dataset {
    /// Builds a dataset from row-major regressor values.
    ///
    /// `intercept_col`, when set, must point at a column that is exactly one
    /// in every row.
    pub fn from_row_major(
        y: Vec<f64>,
        x: Vec<f64>,
        names: Vec<String>,
        intercept_col: Option<usize>,
    ) -> Result<Self> {
        let n = y.len();
        let p = names.len();
        if n == 0 {
            return Err(CsaError::InvalidData("no observations".into()));
        }
        if p == 0 {
            return Err(CsaError::InvalidData("no regressors".into()));
        }
        if x.len() != n * p {
            return Err(CsaError::DimensionMismatch {
                expected: n * p,
                got: x.len(),
            });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(CsaError::InvalidData(format!("outcome {i} is not finite")));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(CsaError::InvalidData(format!(
                "regressor `{}` at row {} is not finite",
                names[i % p],
                i / p
            )));
        }
        if let Some(c) = intercept_col {
            if c >= p {
                return Err(CsaError::InvalidData(format!(
                    "intercept column {c} out of range for {p} columns"
                )));
            }
            if (0..n).any(|i| x[i * p + c] != 1.0) {
                return Err(CsaError::InvalidData(format!(
                    "intercept column `{}` is not all ones",
                    names[c]
                )));
            }
        }
        Ok(Self {
            y,
            x,
            n,
            p,
            names,
            intercept_col,
        })
    }

    /// Builds a dataset from one `Vec` per row.
    pub fn from_rows(
        y: Vec<f64>,
        rows: Vec<Vec<f64>>,
        names: Vec<String>,
        intercept_col: Option<usize>,
    ) -> Result<Self> {
        if rows.len() != y.len() {
            return Err(CsaError::DimensionMismatch {
                expected: y.len(),
                got: rows.len(),
            });
        }
        let p = names.len();
        let mut x = Vec::with_capacity(rows.len() * p);
        for r in &rows {
            if r.len() != p {
                return Err(CsaError::DimensionMismatch {
                    expected: p,
                    got: r.len(),
                });
            }
            x.extend_from_slice(r);
        }
        Self::from_row_major(y, x, names, intercept_col)
    }

    /// Like [`Dataset::from_rows`] with generated names `x1..xp`.
    pub fn from_rows_unnamed(
        y: Vec<f64>,
        rows: Vec<Vec<f64>>,
        intercept_col: Option<usize>,
    ) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        Self::from_rows(y, rows, names, intercept_col)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn intercept_col(&self) -> Option<usize> {
        self.intercept_col
    }

    /// Row-major regressor storage.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.x[i * self.p + j]).collect()
    }

    /// Copies the selected columns into a fresh row-major block.
    pub fn gather(&self, cols: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * cols.len());
        for i in 0..self.n {
            let row = self.row(i);
            out.extend(cols.iter().map(|&c| row[c]));
        }
        out
    }

    /// Subsample of rows (repetition allowed, as in bootstrap resampling).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(rows.len() * self.p);
        let mut y = Vec::with_capacity(rows.len());
        for &i in rows {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Dataset {
            y,
            x,
            n: rows.len(),
            p: self.p,
            names: self.names.clone(),
            intercept_col: self.intercept_col,
        }
    }

    /// Returns a copy with a constant column prepended as column 0.
    pub fn with_intercept(&self, name: &str) -> Dataset {
        let p = self.p + 1;
        let mut x = Vec::with_capacity(self.n * p);
        for i in 0..self.n {
            x.push(1.0);
            x.extend_from_slice(self.row(i));
        }
        let mut names = Vec::with_capacity(p);
        names.push(name.to_string());
        names.extend(self.names.iter().cloned());
        Dataset {
            y: self.y.clone(),
            x,
            n: self.n,
            p,
            names,
            intercept_col: Some(0),
        }
    }

    /// Replaces the outcome vector, keeping the regressors.
    pub fn with_outcome(&self, y: Vec<f64>) -> Result<Dataset> {
        if y.len() != self.n {
            return Err(CsaError::DimensionMismatch {
                expected: self.n,
                got: y.len(),
            });
        }
        Dataset::from_row_major(y, self.x.clone(), self.names.clone(), self.intercept_col)
    }

    pub(crate) fn check_cols(&self, cols: &[usize]) -> Result<()> {
        if cols.is_empty() {
            return Err(CsaError::InvalidParameter("empty column list".into()));
        }
        for (i, &c) in cols.iter().enumerate() {
            if c >= self.p {
                return Err(CsaError::InvalidParameter(format!(
                    "column {c} out of range for {} columns",
                    self.p
                )));
            }
            if cols[..i].contains(&c) {
                return Err(CsaError::InvalidParameter(format!("duplicate column {c}")));
            }
        }
        Ok(())
    }
}
