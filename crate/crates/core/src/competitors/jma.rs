//! Jackknife model averaging over a caller-ordered list of models.

use minilp::{ComparisonOp, OptimizationDirection, Problem as Lp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, CsaError, Result};
use crate::qr::vertex::dot;
use crate::qr::{
    check_tau, predict_row, rho, solve, solve_holdout, Problem, QuantileFit, SolverOptions,
};

/// Simplex-weighted combination of full-sample quantile regressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JmaPredictor {
    pub tau: f64,
    pub models: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
    pub fits: Vec<QuantileFit>,
    /// Leave-one-out mean check loss at `weights`.
    pub cv_objective: f64,
    pub n_columns: usize,
}

impl JmaPredictor {
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        jma_predict(self, row)
    }
}

/// Nested prefixes `{0}, {0,1}, ..., {0..p-1}` of the dataset columns.
pub fn nested_models(p: usize) -> Vec<Vec<usize>> {
    (1..=p).map(|m| (0..m).collect()).collect()
}

/// Fits every model, computes its leave-one-out predictions and chooses
/// simplex weights minimizing the leave-one-out check loss of the combination.
pub fn fit_jma(
    data: &Dataset,
    tau: f64,
    models: &[Vec<usize>],
    opts: &SolverOptions,
) -> Result<JmaPredictor> {
    check_tau(tau)?;
    opts.validate()?;
    if models.is_empty() {
        return Err(invalid("JMA needs at least one model"));
    }
    let n = data.n();
    for m in models {
        data.check_cols(m)?;
        if n < m.len() + 2 {
            return Err(CsaError::InsufficientObservations(format!(
                "{n} observations cannot support leave-one-out fits with {} columns",
                m.len()
            )));
        }
    }
    let per_model: Vec<(QuantileFit, Vec<f64>)> = models
        .par_iter()
        .map(|cols| {
            let prob = Problem::from_dataset(data, cols, tau);
            let solved = solve(&prob, opts);
            let loo: Vec<f64> = (0..n)
                .map(|i| {
                    dot(
                        prob.row(i),
                        &solve_holdout(&prob, solved.vertex.as_ref(), &[i], opts),
                    )
                })
                .collect();
            (solved.into_fit(&prob, cols.clone()), loo)
        })
        .collect();
    let loo: Vec<&[f64]> = per_model.iter().map(|(_, p)| p.as_slice()).collect();
    let weights = simplex_weights(data.y(), &loo, tau)?;
    let cv_objective = combined_loss(data.y(), &loo, &weights, tau);
    Ok(JmaPredictor {
        tau,
        models: models.to_vec(),
        weights,
        fits: per_model.into_iter().map(|(f, _)| f).collect(),
        cv_objective,
        n_columns: data.p(),
    })
}

/// `sum_m w_m x(m)' theta(m)` for a full dataset row.
pub fn jma_predict(p: &JmaPredictor, row: &[f64]) -> Result<f64> {
    if row.len() != p.n_columns {
        return Err(CsaError::DimensionMismatch {
            expected: p.n_columns,
            got: row.len(),
        });
    }
    let mut s = 0.0;
    for (w, f) in p.weights.iter().zip(&p.fits) {
        s += w * predict_row(f, row)?;
    }
    Ok(s)
}

/// Mean check loss of `y_i - sum_m w_m preds[m][i]`.
pub fn combined_loss(y: &[f64], preds: &[&[f64]], w: &[f64], tau: f64) -> f64 {
    let n = y.len();
    (0..n)
        .map(|i| {
            let fit: f64 = preds.iter().zip(w).map(|(p, w)| w * p[i]).sum();
            rho(y[i] - fit, tau)
        })
        .sum::<f64>()
        / n as f64
}

/// Minimizes [`combined_loss`] over the unit simplex as a linear program:
/// `min sum_i tau u_i + (1 - tau) v_i` subject to
/// `sum_m w_m preds[m][i] + u_i - v_i = y_i`, `sum_m w_m = 1`, all variables
/// non-negative.
pub fn simplex_weights(y: &[f64], preds: &[&[f64]], tau: f64) -> Result<Vec<f64>> {
    let m = preds.len();
    if m == 1 {
        return Ok(vec![1.0]);
    }
    let n = y.len() as f64;
    let mut lp = Lp::new(OptimizationDirection::Minimize);
    let w: Vec<_> = (0..m).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    for (i, &yi) in y.iter().enumerate() {
        let u = lp.add_var(tau / n, (0.0, f64::INFINITY));
        let v = lp.add_var((1.0 - tau) / n, (0.0, f64::INFINITY));
        let mut terms: Vec<_> = w.iter().zip(preds).map(|(&wv, p)| (wv, p[i])).collect();
        terms.push((u, 1.0));
        terms.push((v, -1.0));
        lp.add_constraint(terms.as_slice(), ComparisonOp::Eq, yi);
    }
    let ones: Vec<_> = w.iter().map(|&wv| (wv, 1.0)).collect();
    lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    let sol = lp
        .solve()
        .map_err(|e| CsaError::Numerical(format!("JMA weight program failed: {e}")))?;
    let mut weights: Vec<f64> = w.iter().map(|&v| sol[v].max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(CsaError::Numerical("JMA weights collapsed to zero".into()));
    }
    weights.iter_mut().for_each(|v| *v /= total);
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixes() {
        assert_eq!(nested_models(3), vec![vec![0], vec![0, 1], vec![0, 1, 2]]);
    }

    #[test]
    fn weights_pick_the_exact_model() {
        let y = [1.0, 2.0, 3.0, 4.0];
        let good = [1.0, 2.0, 3.0, 4.0];
        let bad = [0.0, 0.0, 0.0, 0.0];
        let w = simplex_weights(&y, &[&bad, &good], 0.5).unwrap();
        assert!((w[1] - 1.0).abs() < 1e-12 && w[0].abs() < 1e-12);
    }
}
