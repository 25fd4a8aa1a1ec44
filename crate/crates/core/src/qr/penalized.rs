//! L1- and squared-L2-penalized quantile regression.
//!
//! Criteria are stated in mean form:
//! `(1/n) sum rho(y - x'theta) + (lambda/n) * pen(theta)`, where the penalty
//! skips the dataset's intercept column.

use rand::Rng;

use super::{check_tau, ipm, solve, vertex::dot, Problem, QuantileFit, SolverOptions};
use crate::data::Dataset;
use crate::error::{invalid, CsaError, Result};

fn penalized_mask(data: &Dataset, cols: &[usize]) -> Vec<bool> {
    cols.iter()
        .map(|&c| Some(c) != data.intercept_col())
        .collect()
}

/// L1-penalized fit with a common `lambda` for every non-intercept column.
pub fn fit_qr_l1(
    data: &Dataset,
    cols: &[usize],
    tau: f64,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<QuantileFit> {
    fit_qr_l1_weighted(data, cols, tau, &vec![lambda; cols.len()], opts)
}

/// L1-penalized fit with one penalty level per column (intercept entries
/// are ignored). Solved exactly as a check-loss problem on the data
/// augmented with `+-lambda_j e_j` pseudo-observations.
pub fn fit_qr_l1_weighted(
    data: &Dataset,
    cols: &[usize],
    tau: f64,
    lambdas: &[f64],
    opts: &SolverOptions,
) -> Result<QuantileFit> {
    check_tau(tau)?;
    opts.validate()?;
    data.check_cols(cols)?;
    if lambdas.len() != cols.len() {
        return Err(CsaError::DimensionMismatch {
            expected: cols.len(),
            got: lambdas.len(),
        });
    }
    if lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(invalid("penalty levels must be finite and non-negative"));
    }
    let mask = penalized_mask(data, cols);
    let mut prob = Problem::from_dataset(data, cols, tau);
    let p = cols.len();
    for j in 0..p {
        if !mask[j] || lambdas[j] == 0.0 {
            continue;
        }
        for s in [1.0, -1.0] {
            let mut row = vec![0.0; p];
            row[j] = s * lambdas[j];
            prob.x.extend_from_slice(&row);
            prob.y.push(0.0);
            prob.n += 1;
        }
    }
    let solved = solve(&prob, opts);
    let n = data.n() as f64;
    let total = prob.objective(&solved.theta) * prob.n as f64;
    Ok(QuantileFit {
        cols: cols.to_vec(),
        objective: total / n,
        theta: solved.theta,
        tau,
        iterations: solved.iterations,
        converged: solved.converged,
        rank_deficient: solved.rank_deficient,
    })
}

/// Squared-L2-penalized fit: `(1/n) sum rho + (lambda/n) * ||theta_pen||^2`.
pub fn fit_qr_l2(
    data: &Dataset,
    cols: &[usize],
    tau: f64,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<QuantileFit> {
    check_tau(tau)?;
    opts.validate()?;
    data.check_cols(cols)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid("lambda must be finite and non-negative"));
    }
    if lambda == 0.0 {
        return super::fit_qr(data, cols, tau, opts);
    }
    let mask = penalized_mask(data, cols);
    let prob = Problem::from_dataset(data, cols, tau);
    let hess: Vec<f64> = mask
        .iter()
        .map(|&m| if m { 2.0 * lambda } else { 0.0 })
        .collect();
    let out = ipm::solve(&prob.x, &prob.y, prob.n, prob.p, tau, Some(&hess), opts);
    let objective = l2_criterion(&prob, &out.theta, &mask, lambda);
    Ok(QuantileFit {
        cols: cols.to_vec(),
        theta: out.theta,
        tau,
        objective,
        iterations: out.iterations,
        converged: out.converged,
        rank_deficient: false,
    })
}

fn l2_criterion(prob: &Problem, theta: &[f64], mask: &[bool], lambda: f64) -> f64 {
    let pen: f64 = theta
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(t, _)| t * t)
        .sum();
    prob.objective(theta) + lambda * pen / prob.n as f64
}

/// Simulated pivotal penalty level for L1 quantile regression.
///
/// Columns are rescaled to unit sample second moment; the returned value is
/// the `confidence` quantile of `max_j |sum_i (tau - 1{U_i <= tau}) x_ij|`
/// over `n_sim` draws of i.i.d. uniforms `U`.
pub fn belloni_lambda(
    data: &Dataset,
    cols: &[usize],
    tau: f64,
    confidence: f64,
    n_sim: usize,
    seed: u64,
) -> Result<f64> {
    check_tau(tau)?;
    data.check_cols(cols)?;
    if n_sim < 100 {
        return Err(invalid(format!("n_sim must be at least 100, got {n_sim}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid(format!("confidence {confidence} outside (0, 1)")));
    }
    let n = data.n();
    let mut scaled: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for &c in cols {
        let col = data.column(c);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        if var == 0.0 {
            return Err(CsaError::DegenerateColumn(data.names()[c].clone()));
        }
        let rms = (col.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        scaled.push(col.iter().map(|v| v / rms).collect());
    }
    let mut rng = crate::seed::rng(seed);
    let mut score = vec![0.0; n];
    let mut maxima: Vec<f64> = (0..n_sim)
        .map(|_| {
            for s in score.iter_mut() {
                let u: f64 = rng.random();
                *s = if u <= tau { tau - 1.0 } else { tau };
            }
            scaled
                .iter()
                .map(|col| dot(col, &score).abs())
                .fold(0.0_f64, f64::max)
        })
        .collect();
    maxima.sort_by(f64::total_cmp);
    let idx = ((confidence * n_sim as f64).ceil() as usize).clamp(1, n_sim) - 1;
    Ok(maxima[idx])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qr::{fit_qr, mean_check_loss};
    use rand::Rng;

    fn sample(n: usize, seed: u64) -> Dataset {
        let mut rng = crate::seed::rng(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                vec![
                    1.0,
                    rng.random::<f64>() * 2.0 - 1.0,
                    rng.random::<f64>() * 4.0,
                ]
            })
            .collect();
        let y = rows
            .iter()
            .map(|r| 0.5 + 2.0 * r[1] - 0.7 * r[2] + rng.random::<f64>() - 0.5)
            .collect();
        Dataset::from_rows_unnamed(y, rows, Some(0)).unwrap()
    }

    fn l1_criterion(d: &Dataset, theta: &[f64], lambda: f64, tau: f64) -> f64 {
        mean_check_loss(d, &[0, 1, 2], theta, tau)
            + lambda / d.n() as f64 * (theta[1].abs() + theta[2].abs())
    }

    #[test]
    fn l1_zero_lambda_matches_plain_fit() {
        let d = sample(40, 1);
        let opts = SolverOptions::default();
        let a = fit_qr(&d, &[0, 1, 2], 0.4, &opts).unwrap();
        let b = fit_qr_l1(&d, &[0, 1, 2], 0.4, 0.0, &opts).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-12);
        for (x, y) in a.theta.iter().zip(&b.theta) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn l1_huge_lambda_leaves_intercept_quantile() {
        let d = sample(41, 2);
        let f = fit_qr_l1(&d, &[0, 1, 2], 0.3, 1e6, &SolverOptions::default()).unwrap();
        assert!(f.theta[1].abs() < 1e-10 && f.theta[2].abs() < 1e-10);
        let q = fit_qr(&d, &[0], 0.3, &SolverOptions::default()).unwrap();
        assert!((f.theta[0] - q.theta[0]).abs() < 1e-9);
    }

    #[test]
    fn l1_beats_unpenalized_theta_on_penalized_criterion() {
        let d = sample(30, 3);
        let opts = SolverOptions::default();
        let lambda = 3.0;
        let plain = fit_qr(&d, &[0, 1, 2], 0.5, &opts).unwrap();
        let pen = fit_qr_l1(&d, &[0, 1, 2], 0.5, lambda, &opts).unwrap();
        let at_plain = l1_criterion(&d, &plain.theta, lambda, 0.5);
        assert!((pen.objective - l1_criterion(&d, &pen.theta, lambda, 0.5)).abs() < 1e-12);
        assert!(pen.objective <= at_plain + 1e-12);
    }

    #[test]
    fn l2_limits() {
        let d = sample(35, 4);
        let opts = SolverOptions::default();
        let a = fit_qr(&d, &[0, 1, 2], 0.5, &opts).unwrap();
        let b = fit_qr_l2(&d, &[0, 1, 2], 0.5, 0.0, &opts).unwrap();
        assert_eq!(a.theta, b.theta);
        let big = fit_qr_l2(&d, &[0, 1, 2], 0.5, 1e9, &opts).unwrap();
        assert!(big.theta[1].abs() < 1e-6 && big.theta[2].abs() < 1e-6);
    }

    #[test]
    fn belloni_is_deterministic_and_scale_free() {
        let d = sample(60, 5);
        let a = belloni_lambda(&d, &[1, 2], 0.5, 0.9, 500, 11).unwrap();
        let b = belloni_lambda(&d, &[1, 2], 0.5, 0.9, 500, 11).unwrap();
        assert_eq!(a, b);
        let rows: Vec<Vec<f64>> = (0..d.n())
            .map(|i| vec![1.0, d.row(i)[1] * 7.0, d.row(i)[2] * 0.01])
            .collect();
        let scaled = Dataset::from_rows_unnamed(d.y().to_vec(), rows, Some(0)).unwrap();
        let c = belloni_lambda(&scaled, &[1, 2], 0.5, 0.9, 500, 11).unwrap();
        assert!((a - c).abs() < 1e-9 * a);
        assert!(belloni_lambda(&d, &[0, 1], 0.5, 0.9, 500, 11).is_err());
        assert!(belloni_lambda(&d, &[1], 0.5, 0.9, 50, 11).is_err());
    }
}
