#![allow(clippy::needless_range_loop)]

use csaqr::qr::{
    belloni_lambda, check_loss, fit_qr, fit_qr_l2, mean_check_loss, predict, psi,
    residual_sign_counts, QuantileFit, SolverOptions,
};
use csaqr::Dataset;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum check loss over every basic solution `theta = X_h^-1 y_h`.
fn enumerate_vertices(d: &Dataset, tau: f64) -> f64 {
    let (n, p) = (d.n(), d.p());
    let cols: Vec<usize> = (0..p).collect();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..p).collect();
    loop {
        if let Some(theta) = solve_square(d, &idx) {
            best = best.min(mean_check_loss(d, &cols, &theta, tau));
        }
        // Next combination in lexicographic order.
        let Some(i) = (0..p).rev().find(|&i| idx[i] != i + n - p) else {
            return best;
        };
        idx[i] += 1;
        for j in i + 1..p {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn solve_square(d: &Dataset, rows: &[usize]) -> Option<Vec<f64>> {
    let p = rows.len();
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| {
            let mut v = d.row(r).to_vec();
            v.push(d.y()[r]);
            v
        })
        .collect();
    for c in 0..p {
        let piv = (c..p).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[piv][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    Some((0..p).map(|i| a[i][p] / a[i][i]).collect())
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize, discrete: bool) -> Dataset {
    let draw = |rng: &mut ChaCha8Rng| {
        if discrete {
            rng.random_range(-3..=3) as f64
        } else {
            rng.random::<f64>() * 4.0 - 2.0
        }
    };
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut r = vec![1.0];
            for _ in 1..p {
                r.push(draw(rng));
            }
            r
        })
        .collect();
    let y = (0..n).map(|_| draw(rng)).collect();
    Dataset::from_rows_unnamed(y, rows, Some(0)).unwrap()
}

#[test]
fn fit_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = SolverOptions::default();
    for case in 0..300 {
        let p = 1 + case % 3;
        let n = rng.random_range(p + 1..=25);
        let discrete = case % 4 == 3;
        let d = random_dataset(&mut rng, n, p, discrete);
        let tau = [0.05, 0.25, 0.5, 0.7, 0.95][case % 5];
        let fit = fit_qr(&d, &(0..p).collect::<Vec<_>>(), tau, &opts).unwrap();
        let best = enumerate_vertices(&d, tau);
        assert!(best.is_finite());
        assert!(
            (fit.objective - best).abs() <= 1e-9 * (1.0 + best),
            "case {case}: {} vs {best}",
            fit.objective
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn residual_signs_bracket_tau(seed in any::<u64>(), n in 5usize..60, p in 1usize..5, tau in 0.02f64..0.98) {
        prop_assume!(n > p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_dataset(&mut rng, n, p, seed % 3 == 0);
        let fit = fit_qr(&d, &(0..p).collect::<Vec<_>>(), tau, &SolverOptions::default()).unwrap();
        let c = residual_sign_counts(&fit, &d).unwrap();
        let target = n as f64 * tau;
        prop_assert!(c.neg as f64 <= target + 1e-9);
        prop_assert!(target <= (c.neg + c.zero) as f64 + 1e-9);
    }
}

fn continuous(seed: u64, n: usize, p: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_dataset(&mut rng, n, p, false)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn scale_equivariance(seed in any::<u64>(), c in 0.01f64..100.0, tau in 0.05f64..0.95) {
        let d = continuous(seed, 30, 3);
        let cols = [0, 1, 2];
        let a = fit_qr(&d, &cols, tau, &SolverOptions::default()).unwrap();
        let scaled = d.with_outcome(d.y().iter().map(|v| c * v).collect()).unwrap();
        let b = fit_qr(&scaled, &cols, tau, &SolverOptions::default()).unwrap();
        let expect: Vec<f64> = a.theta.iter().map(|t| c * t).collect();
        prop_assert!(close(&b.theta, &expect, 1e-7));
    }

    #[test]
    fn flip_symmetry(seed in any::<u64>(), tau in 0.05f64..0.95) {
        let d = continuous(seed, 30, 3);
        let cols = [0, 1, 2];
        let a = fit_qr(&d, &cols, tau, &SolverOptions::default()).unwrap();
        let flipped = d.with_outcome(d.y().iter().map(|v| -v).collect()).unwrap();
        let b = fit_qr(&flipped, &cols, 1.0 - tau, &SolverOptions::default()).unwrap();
        let expect: Vec<f64> = a.theta.iter().map(|t| -t).collect();
        prop_assert!(close(&b.theta, &expect, 1e-7));
    }

    #[test]
    fn check_loss_mirror(u in -1e3f64..1e3, tau in 0.001f64..0.999) {
        let a = check_loss(u, tau).unwrap();
        let b = check_loss(-u, 1.0 - tau).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + u.abs()));
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn psi_is_a_subgradient(seed in any::<u64>(), tau in 0.05f64..0.95, shift in proptest::collection::vec(-2.0f64..2.0, 3)) {
        let d = continuous(seed, 25, 3);
        let cols = [0, 1, 2];
        let fit = fit_qr(&d, &cols, tau, &SolverOptions::default()).unwrap();
        let other: Vec<f64> = fit.theta.iter().zip(&shift).map(|(t, s)| t + s).collect();
        let n = d.n() as f64;
        let mut lin = 0.0;
        for i in 0..d.n() {
            let r = d.y()[i] - predict(&fit, d.row(i)).unwrap();
            let diff: f64 = d.row(i).iter().zip(&shift).map(|(x, s)| -x * s).sum();
            lin += psi(r, tau) * diff / n;
        }
        let at_other = mean_check_loss(&d, &cols, &other, tau);
        prop_assert!(at_other >= fit.objective + lin - 1e-9);
    }
}

#[test]
fn predict_matches_naive_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let theta: Vec<f64> = (0..6).map(|_| rng.random::<f64>() - 0.5).collect();
        let x: Vec<f64> = (0..6).map(|_| rng.random::<f64>() * 10.0).collect();
        let fit = QuantileFit {
            cols: (0..6).collect(),
            theta: theta.clone(),
            tau: 0.5,
            objective: 0.0,
            iterations: 0,
            converged: true,
            rank_deficient: false,
        };
        let mut s = 0.0;
        for j in 0..6 {
            s += theta[j] * x[j];
        }
        assert!((predict(&fit, &x).unwrap() - s).abs() < 1e-12);
        let mut e = vec![0.0; 6];
        e[2] = 1.0;
        assert_eq!(predict(&fit, &e).unwrap(), theta[2]);
    }
}

/// Penalized criterion minimized by projected-free subgradient descent with
/// a decaying step, keeping the best iterate.
fn l2_subgradient_oracle(d: &Dataset, tau: f64, lambda: f64) -> f64 {
    let p = d.p();
    let n = d.n() as f64;
    let crit = |t: &[f64]| {
        mean_check_loss(d, &(0..p).collect::<Vec<_>>(), t, tau)
            + lambda / n * t[1..].iter().map(|v| v * v).sum::<f64>()
    };
    let mut theta = vec![0.0; p];
    let mut best = crit(&theta);
    for it in 0..200_000 {
        let mut g = vec![0.0; p];
        for i in 0..d.n() {
            let r = d.y()[i] - d.row(i).iter().zip(&theta).map(|(x, t)| x * t).sum::<f64>();
            let s = psi(r, tau);
            for j in 0..p {
                g[j] -= s * d.row(i)[j] / n;
            }
        }
        for j in 1..p {
            g[j] += 2.0 * lambda / n * theta[j];
        }
        let step = 0.5 / (1.0 + it as f64).sqrt();
        for j in 0..p {
            theta[j] -= step * g[j];
        }
        best = best.min(crit(&theta));
    }
    best
}

#[test]
fn l2_fit_agrees_with_subgradient_oracle() {
    let d = continuous(5, 20, 3);
    for lambda in [0.1, 1.0, 10.0] {
        let fit = fit_qr_l2(&d, &[0, 1, 2], 0.5, lambda, &SolverOptions::default()).unwrap();
        let oracle = l2_subgradient_oracle(&d, 0.5, lambda);
        assert!(
            fit.objective <= oracle + 1e-9,
            "{} vs {oracle}",
            fit.objective
        );
        assert!(oracle - fit.objective < 1e-3);
    }
}

#[test]
fn belloni_monte_carlo_stability() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| vec![rng.sample::<f64, _>(rand_distr::StandardNormal)])
        .collect();
    let d = Dataset::from_rows_unnamed(vec![0.0; 200], rows, None).unwrap();
    let a = belloni_lambda(&d, &[0], 0.5, 0.9, 2000, 1).unwrap();
    let b = belloni_lambda(&d, &[0], 0.5, 0.9, 4000, 2).unwrap();
    // The 0.9 quantile of |N(0, n tau(1-tau))| is about 1.645 * sqrt(50).
    let expected = 1.6449 * (200.0f64 * 0.25).sqrt();
    assert!((a - expected).abs() < 0.08 * expected);
    assert!((a - b).abs() < 0.08 * expected);
}
